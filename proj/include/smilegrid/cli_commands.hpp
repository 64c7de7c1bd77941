#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace smilegrid {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitValidation = 2;

// One resolved command invocation.
struct RunManifest {
    std::string command;
    std::string input_path;
    std::string output_path;
    nlohmann::json overrides = nlohmann::json::object();
    std::optional<std::uint64_t> seed; // overrides the input file's seed
    int workers = 1;
    bool trace = false;
    std::string trace_path;      // defaults to <output>.trace.csv
    std::string stats_path;      // defaults to <output>.stats.csv
    std::string builder_override; // table: shadows the input file's builder
    std::string model_override;   // table: shadows the input file's model name
};

int cmd_calibrate(const RunManifest& manifest);
int cmd_table(const RunManifest& manifest);
int cmd_sweep(const RunManifest& manifest);

} // namespace smilegrid
