#include <CLI11.hpp>
#include <json.hpp>

#include "smilegrid/cli_commands.hpp"
#include "smilegrid/parallel.hpp"

namespace {

void add_common(CLI::App* cmd, smilegrid::RunManifest& m) {
    cmd->add_option("--input", m.input_path, "Input JSON file")->required();
    cmd->add_option("--output", m.output_path, "Output file")->required();
    cmd->add_option("--workers", m.workers, "Worker threads (default: SMILEGRID_WORKERS or 1)");
    cmd->add_option("--seed", [&m](const CLI::results_t& res) {
        m.seed = std::stoull(res[0]);
        return true;
    }, "Override the input's random seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SABR grid calibration, probability lookup tables and pricing sweeps"};
    app.require_subcommand(1);

    smilegrid::RunManifest manifest;
    manifest.workers = smilegrid::default_workers();

    double epsilon = 0.0;
    std::string variant;
    double zeta = 0.0;
    std::string builder;
    std::string model;

    CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate smiles on an iterative grid");
    add_common(calibrate, manifest);
    calibrate->add_option("--epsilon", epsilon, "Target accuracy epsilon_sabr");
    calibrate->add_option("--variant", variant, "Configuration V1, V2 or V3");
    calibrate->add_flag("--trace", manifest.trace, "Write a per-iteration trace CSV");
    calibrate->add_option("--trace-file", manifest.trace_path, "Trace CSV path");

    CLI::App* table = app.add_subcommand("table", "Build a cumulative probability lookup table");
    add_common(table, manifest);
    table->add_option("--zeta", zeta, "Interpolation error cap");
    table->add_option("--builder", builder, "FS, CPU1, CPU2, DS1, DS2 or DS3");
    table->add_option("--model", model, "uniform, normal, lognormal or sabr-implied");
    table->add_option("--stats-file", manifest.stats_path, "Stats CSV path (appended)");

    CLI::App* sweep = app.add_subcommand("sweep", "Run an error-propagation sweep");
    add_common(sweep, manifest);

    CLI11_PARSE(app, argc, argv);

    if (calibrate->parsed()) {
        manifest.command = "calibrate";
        if (epsilon > 0.0) manifest.overrides["epsilon_sabr"] = epsilon;
        if (!variant.empty()) manifest.overrides["variant"] = variant;
        return smilegrid::cmd_calibrate(manifest);
    }
    if (table->parsed()) {
        manifest.command = "table";
        if (zeta > 0.0) manifest.overrides["zeta_cap"] = zeta;
        manifest.builder_override = builder;
        manifest.model_override = model;
        return smilegrid::cmd_table(manifest);
    }
    manifest.command = "sweep";
    return smilegrid::cmd_sweep(manifest);
}
