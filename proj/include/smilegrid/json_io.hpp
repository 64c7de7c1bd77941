#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "smilegrid/baseline.hpp"
#include "smilegrid/grid_calibrator.hpp"
#include "smilegrid/pipeline.hpp"
#include "smilegrid/sabr.hpp"

namespace smilegrid {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Throws validation_error unless `doc` carries the expected schema_version.
void require_schema(const json& doc, const std::string& what);

json to_json(const MarketSmile& smile);
MarketSmile smile_from_json(const json& j);

json to_json(const CalibResult& result);

CalibConfig calib_config_from_json(const json& j, const CalibConfig& defaults = {});

json to_json(const Coupon& coupon);
Contract contract_from_json(const json& doc);

json load_json_file(const std::string& path);
void save_json_file(const json& doc, const std::string& path);

Variant variant_from_name(const std::string& name);
const char* variant_name(Variant v);

} // namespace smilegrid
