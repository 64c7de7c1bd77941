#include "smilegrid/json_io.hpp"

#include <fstream>

#include "smilegrid/errors.hpp"

namespace smilegrid {

void require_schema(const json& doc, const std::string& what) {
    if (!doc.is_object()) throw validation_error(what + ": expected a JSON object");
    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kSchemaVersion)
        throw validation_error(what + ": missing or unsupported schema_version (expected " +
                               std::to_string(kSchemaVersion) + ")");
}

namespace {

double require_number(const json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j[key].is_number())
        throw validation_error(what + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

} // namespace

json to_json(const MarketSmile& smile) {
    return json{{"k_minus", smile.k_minus},     {"k_atm", smile.k_atm},
                {"k_plus", smile.k_plus},       {"vol_minus", smile.vol_minus},
                {"vol_atm", smile.vol_atm},     {"vol_plus", smile.vol_plus},
                {"f0", smile.f0},               {"expiry", smile.expiry},
                {"beta", smile.beta}};
}

MarketSmile smile_from_json(const json& j) {
    MarketSmile s;
    s.k_minus = require_number(j, "k_minus", "smile");
    s.k_atm = require_number(j, "k_atm", "smile");
    s.k_plus = require_number(j, "k_plus", "smile");
    s.vol_minus = require_number(j, "vol_minus", "smile");
    s.vol_atm = require_number(j, "vol_atm", "smile");
    s.vol_plus = require_number(j, "vol_plus", "smile");
    s.f0 = require_number(j, "f0", "smile");
    s.expiry = require_number(j, "expiry", "smile");
    s.beta = j.value("beta", 0.5);
    s.validate();
    return s;
}

json to_json(const CalibResult& result) {
    json history = json::array();
    for (const IterationTrace& t : result.bounds_history)
        history.push_back(json{{"iteration", t.iteration},
                               {"alpha_s", t.alpha_s},
                               {"alpha_f", t.alpha_f},
                               {"rho_s", t.rho_s},
                               {"rho_f", t.rho_f},
                               {"min_error", t.min_error}});
    return json{{"alpha_star", result.alpha_star},
                {"rho_star", result.rho_star},
                {"s0_star", result.s0_star},
                {"final_error", result.final_error},
                {"iterations", result.iterations},
                {"converged", result.converged},
                {"bounds_history", history}};
}

Variant variant_from_name(const std::string& name) {
    if (name == "V1") return Variant::V1;
    if (name == "V2") return Variant::V2;
    if (name == "V3") return Variant::V3;
    throw validation_error("unknown variant '" + name + "' (expected V1, V2 or V3)");
}

const char* variant_name(Variant v) {
    switch (v) {
    case Variant::V1: return "V1";
    case Variant::V2: return "V2";
    case Variant::V3: return "V3";
    }
    return "?";
}

CalibConfig calib_config_from_json(const json& j, const CalibConfig& defaults) {
    CalibConfig cfg = defaults;
    if (j.is_null()) return cfg;
    if (!j.is_object()) throw validation_error("config: expected a JSON object");
    cfg.grid_m = j.value("grid_m", cfg.grid_m);
    cfg.grid_n = j.value("grid_n", cfg.grid_n);
    cfg.epsilon_sabr = j.value("epsilon_sabr", cfg.epsilon_sabr);
    if (j.contains("variant")) {
        if (!j["variant"].is_string()) throw validation_error("config: variant must be a string");
        cfg.variant = variant_from_name(j["variant"].get<std::string>());
    }
    cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
    if (j.contains("domain")) {
        const json& d = j["domain"];
        cfg.domain.alpha_lo = require_number(d, "alpha_lo", "domain");
        cfg.domain.alpha_hi = require_number(d, "alpha_hi", "domain");
        cfg.domain.rho_lo = require_number(d, "rho_lo", "domain");
        cfg.domain.rho_hi = require_number(d, "rho_hi", "domain");
    }
    cfg.refine_ratio = j.value("refine_ratio", cfg.refine_ratio);
    cfg.validate();
    return cfg;
}

json to_json(const Coupon& coupon) {
    return json{{"smile_a", to_json(coupon.smile_a)},
                {"smile_b", to_json(coupon.smile_b)},
                {"notional", coupon.spec.notional},
                {"delta", coupon.spec.delta},
                {"df", coupon.spec.df},
                {"strike", coupon.strike}};
}

Contract contract_from_json(const json& doc) {
    require_schema(doc, "contract");
    if (!doc.contains("coupons") || !doc["coupons"].is_array() || doc["coupons"].empty())
        throw validation_error("contract: needs a non-empty coupons array");
    Contract contract;
    for (const json& cj : doc["coupons"]) {
        Coupon c;
        if (!cj.contains("smile_a") || !cj.contains("smile_b"))
            throw validation_error("coupon: needs smile_a and smile_b");
        c.smile_a = smile_from_json(cj["smile_a"]);
        c.smile_b = smile_from_json(cj["smile_b"]);
        c.spec.notional = require_number(cj, "notional", "coupon");
        c.spec.delta = require_number(cj, "delta", "coupon");
        c.spec.df = require_number(cj, "df", "coupon");
        c.strike = cj.value("strike", 0.0);
        c.spec.validate();
        contract.coupons.push_back(c);
    }
    if (doc.contains("mc")) {
        const json& m = doc["mc"];
        contract.mc.samples = m.value("samples", contract.mc.samples);
        contract.mc.seed = m.value("seed", contract.mc.seed);
        contract.mc.copula_corr = m.value("copula_corr", contract.mc.copula_corr);
    }
    contract.mc.validate();
    return contract;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw validation_error(path + ": " + e.what());
    }
    return doc;
}

void save_json_file(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open " + path + " for writing");
    out << doc.dump(2) << "\n";
}

} // namespace smilegrid
