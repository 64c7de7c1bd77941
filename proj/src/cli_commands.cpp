#include "smilegrid/cli_commands.hpp"

#include <cstdio>
#include <memory>
#include <vector>

#include "smilegrid/errors.hpp"
#include "smilegrid/json_io.hpp"
#include "smilegrid/parallel.hpp"
#include "smilegrid/pipeline.hpp"
#include "smilegrid/prob_tables.hpp"
#include "smilegrid/synthetic.hpp"

namespace smilegrid {

namespace {

struct CsvFile {
    std::FILE* f = nullptr;
    explicit CsvFile(const std::string& path) : f(std::fopen(path.c_str(), "w")) {
        if (!f) throw validation_error("cannot open " + path + " for writing");
    }
    ~CsvFile() {
        if (f) std::fclose(f);
    }
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;
};

std::string default_path(const std::string& base, const char* suffix) {
    return base.empty() ? std::string("smilegrid") + suffix : base + suffix;
}

int run_guarded(const char* what, int (*body)(const RunManifest&), const RunManifest& m) {
    try {
        return body(m);
    } catch (const validation_error& e) {
        std::fprintf(stderr, "%s: invalid input: %s\n", what, e.what());
        return kExitValidation;
    } catch (const error& e) {
        std::fprintf(stderr, "%s: %s\n", what, e.what());
        return kExitNumerical;
    }
}

int calibrate_body(const RunManifest& manifest) {
    const json doc = load_json_file(manifest.input_path);
    require_schema(doc, "calibrate input");

    std::vector<MarketSmile> smiles;
    if (doc.contains("smiles")) {
        if (!doc["smiles"].is_array()) throw validation_error("smiles must be an array");
        for (const json& sj : doc["smiles"]) smiles.push_back(smile_from_json(sj));
    }
    if (doc.contains("synthetic")) {
        const json& gen = doc["synthetic"];
        const auto count = gen.value("count", 0);
        if (count < 0) throw validation_error("synthetic.count must be non-negative");
        std::uint64_t seed = gen.value("seed", std::uint64_t{1});
        if (manifest.seed) seed = *manifest.seed;
        for (const SyntheticSmile& s : synthetic_smiles(static_cast<std::size_t>(count), seed))
            smiles.push_back(s.smile);
    }

    CalibConfig cfg = calib_config_from_json(doc.value("config", json()), CalibConfig{});
    cfg = calib_config_from_json(manifest.overrides, cfg);

    std::vector<CalibResult> results(smiles.size());
    std::vector<std::string> failures(smiles.size());
    parallel_for(smiles.size(), manifest.workers, [&](std::size_t i) {
        try {
            results[i] = calibrate(smiles[i], cfg);
        } catch (const error& e) {
            failures[i] = e.what();
        }
    });

    json out_results = json::array();
    std::size_t converged = 0;
    double iteration_sum = 0.0;
    bool any_failed = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!failures[i].empty()) {
            any_failed = true;
            out_results.push_back(json{{"error", failures[i]}});
            continue;
        }
        out_results.push_back(to_json(results[i]));
        if (results[i].converged) ++converged;
        iteration_sum += results[i].iterations;
    }

    json out{{"schema_version", kSchemaVersion},
             {"results", out_results},
             {"summary",
              {{"count", smiles.size()},
               {"converged", converged},
               {"mean_iterations", smiles.empty() ? 0.0 : iteration_sum / smiles.size()},
               {"epsilon_sabr", cfg.epsilon_sabr},
               {"variant", variant_name(cfg.variant)}}}};
    save_json_file(out, manifest.output_path);

    if (manifest.trace) {
        const std::string path =
            manifest.trace_path.empty() ? default_path(manifest.output_path, ".trace.csv")
                                        : manifest.trace_path;
        CsvFile csv(path);
        std::fprintf(csv.f, "smile_index,iteration,alpha_s,alpha_f,rho_s,rho_f,min_error\n");
        for (std::size_t i = 0; i < results.size(); ++i)
            for (const IterationTrace& t : results[i].bounds_history)
                std::fprintf(csv.f, "%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, t.iteration,
                             t.alpha_s, t.alpha_f, t.rho_s, t.rho_f, t.min_error);
    }

    if (any_failed || converged != results.size()) return kExitNumerical;
    return kExitOk;
}

std::unique_ptr<CdfModel> model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
        throw validation_error("model: needs a string 'name'");
    const std::string name = j["name"].get<std::string>();
    if (name == "uniform") return std::make_unique<UniformCdf>(j.value("lo", 0.0), j.value("hi", 1.0));
    if (name == "normal")
        return std::make_unique<NormalCdf>(j.value("mean", 0.0), j.value("stddev", 1.0));
    if (name == "lognormal")
        return std::make_unique<LognormalCdf>(j.value("log_mean", 0.0), j.value("log_stddev", 0.25));
    if (name == "sabr-implied") {
        SabrParams p;
        p.alpha = j.value("alpha", 0.4);
        p.beta = j.value("beta", 0.5);
        p.rho = j.value("rho", -0.3);
        p.s0 = j.value("s0", 2.0);
        p.f0 = j.value("f0", 100.0);
        p.expiry = j.value("expiry", 1.0);
        return std::make_unique<SabrCdf>(p);
    }
    throw validation_error("unknown model '" + name + "'");
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int table_body(const RunManifest& manifest) {
    const json doc = load_json_file(manifest.input_path);
    require_schema(doc, "table input");
    if (!doc.contains("model")) throw validation_error("table input: missing model");
    json model_json = doc["model"];
    if (!manifest.model_override.empty()) model_json["name"] = manifest.model_override;
    const std::unique_ptr<CdfModel> model = model_from_json(model_json);

    json cfg_json = doc.value("config", json::object());
    for (const auto& [key, value] : manifest.overrides.items()) cfg_json[key] = value;

    TableBuildConfig cfg;
    cfg.n_initial = cfg_json.value("n_initial", cfg.n_initial);
    cfg.workers = manifest.workers;
    if (cfg_json.contains("zeta_cap") && !cfg_json["zeta_cap"].is_null())
        cfg.zeta_cap = cfg_json["zeta_cap"].get<double>();
    cfg.max_table_size = cfg_json.value("max_table_size", cfg.max_table_size);
    if (cfg_json.contains("x_s") && cfg_json.contains("x_f")) {
        cfg.x_s = cfg_json["x_s"].get<double>();
        cfg.x_f = cfg_json["x_f"].get<double>();
    } else {
        cfg.x_s = model->support_lo();
        cfg.x_f = model->support_hi();
    }

    const std::string builder_tag = manifest.builder_override.empty()
                                        ? doc.value("builder", std::string("DS3"))
                                        : manifest.builder_override;
    const auto builder = builder_from_name(builder_tag);
    if (!builder) throw validation_error("unknown builder '" + builder_tag + "'");

    const LookupTable table = build_table(*model, cfg, *builder);
    table.validate();
    if (ends_with(manifest.output_path, ".csv"))
        save_table_csv(table, manifest.output_path);
    else
        save_table_binary(table, manifest.output_path);

    // Independent post-build verification sweep.
    const std::vector<double> zeta = midpoint_errors(table, *model, manifest.workers);
    double max_zeta = 0.0;
    for (double z : zeta) max_zeta = std::max(max_zeta, z);

    const std::string stats_path = manifest.stats_path.empty()
                                       ? default_path(manifest.output_path, ".stats.csv")
                                       : manifest.stats_path;
    {
        std::FILE* f = std::fopen(stats_path.c_str(), "a");
        if (!f) throw validation_error("cannot open " + stats_path + " for writing");
        std::fprintf(f, "%s,%s,%.17g,%zu,%.17g,%llu\n", builder_tag.c_str(),
                     model_json["name"].get<std::string>().c_str(),
                     cfg.zeta_cap.value_or(0.0), table.size(), max_zeta,
                     static_cast<unsigned long long>(table.stats.model_evals));
        std::fclose(f);
    }

    if (cfg.zeta_cap && max_zeta > *cfg.zeta_cap) return kExitNumerical;
    return kExitOk;
}

int sweep_body(const RunManifest& manifest) {
    const json doc = load_json_file(manifest.input_path);
    require_schema(doc, "sweep input");
    if (!doc.contains("contract")) throw validation_error("sweep input: missing contract");
    json contract_json = doc["contract"];
    if (!contract_json.contains("schema_version")) contract_json["schema_version"] = kSchemaVersion;
    Contract contract = contract_from_json(contract_json);
    if (manifest.seed) contract.mc.seed = *manifest.seed;

    if (!doc.contains("sweep") || !doc["sweep"].is_object())
        throw validation_error("sweep input: missing sweep block");
    const json& sj = doc["sweep"];
    const std::string knob = sj.value("knob", std::string());
    if (knob != "zeta" && knob != "epsilon")
        throw validation_error("sweep.knob must be 'zeta' or 'epsilon'");
    if (!sj.contains("ladder") || !sj["ladder"].is_array() || sj["ladder"].empty())
        throw validation_error("sweep.ladder must be a non-empty array");

    PipelineConfig cfg;
    cfg.workers = manifest.workers;
    cfg.calib = calib_config_from_json(doc.value("calib", json()), cfg.calib);
    cfg.n_initial = sj.value("n_initial", cfg.n_initial);
    if (sj.contains("builder")) {
        const auto b = builder_from_name(sj["builder"].get<std::string>());
        if (!b) throw validation_error("unknown builder in sweep block");
        cfg.builder = *b;
    }

    SweepReport report;
    if (knob == "zeta") {
        if (!sj.contains("benchmark") || !sj["benchmark"].is_number())
            throw validation_error("zeta sweep: missing numeric benchmark level");
        std::vector<std::optional<double>> ladder;
        for (const json& entry : sj["ladder"]) {
            if (entry.is_string() && entry.get<std::string>() == "FS")
                ladder.push_back(std::nullopt);
            else if (entry.is_number())
                ladder.push_back(entry.get<double>());
            else
                throw validation_error("zeta ladder entries must be numbers or \"FS\"");
        }
        report = error_sweep_zeta(contract, cfg, ladder, sj["benchmark"].get<double>());
    } else {
        if (!sj.contains("fixed_zeta") || !sj["fixed_zeta"].is_number())
            throw validation_error("epsilon sweep: missing numeric fixed_zeta");
        if (!sj.contains("benchmark_zeta") || !sj["benchmark_zeta"].is_number())
            throw validation_error("epsilon sweep: missing numeric benchmark_zeta");
        std::vector<double> ladder;
        for (const json& entry : sj["ladder"]) {
            if (!entry.is_number()) throw validation_error("epsilon ladder entries must be numbers");
            ladder.push_back(entry.get<double>());
        }
        const std::vector<double> bench =
            benchmark_rates(contract, cfg, sj["benchmark_zeta"].get<double>());
        report = error_sweep_epsilon(contract, cfg, ladder, sj["fixed_zeta"].get<double>(), bench);
    }

    CsvFile csv(manifest.output_path);
    std::fprintf(csv.f, "accuracy_param,value,r_c,abs_error\n");
    for (const SweepRow& row : report.rows)
        std::fprintf(csv.f, "%s,%s,%.17g,%.17g\n", report.knob.c_str(), row.label.c_str(),
                     row.total_rc, row.abs_error);
    std::fprintf(csv.f, "verdict,monotone,%s,\n", report.monotone_ok ? "pass" : "fail");
    return kExitOk;
}

} // namespace

int cmd_calibrate(const RunManifest& manifest) {
    return run_guarded("calibrate", calibrate_body, manifest);
}

int cmd_table(const RunManifest& manifest) { return run_guarded("table", table_body, manifest); }

int cmd_sweep(const RunManifest& manifest) { return run_guarded("sweep", sweep_body, manifest); }

} // namespace smilegrid
