#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "smilegrid/baseline.hpp"
#include "smilegrid/errors.hpp"
#include "smilegrid/grid_calibrator.hpp"
#include "smilegrid/json_io.hpp"
#include "smilegrid/pipeline.hpp"
#include "smilegrid/prob_tables.hpp"
#include "smilegrid/synthetic.hpp"

namespace py = pybind11;
using namespace smilegrid;

namespace {

std::unique_ptr<CdfModel> make_model(const std::string& name, const py::dict& params) {
    json j{{"name", name}};
    for (const auto& item : params)
        j[py::cast<std::string>(item.first)] = py::cast<double>(item.second);
    // Reuse the CLI's model factory via its JSON schema.
    if (name == "uniform") return std::make_unique<UniformCdf>(j.value("lo", 0.0), j.value("hi", 1.0));
    if (name == "normal")
        return std::make_unique<NormalCdf>(j.value("mean", 0.0), j.value("stddev", 1.0));
    if (name == "lognormal")
        return std::make_unique<LognormalCdf>(j.value("log_mean", 0.0), j.value("log_stddev", 0.25));
    if (name == "sabr-implied") {
        SabrParams p{j.value("alpha", 0.4), j.value("beta", 0.5), j.value("rho", -0.3),
                     j.value("s0", 2.0),    j.value("f0", 100.0), j.value("expiry", 1.0)};
        return std::make_unique<SabrCdf>(p);
    }
    throw validation_error("unknown model '" + name + "'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "SABR grid calibration and probability lookup tables";

    py::register_exception<validation_error>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<calibration_error>(m, "CalibrationError", PyExc_RuntimeError);
    py::register_exception<table_error>(m, "TableError", PyExc_RuntimeError);
    py::register_exception<evaluation_error>(m, "EvaluationError", PyExc_ArithmeticError);

    py::class_<SabrParams>(m, "SabrParams")
        .def(py::init([](double alpha, double beta, double rho, double s0, double f0,
                         double expiry) {
                 SabrParams p{alpha, beta, rho, s0, f0, expiry};
                 p.validate();
                 return p;
             }),
             py::arg("alpha"), py::arg("beta"), py::arg("rho"), py::arg("s0"), py::arg("f0"),
             py::arg("expiry"))
        .def_readwrite("alpha", &SabrParams::alpha)
        .def_readwrite("beta", &SabrParams::beta)
        .def_readwrite("rho", &SabrParams::rho)
        .def_readwrite("s0", &SabrParams::s0)
        .def_readwrite("f0", &SabrParams::f0)
        .def_readwrite("expiry", &SabrParams::expiry);

    py::class_<MarketSmile>(m, "MarketSmile")
        .def(py::init([](double k_minus, double k_atm, double k_plus, double vol_minus,
                         double vol_atm, double vol_plus, double f0, double expiry, double beta) {
                 MarketSmile s{k_minus, k_atm, k_plus, vol_minus, vol_atm, vol_plus, f0, expiry,
                               beta};
                 s.validate();
                 return s;
             }),
             py::arg("k_minus"), py::arg("k_atm"), py::arg("k_plus"), py::arg("vol_minus"),
             py::arg("vol_atm"), py::arg("vol_plus"), py::arg("f0"), py::arg("expiry"),
             py::arg("beta") = 0.5)
        .def_readwrite("k_minus", &MarketSmile::k_minus)
        .def_readwrite("k_atm", &MarketSmile::k_atm)
        .def_readwrite("k_plus", &MarketSmile::k_plus)
        .def_readwrite("vol_minus", &MarketSmile::vol_minus)
        .def_readwrite("vol_atm", &MarketSmile::vol_atm)
        .def_readwrite("vol_plus", &MarketSmile::vol_plus)
        .def_readwrite("f0", &MarketSmile::f0)
        .def_readwrite("expiry", &MarketSmile::expiry)
        .def_readwrite("beta", &MarketSmile::beta);

    py::class_<CalibResult>(m, "CalibResult")
        .def_readonly("alpha_star", &CalibResult::alpha_star)
        .def_readonly("rho_star", &CalibResult::rho_star)
        .def_readonly("s0_star", &CalibResult::s0_star)
        .def_readonly("final_error", &CalibResult::final_error)
        .def_readonly("iterations", &CalibResult::iterations)
        .def_readonly("converged", &CalibResult::converged);

    m.def("implied_vol", &implied_vol, py::arg("params"), py::arg("strike"));
    m.def(
        "calibrate_s0",
        [](double alpha, double rho, const MarketSmile& smile) {
            return calibrate_s0(alpha, rho, smile);
        },
        py::arg("alpha"), py::arg("rho"), py::arg("smile"));
    m.def(
        "objective",
        [](double alpha, double rho, const MarketSmile& smile) {
            return objective(alpha, rho, smile);
        },
        py::arg("alpha"), py::arg("rho"), py::arg("smile"));

    m.def(
        "calibrate",
        [](const MarketSmile& smile, double epsilon, const std::string& variant, int grid_m,
           int grid_n, int max_iterations) {
            CalibConfig cfg;
            cfg.epsilon_sabr = epsilon;
            cfg.variant = variant_from_name(variant);
            cfg.grid_m = grid_m;
            cfg.grid_n = grid_n;
            cfg.max_iterations = max_iterations;
            return calibrate(smile, cfg);
        },
        py::arg("smile"), py::arg("epsilon") = 1e-10, py::arg("variant") = "V3",
        py::arg("grid_m") = 8, py::arg("grid_n") = 8, py::arg("max_iterations") = 48);

    m.def(
        "calibrate_gd",
        [](const MarketSmile& smile, double epsilon) {
            GdConfig cfg;
            cfg.epsilon_sabr = epsilon;
            return calibrate_gd(smile, cfg);
        },
        py::arg("smile"), py::arg("epsilon") = 1e-10);

    m.def(
        "synthetic_smiles",
        [](std::size_t count, std::uint64_t seed) {
            std::vector<py::dict> out;
            for (const SyntheticSmile& s : synthetic_smiles(count, seed)) {
                py::dict d;
                d["smile"] = s.smile;
                d["alpha_true"] = s.alpha_true;
                d["rho_true"] = s.rho_true;
                d["s0_true"] = s.s0_true;
                out.push_back(d);
            }
            return out;
        },
        py::arg("count"), py::arg("seed") = 1);

    py::class_<LookupTable>(m, "LookupTable")
        .def_readonly("xs", &LookupTable::xs)
        .def_readonly("ps", &LookupTable::ps)
        .def_property_readonly("n", [](const LookupTable& t) { return t.size(); })
        .def_property_readonly("zeta_cap",
                               [](const LookupTable& t) -> py::object {
                                   if (t.zeta_cap) return py::float_(*t.zeta_cap);
                                   return py::none();
                               })
        .def_property_readonly("builder",
                               [](const LookupTable& t) { return builder_name(t.built_by); })
        .def_property_readonly("model_evals",
                               [](const LookupTable& t) { return t.stats.model_evals; });

    m.def(
        "build_table",
        [](const std::string& builder, const std::string& model, const py::dict& model_params,
           int n_initial, py::object x_s, py::object x_f, py::object zeta_cap) {
            const auto b = builder_from_name(builder);
            if (!b) throw validation_error("unknown builder '" + builder + "'");
            const auto mdl = make_model(model, model_params);
            TableBuildConfig cfg;
            cfg.n_initial = n_initial;
            cfg.x_s = x_s.is_none() ? mdl->support_lo() : py::cast<double>(x_s);
            cfg.x_f = x_f.is_none() ? mdl->support_hi() : py::cast<double>(x_f);
            if (!zeta_cap.is_none()) cfg.zeta_cap = py::cast<double>(zeta_cap);
            return build_table(*mdl, cfg, *b);
        },
        py::arg("builder"), py::arg("model"), py::arg("model_params") = py::dict(),
        py::arg("n_initial") = 500, py::arg("x_s") = py::none(), py::arg("x_f") = py::none(),
        py::arg("zeta_cap") = py::none());

    m.def(
        "midpoint_errors",
        [](const LookupTable& table, const std::string& model, const py::dict& model_params) {
            return midpoint_errors(table, *make_model(model, model_params));
        },
        py::arg("table"), py::arg("model"), py::arg("model_params") = py::dict());

    m.def("inverse_lookup", &inverse_lookup, py::arg("table"), py::arg("p"));
    m.def("save_table", &save_table_binary, py::arg("table"), py::arg("path"));
    m.def("load_table", &load_table_binary, py::arg("path"));

    m.def("sabr_cdf", &sabr_cdf, py::arg("params"), py::arg("x"));
    m.def("present_value",
          [](double r_c, double notional, double delta, double df) {
              CouponSpec spec{notional, delta, df};
              spec.validate();
              return present_value(r_c, spec);
          },
          py::arg("r_c"), py::arg("notional"), py::arg("delta"), py::arg("df"));

    m.def(
        "coupon_rate",
        [](const LookupTable& a, const LookupTable& b, double strike, std::uint64_t samples,
           std::uint64_t seed, double copula_corr) {
            McConfig mc;
            mc.samples = samples;
            mc.seed = seed;
            mc.copula_corr = copula_corr;
            return coupon_rate(a, b, mc, strike);
        },
        py::arg("table_a"), py::arg("table_b"), py::arg("strike") = 0.0,
        py::arg("samples") = 100000, py::arg("seed") = 0, py::arg("copula_corr") = 0.0);
}
