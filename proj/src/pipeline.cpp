#include "smilegrid/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "smilegrid/errors.hpp"
#include "smilegrid/normal.hpp"
#include "smilegrid/parallel.hpp"
#include "smilegrid/rng.hpp"

namespace smilegrid {

void CouponSpec::validate() const {
    if (!(notional > 0.0)) throw validation_error("notional must be positive");
    if (!(delta > 0.0)) throw validation_error("delta must be positive");
    if (!(df > 0.0 && df <= 1.0)) throw validation_error("df must be in (0, 1]");
}

void McConfig::validate() const {
    if (samples < 1) throw validation_error("samples must be at least 1");
    if (!(copula_corr > -1.0 && copula_corr < 1.0))
        throw validation_error("copula_corr must be in (-1, 1)");
}

namespace {

// Undiscounted Black call on a forward.
double black_call(double f, double k, double vol, double expiry) {
    const double stdev = vol * std::sqrt(expiry);
    if (stdev <= 0.0) return std::max(f - k, 0.0);
    const double d1 = (std::log(f / k) + 0.5 * stdev * stdev) / stdev;
    return f * normal_cdf(d1) - k * normal_cdf(d1 - stdev);
}

} // namespace

SabrCdf::SabrCdf(SabrParams params, double rel_step) : params_(params), rel_step_(rel_step) {
    params_.validate();
    if (!(rel_step > 0.0)) throw validation_error("rel_step must be positive");
}

double SabrCdf::cdf(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double vol = implied_vol(params_, x);
    const double stdev = vol * std::sqrt(params_.expiry);
    const double d1 = (std::log(params_.f0 / x) + 0.5 * stdev * stdev) / stdev;
    const double d2 = d1 - stdev;

    // Smile slope via central difference; the rest of dC/dK is analytic.
    const double h = rel_step_ * x;
    const double dvol = (implied_vol(params_, x + h) - implied_vol(params_, x - h)) / (2.0 * h);
    const double vega = params_.f0 * normal_pdf(d1) * std::sqrt(params_.expiry);
    const double p = 1.0 - normal_cdf(d2) + vega * dvol;
    if (!std::isfinite(p)) throw evaluation_error("cdf evaluation failed at x=" + std::to_string(x));
    return std::clamp(p, 0.0, 1.0);
}

double SabrCdf::support_lo() const {
    return solve_table_domain(*this, params_.f0).first;
}

double SabrCdf::support_hi() const {
    return solve_table_domain(*this, params_.f0).second;
}

double sabr_cdf(const SabrParams& params, double x) { return SabrCdf(params).cdf(x); }

std::pair<double, double> solve_table_domain(const CdfModel& model, double start_hint,
                                             double tail_mass) {
    if (!(start_hint > 0.0)) throw validation_error("start_hint must be positive");

    const auto quantile_below = [&](double level) {
        double hi = start_hint;
        double lo = start_hint;
        while (model.cdf(lo) > level) {
            lo *= 0.5;
            if (lo < start_hint * 1e-12)
                return lo; // distribution reaches arbitrarily far toward zero
        }
        // lo has cdf <= level; bisect toward it from above.
        for (int it = 0; it < 80 && (hi - lo) > 1e-6 * lo; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (model.cdf(mid) > level)
                hi = mid;
            else
                lo = mid;
        }
        return lo;
    };
    const auto quantile_above = [&](double level) {
        double lo = start_hint;
        double hi = start_hint;
        while (model.cdf(hi) < level) {
            hi *= 2.0;
            if (hi > start_hint * 1e12) return hi;
        }
        for (int it = 0; it < 80 && (hi - lo) > 1e-6 * lo; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (model.cdf(mid) < level)
                lo = mid;
            else
                hi = mid;
        }
        return hi;
    };
    return {quantile_below(tail_mass), quantile_above(1.0 - tail_mass)};
}

double coupon_rate(const LookupTable& table_a, const LookupTable& table_b, const McConfig& mc,
                   double strike) {
    mc.validate();
    const CounterRng rng(mc.seed);
    const double corr = mc.copula_corr;
    const double ortho = std::sqrt(1.0 - corr * corr);

    const auto clamp_to = [](const LookupTable& t, double u) {
        return std::clamp(u, t.ps.front(), t.ps.back());
    };

    // Fixed-size blocks summed in index order: the reduction tree does not
    // depend on the worker count.
    constexpr std::uint64_t kBlock = 4096;
    const std::uint64_t blocks = (mc.samples + kBlock - 1) / kBlock;
    std::vector<double> block_sum(blocks, 0.0);
    parallel_for(blocks, mc.workers, [&](std::size_t bi) {
        const std::uint64_t begin = bi * kBlock;
        const std::uint64_t end = std::min(begin + kBlock, mc.samples);
        double acc = 0.0;
        for (std::uint64_t s = begin; s < end; ++s) {
            const double z1 = rng.normal(2 * s);
            const double z2 = rng.normal(2 * s + 1);
            const double w2 = corr * z1 + ortho * z2;
            const double u_a = clamp_to(table_a, normal_cdf(z1));
            const double u_b = clamp_to(table_b, normal_cdf(w2));
            const double x_a = inverse_lookup(table_a, u_a);
            const double x_b = inverse_lookup(table_b, u_b);
            acc += std::max(x_a - x_b - strike, 0.0);
        }
        block_sum[bi] = acc;
    });
    double total = 0.0;
    for (double v : block_sum) total += v;
    return total / static_cast<double>(mc.samples);
}

namespace {

SabrParams calibrated_params(const MarketSmile& smile, const CalibConfig& calib, double epsilon) {
    CalibConfig cfg = calib;
    cfg.epsilon_sabr = epsilon;
    const CalibResult res = calibrate(smile, cfg);
    if (!res.converged && res.final_error > 1e3 * epsilon)
        throw calibration_error("pipeline calibration failed at epsilon=" + std::to_string(epsilon));
    return SabrParams{res.alpha_star, smile.beta, res.rho_star, res.s0_star, smile.f0,
                      smile.expiry};
}

LookupTable coupon_table(const MarketSmile& smile, const PipelineConfig& cfg,
                         const SweepSetting& setting) {
    const SabrParams params = calibrated_params(smile, cfg.calib, setting.epsilon_sabr);
    const SabrCdf model(params);
    const auto [x_s, x_f] = solve_table_domain(model, params.f0, cfg.tail_mass);
    TableBuildConfig tcfg;
    tcfg.n_initial = cfg.n_initial;
    tcfg.x_s = x_s;
    tcfg.x_f = x_f;
    tcfg.zeta_cap = setting.zeta_cap;
    tcfg.max_table_size = cfg.max_table_size;
    tcfg.workers = cfg.workers;
    const Builder builder = setting.zeta_cap ? cfg.builder : Builder::FS;
    return build_table(model, tcfg, builder);
}

bool ladder_monotone(const std::vector<SweepRow>& rows) {
    // Non-increasing errors, allowing single-step inversions within 10%.
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double a = rows[i].abs_error;
        const double b = rows[i + 1].abs_error;
        if (b > a && (b - a) > 0.10 * std::max(a, b)) return false;
    }
    return true;
}

} // namespace

std::vector<double> pipeline_rates(const Contract& contract, const PipelineConfig& cfg,
                                   const SweepSetting& setting) {
    if (contract.coupons.empty()) throw validation_error("contract has no coupons");
    contract.mc.validate();
    std::vector<double> rates(contract.coupons.size(), 0.0);
    for (std::size_t c = 0; c < contract.coupons.size(); ++c) {
        const Coupon& coupon = contract.coupons[c];
        coupon.spec.validate();
        const LookupTable table_a = coupon_table(coupon.smile_a, cfg, setting);
        const LookupTable table_b = coupon_table(coupon.smile_b, cfg, setting);
        McConfig mc = contract.mc;
        mc.workers = cfg.workers;
        mc.seed = CounterRng(contract.mc.seed).bits(0xC0F0ULL + c);
        rates[c] = coupon_rate(table_a, table_b, mc, coupon.strike);
    }
    return rates;
}

std::vector<double> benchmark_rates(const Contract& contract, const PipelineConfig& cfg,
                                    double benchmark_zeta) {
    SweepSetting bench;
    bench.label = "benchmark";
    bench.epsilon_sabr = PipelineConfig::machine_epsilon_sabr;
    bench.zeta_cap = benchmark_zeta;
    return pipeline_rates(contract, cfg, bench);
}

namespace {

SweepReport run_sweep(const Contract& contract, const PipelineConfig& cfg,
                      const std::vector<SweepSetting>& settings,
                      const std::vector<double>& bench, const std::string& knob,
                      const std::string& benchmark_label) {
    SweepReport report;
    report.knob = knob;
    report.benchmark_label = benchmark_label;
    for (double r : bench) report.benchmark_total_rc += r;
    for (const SweepSetting& setting : settings) {
        const std::vector<double> rates = pipeline_rates(contract, cfg, setting);
        SweepRow row;
        row.label = setting.label;
        row.accuracy_value = knob == "zeta" ? setting.zeta_cap.value_or(0.0) : setting.epsilon_sabr;
        for (std::size_t c = 0; c < rates.size(); ++c) {
            row.total_rc += rates[c];
            row.abs_error = std::max(row.abs_error, std::abs(rates[c] - bench[c]));
        }
        report.rows.push_back(row);
    }
    report.monotone_ok = ladder_monotone(report.rows);
    return report;
}

std::string format_accuracy(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

SweepReport error_sweep_zeta(const Contract& contract, const PipelineConfig& cfg,
                             const std::vector<std::optional<double>>& ladder,
                             double benchmark_zeta) {
    for (const auto& z : ladder)
        if (z && *z < benchmark_zeta)
            throw validation_error("benchmark zeta must be the strictest in the sweep");
    const std::vector<double> bench = benchmark_rates(contract, cfg, benchmark_zeta);
    std::vector<SweepSetting> settings;
    for (const auto& z : ladder) {
        SweepSetting s;
        s.label = z ? format_accuracy(*z) : "FS";
        s.epsilon_sabr = PipelineConfig::machine_epsilon_sabr;
        s.zeta_cap = z;
        settings.push_back(s);
    }
    return run_sweep(contract, cfg, settings, bench, "zeta",
                     format_accuracy(benchmark_zeta));
}

SweepReport error_sweep_epsilon(const Contract& contract, const PipelineConfig& cfg,
                                const std::vector<double>& ladder, double fixed_zeta,
                                const std::vector<double>& benchmark_rates_in) {
    if (benchmark_rates_in.size() != contract.coupons.size())
        throw validation_error("benchmark rates do not match the contract");
    std::vector<SweepSetting> settings;
    for (double eps : ladder) {
        SweepSetting s;
        s.label = format_accuracy(eps);
        s.epsilon_sabr = eps;
        s.zeta_cap = fixed_zeta;
        settings.push_back(s);
    }
    return run_sweep(contract, cfg, settings, benchmark_rates_in, "epsilon", "from zeta sweep");
}

} // namespace smilegrid
