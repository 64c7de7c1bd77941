#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smilegrid/grid_calibrator.hpp"
#include "smilegrid/prob_tables.hpp"
#include "smilegrid/sabr.hpp"

namespace smilegrid {

// Coupon payment terms for present-value reporting.
struct CouponSpec {
    double notional = 0.0;
    double delta = 0.0; // year fraction
    double df = 1.0;    // discount factor

    void validate() const;
};

struct McConfig {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
    double copula_corr = 0.0;
    int workers = 1;

    void validate() const;
};

// Terminal distribution implied by a calibrated SABR smile: the strike
// derivative of the Black call price with strike-dependent vol. The smile
// slope enters through a central difference with a relative strike step.
class SabrCdf final : public CdfModel {
public:
    explicit SabrCdf(SabrParams params, double rel_step = 1e-5);
    double cdf(double x) const override;
    double support_lo() const override;
    double support_hi() const override;
    const SabrParams& params() const { return params_; }

private:
    SabrParams params_;
    double rel_step_;
};

// Shorthand taking x > 0; see SabrCdf.
double sabr_cdf(const SabrParams& params, double x);

// Solves for [x_s, x_f] such that the model's CDF is below tail_mass at x_s
// and above 1 - tail_mass at x_f, by bracketed bisection from start_hint.
std::pair<double, double> solve_table_domain(const CdfModel& model, double start_hint,
                                             double tail_mass = 1e-9);

// Expected discounted spread payoff rate: mean of max(x_a - x_b - strike, 0)
// over Gaussian-copula samples drawn through the two inverse tables.
double coupon_rate(const LookupTable& table_a, const LookupTable& table_b, const McConfig& mc,
                   double strike);

inline double present_value(double r_c, const CouponSpec& spec) {
    return r_c * spec.notional * spec.delta * spec.df;
}

struct Coupon {
    MarketSmile smile_a;
    MarketSmile smile_b;
    CouponSpec spec;
    double strike = 0.0;
};

struct Contract {
    std::vector<Coupon> coupons;
    McConfig mc;
};

// One accuracy setting of a sweep. `zeta_cap` empty means the FS builder.
struct SweepSetting {
    std::string label;
    double epsilon_sabr = 0.0;
    std::optional<double> zeta_cap;
};

struct SweepRow {
    std::string label;
    double accuracy_value = 0.0; // epsilon or zeta of the row (0 for FS)
    double total_rc = 0.0;       // sum of coupon rates
    double abs_error = 0.0;      // max |R_c - benchmark R_c| over coupons
};

struct SweepReport {
    std::string knob; // "zeta" or "epsilon"
    std::string benchmark_label;
    double benchmark_total_rc = 0.0;
    std::vector<SweepRow> rows;
    bool monotone_ok = false; // non-increasing errors along the ladder
};

// Pipeline-wide knobs shared by the sweep drivers.
struct PipelineConfig {
    CalibConfig calib;
    Builder builder = Builder::DS3;
    int n_initial = 500;
    std::size_t max_table_size = std::size_t{1} << 22;
    double tail_mass = 1e-9;
    int workers = 1;

    // Strictest calibration accuracy the double-precision objective supports.
    static constexpr double machine_epsilon_sabr = 1e-13;
};

// Per-coupon rates for one accuracy setting, in coupon order.
std::vector<double> pipeline_rates(const Contract& contract, const PipelineConfig& cfg,
                                   const SweepSetting& setting);

// Table-accuracy sweep at fixed (machine precision) calibration accuracy.
SweepReport error_sweep_zeta(const Contract& contract, const PipelineConfig& cfg,
                             const std::vector<std::optional<double>>& ladder,
                             double benchmark_zeta);

// Calibration-accuracy sweep at fixed table accuracy, against the given
// benchmark rates (from error_sweep_zeta's benchmark run).
SweepReport error_sweep_epsilon(const Contract& contract, const PipelineConfig& cfg,
                                const std::vector<double>& ladder, double fixed_zeta,
                                const std::vector<double>& benchmark_rates);

// Benchmark per-coupon rates: machine-precision calibration, tables at the
// given cap.
std::vector<double> benchmark_rates(const Contract& contract, const PipelineConfig& cfg,
                                    double benchmark_zeta);

} // namespace smilegrid
