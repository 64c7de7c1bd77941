#include "smilegrid/sabr.hpp"

#include <cmath>
#include <string>

#include "smilegrid/errors.hpp"
#include "smilegrid/parallel.hpp"

namespace smilegrid {

namespace {

constexpr double kAtmLogMoneyness = 1e-10; // switch to the ATM branch below this
constexpr double kSmallZ = 1e-6;           // switch z/x(z) to its series below this

// z/x(z) with x(z) = ln((sqrt(1-2*rho*z+z^2)+z-rho)/(1-rho)). The ratio has a
// removable singularity at z = 0; a third-order series covers |z| < 1e-6.
double z_over_xz(double z, double rho) {
    if (std::abs(z) < kSmallZ) {
        const double c1 = -0.5 * rho;
        const double c2 = 1.0 / 6.0 - 0.25 * rho * rho;
        const double c3 = 5.0 / 24.0 * rho - 0.25 * rho * rho * rho;
        return 1.0 + z * (c1 + z * (c2 + z * c3));
    }
    const double xz = std::log((std::sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho));
    return z / xz;
}

double atm_vol(double alpha, double beta, double rho, double s0, double f0, double expiry) {
    const double omb = 1.0 - beta;
    const double fpow = std::pow(f0, omb);
    const double t1 = omb * omb / 24.0 * s0 * s0 / (fpow * fpow);
    const double t2 = rho * beta * alpha * s0 / (4.0 * fpow);
    const double t3 = (2.0 - 3.0 * rho * rho) / 24.0 * alpha * alpha;
    return s0 / fpow * (1.0 + (t1 + t2 + t3) * expiry);
}

} // namespace

void SabrParams::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw validation_error("beta must be in [0, 1]");
    if (!(rho > -1.0 && rho < 1.0)) throw validation_error("rho must be in (-1, 1)");
    if (!(s0 > 0.0)) throw validation_error("s0 must be positive");
    if (!(f0 > 0.0)) throw validation_error("f0 must be positive");
    if (!(expiry > 0.0)) throw validation_error("expiry must be positive");
    if (!(alpha >= 0.0)) throw validation_error("alpha must be non-negative");
}

void MarketSmile::validate() const {
    if (!(k_minus < k_atm && k_atm < k_plus))
        throw validation_error("strikes must satisfy k_minus < k_atm < k_plus");
    if (k_atm != f0) throw validation_error("k_atm must equal the forward f0");
    if (!(vol_minus > 0.0 && vol_atm > 0.0 && vol_plus > 0.0))
        throw validation_error("market vols must be positive");
    if (!(beta >= 0.0 && beta <= 1.0)) throw validation_error("beta must be in [0, 1]");
    if (!(expiry > 0.0)) throw validation_error("expiry must be positive");
    if (!(f0 > 0.0)) throw validation_error("f0 must be positive");
}

void GridAxes::validate() const {
    if (alphas.size() < 2 || rhos.size() < 2)
        throw validation_error("axes need at least two points each");
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
        if (!(alphas[i] < alphas[i + 1])) throw validation_error("alphas must be strictly increasing");
    for (std::size_t j = 0; j + 1 < rhos.size(); ++j)
        if (!(rhos[j] < rhos[j + 1])) throw validation_error("rhos must be strictly increasing");
    if (!(alphas.front() > 0.0)) throw validation_error("alphas must be positive");
    if (!(rhos.front() > -1.0 && rhos.back() < 1.0)) throw validation_error("rhos must lie in (-1, 1)");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * step;
    out[n - 1] = hi;
    return out;
}

double implied_vol(const SabrParams& params, double strike) {
    if (!(strike > 0.0)) throw validation_error("strike must be positive");
    const double alpha = params.alpha;
    const double beta = params.beta;
    const double rho = params.rho;
    const double s0 = params.s0;
    const double f0 = params.f0;
    const double expiry = params.expiry;

    const double log_fk = std::log(f0 / strike);
    double vol;
    if (std::abs(log_fk) < kAtmLogMoneyness) {
        vol = atm_vol(alpha, beta, rho, s0, f0, expiry);
    } else {
        const double omb = 1.0 - beta;
        const double fk_pow = std::pow(f0 * strike, 0.5 * omb);
        const double l2 = log_fk * log_fk;
        const double denom = fk_pow * (1.0 + omb * omb / 24.0 * l2 +
                                       omb * omb * omb * omb / 1920.0 * l2 * l2);
        const double z = alpha / s0 * fk_pow * log_fk;
        const double t1 = omb * omb / 24.0 * s0 * s0 / (fk_pow * fk_pow);
        const double t2 = rho * beta * alpha * s0 / (4.0 * fk_pow);
        const double t3 = (2.0 - 3.0 * rho * rho) / 24.0 * alpha * alpha;
        vol = s0 / denom * z_over_xz(z, rho) * (1.0 + (t1 + t2 + t3) * expiry);
    }
    if (!std::isfinite(vol) || vol <= 0.0)
        throw evaluation_error("implied vol not finite/positive at strike " + std::to_string(strike));
    return vol;
}

namespace {

struct S0Solution {
    double s0 = 0.0;
    bool bracketed = false; // false: target vol unattainable, s0 is best effort
};

S0Solution solve_s0(double alpha, double rho, const MarketSmile& smile, const S0RootConfig& cfg) {
    const double target = smile.vol_atm;
    const double scale = std::pow(smile.f0, 1.0 - smile.beta);
    auto residual = [&](double s0) {
        return atm_vol(alpha, smile.beta, rho, s0, smile.f0, smile.expiry) - target;
    };

    double lo = cfg.s0_lo;
    double hi = cfg.bracket_mult * target * scale;
    double f_lo = residual(lo);
    double f_hi = residual(hi);
    if (f_lo == 0.0) return {lo, true};
    if (f_hi == 0.0) return {hi, true};
    if (f_lo * f_hi > 0.0) {
        // The cubic ATM expression can roll over for extreme (alpha, rho);
        // scan geometrically for the lowest sign-change sub-interval.
        bool found = false;
        double a = lo, fa = f_lo;
        double best = lo, best_res = std::abs(f_lo);
        const int kScan = 64;
        for (int k = 1; k <= kScan; ++k) {
            const double b = lo * std::pow(hi / lo, static_cast<double>(k) / kScan);
            const double fb = residual(b);
            if (std::abs(fb) < best_res) {
                best = b;
                best_res = std::abs(fb);
            }
            if (fa * fb <= 0.0) {
                hi = b;
                f_hi = fb;
                lo = a;
                f_lo = fa;
                found = true;
                break;
            }
            a = b;
            fa = fb;
        }
        if (!found) return {best, false};
    }

    // Bisection-safeguarded secant on the ATM vol residual.
    double x = 0.5 * (lo + hi);
    double fx = residual(x);
    double x_prev = lo, f_prev = f_lo;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (std::abs(fx) <= cfg.tol) return {x, true};
        if (f_lo * fx <= 0.0) {
            hi = x;
            f_hi = fx;
        } else {
            lo = x;
            f_lo = fx;
        }
        double next;
        const double df = fx - f_prev;
        if (df != 0.0) {
            next = x - fx * (x - x_prev) / df;
        } else {
            next = 0.5 * (lo + hi);
        }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x_prev = x;
        f_prev = fx;
        x = next;
        fx = residual(x);
    }
    if (std::abs(fx) <= cfg.tol) return {x, true};
    throw calibration_error("s0 root find did not reach tolerance");
}

} // namespace

double calibrate_s0(double alpha, double rho, const MarketSmile& smile, const S0RootConfig& cfg) {
    const S0Solution sol = solve_s0(alpha, rho, smile, cfg);
    if (!sol.bracketed)
        throw calibration_error("s0 root not bracketed for alpha=" + std::to_string(alpha) +
                                " rho=" + std::to_string(rho));
    return sol.s0;
}

ErrorMatrices error_matrices(const GridAxes& axes, const MarketSmile& smile,
                             const S0RootConfig& cfg, int workers) {
    const std::size_t m = axes.rows();
    const std::size_t n = axes.cols();
    ErrorMatrices out;
    out.m_minus = Matrix(m, n);
    out.m_plus = Matrix(m, n);
    out.s0_grid = Matrix(m, n);
    out.calibrated = Matrix(m, n);
    std::vector<double> atm_res(m * n, 0.0);

    parallel_for(m * n, workers, [&](std::size_t cell) {
        const std::size_t i = cell / n;
        const std::size_t j = cell % n;
        try {
            const S0Solution sol = solve_s0(axes.alphas[i], axes.rhos[j], smile, cfg);
            SabrParams p{axes.alphas[i], smile.beta, axes.rhos[j], sol.s0, smile.f0, smile.expiry};
            out.m_minus(i, j) = implied_vol(p, smile.k_minus) - smile.vol_minus;
            out.m_plus(i, j) = implied_vol(p, smile.k_plus) - smile.vol_plus;
            out.s0_grid(i, j) = sol.s0;
            out.calibrated(i, j) = sol.bracketed ? 1.0 : 0.0;
            if (sol.bracketed)
                atm_res[cell] = std::abs(implied_vol(p, smile.k_atm) - smile.vol_atm);
        } catch (const error& e) {
            throw calibration_error("error matrix cell (" + std::to_string(i) + ", " +
                                    std::to_string(j) + "): " + e.what());
        }
    });

    double worst = 0.0;
    for (double r : atm_res) worst = std::max(worst, r);
    out.atm_residual_max = worst;
    return out;
}

double objective(double alpha, double rho, const MarketSmile& smile, const S0RootConfig& cfg) {
    const double s0 = calibrate_s0(alpha, rho, smile, cfg);
    SabrParams p{alpha, smile.beta, rho, s0, smile.f0, smile.expiry};
    return std::abs(implied_vol(p, smile.k_minus) - smile.vol_minus) +
           std::abs(implied_vol(p, smile.k_plus) - smile.vol_plus);
}

} // namespace smilegrid
