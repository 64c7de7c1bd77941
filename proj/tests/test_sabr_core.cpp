#include <doctest.h>

#include <cmath>

#include "smilegrid/errors.hpp"
#include "smilegrid/rng.hpp"
#include "smilegrid/sabr.hpp"
#include "smilegrid/synthetic.hpp"

using namespace smilegrid;

namespace {

MarketSmile flat_smile(double vol, double beta = 1.0) {
    MarketSmile s;
    s.f0 = 100.0;
    s.k_minus = 80.0;
    s.k_atm = 100.0;
    s.k_plus = 125.0;
    s.vol_minus = s.vol_atm = s.vol_plus = vol;
    s.expiry = 1.0;
    s.beta = beta;
    return s;
}

GridAxes default_axes(std::size_t m = 8, std::size_t n = 8) {
    GridAxes axes;
    axes.alphas = linspace(1e-4, 2.0, m);
    axes.rhos = linspace(-0.999, 0.999, n);
    return axes;
}

} // namespace

TEST_CASE("zero vol-of-vol with beta=1 degenerates to flat Black vol") {
    SabrParams p{0.0, 1.0, 0.3, 0.25, 100.0, 1.0};
    CHECK(implied_vol(p, 80.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(implied_vol(p, 100.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(implied_vol(p, 140.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("lognormal zero-correlation smile is symmetric in log moneyness") {
    SabrParams p{0.4, 1.0, 0.0, 0.2, 100.0, 1.0};
    // 80 * 125 = 100^2, so the two strikes sit at opposite log moneyness.
    CHECK(implied_vol(p, 125.0) == doctest::Approx(implied_vol(p, 80.0)).epsilon(1e-14));
}

TEST_CASE("ATM branch matches an independent evaluation of the Hagan ATM expression") {
    // Frozen from a 40-digit evaluation of
    //   s0/f0^(1-b) * (1 + ((1-b)^2 s0^2/(24 f0^(2-2b))
    //                      + rho b alpha s0/(4 f0^(1-b))
    //                      + (2-3rho^2) alpha^2/24) T)
    // at alpha=0.4, beta=0.5, rho=-0.3, s0=2, f0=100, T=1.
    SabrParams p{0.4, 0.5, -0.3, 2.0, 100.0, 1.0};
    CHECK(implied_vol(p, 100.0) == doctest::Approx(0.20179).epsilon(1e-15));
}

TEST_CASE("implied vol is continuous across the ATM switch") {
    SabrParams p{0.6, 0.5, -0.25, 1.8, 100.0, 2.0};
    const double atm = implied_vol(p, 100.0);
    CHECK(implied_vol(p, 100.0 * (1.0 + 1e-12)) == doctest::Approx(atm).epsilon(1e-9));
    CHECK(implied_vol(p, 100.0 * (1.0 - 1e-12)) == doctest::Approx(atm).epsilon(1e-9));
    // Small-z series region.
    SabrParams q{1e-9, 0.5, -0.25, 1.8, 100.0, 2.0};
    CHECK(std::isfinite(implied_vol(q, 99.9999)));
}

TEST_CASE("implied vol finite and positive over the default domain") {
    const auto suite = synthetic_smiles(5, 7);
    int probed = 0;
    for (const auto& s : suite) {
        for (double alpha : {1e-4, 0.5, 1.0, 2.0}) {
            for (double rho : {-0.999, -0.5, 0.0, 0.5, 0.999}) {
                double s0 = 0.0;
                try {
                    s0 = calibrate_s0(alpha, rho, s.smile);
                } catch (const calibration_error&) {
                    continue; // ATM target unattainable at this corner
                }
                ++probed;
                SabrParams p{alpha, s.smile.beta, rho, s0, s.smile.f0, s.smile.expiry};
                for (double k = 50.0; k <= 200.0; k += 7.5) {
                    const double v = implied_vol(p, k);
                    CHECK(std::isfinite(v));
                    CHECK(v > 0.0);
                }
            }
        }
    }
    CHECK(probed > 50); // the admissible region must cover most of the domain
}

TEST_CASE("calibrate_s0 reproduces the ATM vol directly when vol-of-vol vanishes") {
    const MarketSmile s = flat_smile(0.3);
    CHECK(calibrate_s0(0.0, 0.2, s) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("calibrate_s0 round-trips a synthetic generating s0") {
    MarketSmile s = flat_smile(0.0, 0.5);
    SabrParams truth{0.5, 0.5, 0.2, 0.22, 100.0, 1.0};
    s.vol_atm = implied_vol(truth, s.k_atm);
    s.vol_minus = implied_vol(truth, s.k_minus);
    s.vol_plus = implied_vol(truth, s.k_plus);
    CHECK(calibrate_s0(0.5, 0.2, s) == doctest::Approx(0.22).epsilon(1e-12));
}

TEST_CASE("calibrate_s0 is monotone in the target ATM vol") {
    const CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const CounterRng sub = rng.substream(trial);
        const double alpha = 0.1 + 0.9 * sub.uniform(0);
        const double rho = -0.7 + 1.4 * sub.uniform(1);
        MarketSmile s = flat_smile(0.0, 0.5);
        s.vol_atm = 0.1 + 0.2 * sub.uniform(2);
        const double lo = calibrate_s0(alpha, rho, s);
        s.vol_atm *= 2.0;
        const double hi = calibrate_s0(alpha, rho, s);
        CHECK(hi > lo);
    }
}

TEST_CASE("error matrices vanish at the generating parameters") {
    const auto suite = synthetic_smiles(4, 3);
    for (const auto& s : suite) {
        GridAxes axes;
        axes.alphas = {s.alpha_true * 0.5, s.alpha_true, s.alpha_true * 1.5};
        axes.rhos = {s.rho_true - 0.1, s.rho_true, s.rho_true + 0.1};
        const ErrorMatrices mats = error_matrices(axes, s.smile);
        CHECK(std::abs(mats.m_minus(1, 1)) <= 10.0 * 1e-14);
        CHECK(std::abs(mats.m_plus(1, 1)) <= 10.0 * 1e-14);
        CHECK(mats.s0_grid(1, 1) == doctest::Approx(s.s0_true).epsilon(1e-8));
    }
}

TEST_CASE("row sign structure: M- non-increasing and M+ non-decreasing in rho") {
    const auto suite = synthetic_smiles(100, 23);
    const GridAxes axes = default_axes();
    for (const auto& s : suite) {
        const ErrorMatrices mats = error_matrices(axes, s.smile);
        for (std::size_t i = 0; i < axes.rows(); ++i) {
            for (std::size_t j = 0; j + 1 < axes.cols(); ++j) {
                // Only pairs of cells where the ATM vol was attainable.
                if (mats.calibrated(i, j) == 0.0 || mats.calibrated(i, j + 1) == 0.0) continue;
                CHECK(mats.m_minus(i, j) >= mats.m_minus(i, j + 1) - 1e-13);
                CHECK(mats.m_plus(i, j) <= mats.m_plus(i, j + 1) + 1e-13);
            }
        }
        CHECK(mats.atm_residual_max <= 1e-14);
    }
}

TEST_CASE("error matrices are identical no matter how many workers build them") {
    const auto suite = synthetic_smiles(2, 5);
    const GridAxes axes = default_axes();
    for (const auto& s : suite) {
        const ErrorMatrices serial = error_matrices(axes, s.smile, {}, 1);
        const ErrorMatrices parallel = error_matrices(axes, s.smile, {}, 4);
        CHECK(serial.m_minus.data() == parallel.m_minus.data());
        CHECK(serial.m_plus.data() == parallel.m_plus.data());
        CHECK(serial.s0_grid.data() == parallel.s0_grid.data());
    }
}

TEST_CASE("objective equals the element-wise matrix recomputation") {
    const auto suite = synthetic_smiles(3, 31);
    for (const auto& s : suite) {
        GridAxes axes;
        axes.alphas = {0.3, 0.8};
        axes.rhos = {-0.4, 0.4};
        const ErrorMatrices mats = error_matrices(axes, s.smile);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                const double direct = objective(axes.alphas[i], axes.rhos[j], s.smile);
                const double recomposed =
                    std::abs(mats.m_minus(i, j)) + std::abs(mats.m_plus(i, j));
                CHECK(direct == doctest::Approx(recomposed).epsilon(1e-12));
                CHECK(direct >= 0.0);
            }
    }
}

TEST_CASE("objective is near zero only at the generating point") {
    const auto suite = synthetic_smiles(50, 47);
    for (const auto& s : suite) {
        CHECK(objective(s.alpha_true, s.rho_true, s.smile) <= 2.0 * 10.0 * 1e-14);
        CHECK(objective(s.alpha_true + 0.2, s.rho_true, s.smile) > 1e-6);
    }
}

TEST_CASE("invalid inputs are rejected") {
    MarketSmile s = flat_smile(0.2);
    s.k_atm = 90.0; // no longer the forward
    CHECK_THROWS_AS(s.validate(), validation_error);

    SabrParams p{0.4, 1.5, 0.0, 0.2, 100.0, 1.0};
    CHECK_THROWS_AS(p.validate(), validation_error);

    GridAxes axes;
    axes.alphas = {0.5, 0.4};
    axes.rhos = {-0.5, 0.5};
    CHECK_THROWS_AS(axes.validate(), validation_error);
}

TEST_CASE("matrix construction failures name the failing cell") {
    MarketSmile s = flat_smile(0.2, 0.5);
    s.k_minus = -5.0; // strike evaluation fails inside every cell
    GridAxes axes;
    axes.alphas = {0.5, 1.0};
    axes.rhos = {-0.5, 0.5};
    try {
        error_matrices(axes, s);
        FAIL("expected a calibration error");
    } catch (const calibration_error& e) {
        CHECK(std::string(e.what()).find("(0, 0)") != std::string::npos);
    }
}

TEST_CASE("unattainable ATM targets are flagged, not fatal") {
    MarketSmile s = flat_smile(0.5, 0.5);
    s.expiry = 5.0;
    SabrParams truth{0.9, 0.5, 0.2, 5.0, 100.0, 5.0};
    s.vol_atm = implied_vol(truth, s.k_atm);
    s.vol_minus = implied_vol(truth, s.k_minus);
    s.vol_plus = implied_vol(truth, s.k_plus);
    const GridAxes axes = default_axes();
    const ErrorMatrices mats = error_matrices(axes, s);
    bool any_saturated = false;
    for (std::size_t i = 0; i < axes.rows(); ++i)
        for (std::size_t j = 0; j < axes.cols(); ++j) {
            if (mats.calibrated(i, j) == 0.0) any_saturated = true;
            CHECK(std::isfinite(mats.m_minus(i, j)));
            CHECK(std::isfinite(mats.m_plus(i, j)));
        }
    CHECK(any_saturated); // the extreme corners cannot reach this target
    CHECK(mats.atm_residual_max <= 1e-14);
}
