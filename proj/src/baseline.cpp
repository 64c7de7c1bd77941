#include "smilegrid/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "smilegrid/errors.hpp"

namespace smilegrid {

void GdConfig::validate() const {
    if (!(step_alpha > 0.0 && step_rho > 0.0)) throw validation_error("step sizes must be positive");
    if (!(shrink > 0.0 && shrink < 1.0 && grow > 1.0))
        throw validation_error("need shrink < 1 < grow");
    if (!(epsilon_sabr > 0.0)) throw validation_error("epsilon_sabr must be positive");
    if (max_updates < 2) throw validation_error("max_updates must allow at least one step");
}

namespace {

constexpr double kGradRelStep = 1e-6;

double clamped_objective(double alpha, double rho, const MarketSmile& smile,
                         const CalibDomain& dom, const S0RootConfig& s0cfg) {
    alpha = std::clamp(alpha, dom.alpha_lo, dom.alpha_hi);
    rho = std::clamp(rho, dom.rho_lo, dom.rho_hi);
    return objective(alpha, rho, smile, s0cfg);
}

} // namespace

CalibResult calibrate_gd(const MarketSmile& smile, const GdConfig& cfg) {
    cfg.validate();
    smile.validate();
    const CalibDomain& dom = cfg.domain;

    double alpha = std::clamp(cfg.initial_alpha, dom.alpha_lo, dom.alpha_hi);
    double rho = std::clamp(cfg.initial_rho, dom.rho_lo, dom.rho_hi);
    double f = objective(alpha, rho, smile, cfg.s0);

    CalibResult result;
    double lambda = 1.0;
    int updates = 0;

    while (f > cfg.epsilon_sabr && updates < cfg.max_updates) {
        // Central finite differences with relative steps.
        const double ha = kGradRelStep * std::max(std::abs(alpha), 1e-3);
        const double hr = kGradRelStep * std::max(std::abs(rho), 1e-3);
        const double ga = (clamped_objective(alpha + ha, rho, smile, dom, cfg.s0) -
                           clamped_objective(alpha - ha, rho, smile, dom, cfg.s0)) /
                          (2.0 * ha);
        const double gr = (clamped_objective(alpha, rho + hr, smile, dom, cfg.s0) -
                           clamped_objective(alpha, rho - hr, smile, dom, cfg.s0)) /
                          (2.0 * hr);
        const double norm = std::hypot(ga * cfg.step_alpha, gr * cfg.step_rho);
        if (!(norm > 0.0)) break; // flat point: nothing to follow

        // Backtracking line search along the scaled steepest descent direction.
        bool accepted = false;
        while (lambda * norm > 1e-18) {
            const double cand_alpha =
                std::clamp(alpha - lambda * cfg.step_alpha * cfg.step_alpha * ga, dom.alpha_lo,
                           dom.alpha_hi);
            const double cand_rho = std::clamp(rho - lambda * cfg.step_rho * cfg.step_rho * gr,
                                               dom.rho_lo, dom.rho_hi);
            const double cand_f = objective(cand_alpha, cand_rho, smile, cfg.s0);
            if (cand_f < f) {
                alpha = cand_alpha;
                rho = cand_rho;
                f = cand_f;
                lambda *= cfg.grow;
                accepted = true;
                updates += 2; // one update each on alpha and rho
                break;
            }
            lambda *= cfg.shrink;
        }
        if (!accepted) break; // step size exhausted
    }

    result.alpha_star = alpha;
    result.rho_star = rho;
    result.s0_star = calibrate_s0(alpha, rho, smile, cfg.s0);
    result.final_error = f;
    result.iterations = updates;
    result.converged = f <= cfg.epsilon_sabr;
    return result;
}

} // namespace smilegrid
