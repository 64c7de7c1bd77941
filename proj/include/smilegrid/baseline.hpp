#pragma once

#include "smilegrid/grid_calibrator.hpp"
#include "smilegrid/sabr.hpp"

namespace smilegrid {

// Single-worker gradient-descent reference calibrator. s(0) is nested via
// its ATM root find, so the descent runs over (alpha, rho) only.
struct GdConfig {
    double initial_alpha = 1.0;
    double initial_rho = 0.0;
    double initial_s0 = 0.0; // informational; s0 is re-derived each step
    double step_alpha = 0.25;
    double step_rho = 0.25;
    double shrink = 0.5;
    double grow = 1.3;
    double epsilon_sabr = 1e-10;
    int max_updates = 400; // combined alpha + rho updates
    CalibDomain domain;
    S0RootConfig s0;

    void validate() const;
};

// Result reuses CalibResult; iterations counts combined parameter updates.
CalibResult calibrate_gd(const MarketSmile& smile, const GdConfig& cfg);

} // namespace smilegrid
