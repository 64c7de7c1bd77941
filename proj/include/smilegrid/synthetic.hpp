#pragma once

#include <cstdint>
#include <vector>

#include "smilegrid/sabr.hpp"

namespace smilegrid {

// A generated calibration target together with the parameters that built it.
struct SyntheticSmile {
    MarketSmile smile;
    double alpha_true = 0.0;
    double rho_true = 0.0;
    double s0_true = 0.0;
};

// Seeded suite generator: alpha in [0.1, 1.0], rho in [-0.7, 0.7], ATM vol in
// [0.1, 0.5], expiry in [0.5, 5], beta = 0.5, f0 = 100, strikes 80/100/125.
std::vector<SyntheticSmile> synthetic_smiles(std::size_t count, std::uint64_t seed);

} // namespace smilegrid
