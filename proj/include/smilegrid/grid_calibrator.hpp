#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "smilegrid/sabr.hpp"

namespace smilegrid {

// Sign pattern of one residual row: a proper zero crossing, or a constant
// sign across the whole rho range.
enum class RowSigns : unsigned char { cross, all_negative, all_positive };

// Per-alpha-row rho indices of the zero crossings of M- and M+ (the lines
// A- and A+). Rows without a sign change keep their initialization values.
struct ZeroLines {
    std::vector<int> a_minus; // init to first rho index
    std::vector<int> a_plus;  // init to last rho index
    int n_cols = 0;           // rho axis length the indices refer to
    std::vector<RowSigns> minus_signs; // optional; empty means all-cross
    std::vector<RowSigns> plus_signs;

    // Rows where M- < 0 < M+ (or M- > 0 > M+) across the whole rho range
    // carry no above/below information for the alpha bounds.
    bool uninformative_row(int i) const {
        if (minus_signs.empty() || plus_signs.empty()) return false;
        return (minus_signs[i] == RowSigns::all_negative &&
                plus_signs[i] == RowSigns::all_positive) ||
               (minus_signs[i] == RowSigns::all_positive &&
                plus_signs[i] == RowSigns::all_negative);
    }
};

// Index bounds bracketing the solution, plus the intermediates that chose
// them (ZL rho indices at the alpha bounds, or the RV crossing indices).
struct BoundsBox {
    int alpha_s = 0;
    int alpha_f = 0;
    int rho_s = 0;
    int rho_f = 0;

    struct ZlDetail {
        int rho_s_minus, rho_s_plus, rho_f_minus, rho_f_plus;
    };
    struct RvDetail {
        int i_s, i_f;
    };
    std::optional<ZlDetail> zl;
    std::optional<RvDetail> rv;
};

// Intermediates and outputs of the local mesh refinement step.
struct MeshRefinement {
    std::vector<int> row_cross_idx; // per-row max rho index with M- > M+
    std::vector<double> eps1_minus, eps2_minus, eps1_plus, eps2_plus;
    std::vector<double> rho_lo, rho_hi; // sampled rho values at I, I+1
    std::vector<double> slope_minus, intercept_minus, slope_plus, intercept_plus;
    std::vector<double> cross_rho, cross_err; // estimated equal-error points per row
    int best_idx = 0;     // argmin |cross_err|
    int neighbor_idx = 0; // opposite-sign neighbor
    double fit_a_rho = 0.0, fit_b_rho = 0.0, fit_a_alpha = 0.0, fit_b_alpha = 0.0;
    double alpha_target = 0.0;
    double rho_target = 0.0;
};

enum class Variant { V1, V2, V3 };

struct CalibDomain {
    double alpha_lo = 1e-4;
    double alpha_hi = 2.0;
    double rho_lo = -0.999;
    double rho_hi = 0.999;
};

struct CalibConfig {
    int grid_m = 8;
    int grid_n = 8;
    double epsilon_sabr = 1e-10;
    Variant variant = Variant::V3;
    int max_iterations = 48;
    CalibDomain domain;
    double refine_ratio = 2.0; // growth factor of the locally refined mesh
    int workers = 1;
    S0RootConfig s0;

    void validate() const;
};

struct IterationTrace {
    int iteration = 0;
    double alpha_s = 0.0, alpha_f = 0.0;
    double rho_s = 0.0, rho_f = 0.0;
    double min_error = 0.0;
};

struct CalibResult {
    double alpha_star = 0.0;
    double rho_star = 0.0;
    double s0_star = 0.0;
    double final_error = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<IterationTrace> bounds_history;
};

// Step 1: lines of intersection of M-, M+ with the zero plane.
ZeroLines zero_lines(const ErrorMatrices& mats);

// Step 2: alpha bounds [alpha_s, alpha_f] as row indices.
std::pair<int, int> alpha_bounds(const ZeroLines& lines);

// Step 3, zero line method: rho bounds plus the chosen intermediates.
BoundsBox rho_bounds_zl(const ZeroLines& lines, std::pair<int, int> ab);

// Step 3, relative value method.
BoundsBox rho_bounds_rv(const ErrorMatrices& mats, std::pair<int, int> ab);

// Step 4: estimate (alpha_target, rho_target) from the rows of the bounds
// box. Returns nullopt when no opposite-sign neighbor exists.
std::optional<MeshRefinement> local_mesh_refine(const ErrorMatrices& mats, const BoundsBox& box,
                                                const GridAxes& axes);

// Next-iteration axes spanning the bounds box: uniform without refinement,
// geometrically clustered around the refinement target with it.
GridAxes build_next_axes(const BoundsBox& box, const std::optional<MeshRefinement>& refinement,
                         const GridAxes& axes, const CalibConfig& cfg);

// Full iterative grid calibration loop.
CalibResult calibrate(const MarketSmile& smile, const CalibConfig& cfg);

} // namespace smilegrid
