#include "smilegrid/grid_calibrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smilegrid/errors.hpp"

namespace smilegrid {

void CalibConfig::validate() const {
    if (grid_m < 6 || grid_n < 6)
        throw validation_error("grid dimensions below 6x6 do not reliably bracket the solution");
    if (!(epsilon_sabr > 0.0)) throw validation_error("epsilon_sabr must be positive");
    if (max_iterations < 1) throw validation_error("max_iterations must be at least 1");
    if (!(domain.alpha_lo > 0.0 && domain.alpha_lo < domain.alpha_hi))
        throw validation_error("alpha domain must be positive and ordered");
    if (!(domain.rho_lo > -1.0 && domain.rho_lo < domain.rho_hi && domain.rho_hi < 1.0))
        throw validation_error("rho domain must be ordered inside (-1, 1)");
    if (!(refine_ratio > 1.0)) throw validation_error("refine_ratio must exceed 1");
}

namespace {

// Cells whose ATM calibration failed carry placeholder values; every sign
// scan must skip them. An absent mask means all cells are valid.
bool cell_valid(const ErrorMatrices& mats, std::size_t i, std::size_t j) {
    if (mats.calibrated.rows() != mats.m_minus.rows() ||
        mats.calibrated.cols() != mats.m_minus.cols())
        return true;
    return mats.calibrated(i, j) != 0.0;
}

} // namespace

ZeroLines zero_lines(const ErrorMatrices& mats) {
    const std::size_t m = mats.m_minus.rows();
    const std::size_t n = mats.m_minus.cols();
    ZeroLines lines;
    lines.a_minus.assign(m, 0);
    lines.a_plus.assign(m, static_cast<int>(n) - 1);
    lines.n_cols = static_cast<int>(n);
    lines.minus_signs.assign(m, RowSigns::cross);
    lines.plus_signs.assign(m, RowSigns::cross);
    for (std::size_t i = 0; i < m; ++i) {
        bool any_pos_minus = false, any_neg_minus = false;
        bool any_pos_plus = false, any_neg_plus = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (!cell_valid(mats, i, j)) continue;
            if (mats.m_minus(i, j) > 0.0) {
                lines.a_minus[i] = static_cast<int>(j);
                any_pos_minus = true;
            } else {
                any_neg_minus = true;
            }
            (mats.m_plus(i, j) > 0.0 ? any_pos_plus : any_neg_plus) = true;
        }
        for (std::size_t j = n; j-- > 0;)
            if (cell_valid(mats, i, j) && mats.m_plus(i, j) > 0.0)
                lines.a_plus[i] = static_cast<int>(j);
        if (!any_pos_minus) lines.minus_signs[i] = RowSigns::all_negative;
        if (!any_neg_minus) lines.minus_signs[i] = RowSigns::all_positive;
        if (!any_pos_plus) lines.plus_signs[i] = RowSigns::all_negative;
        if (!any_neg_plus) lines.plus_signs[i] = RowSigns::all_positive;
    }
    return lines;
}

std::pair<int, int> alpha_bounds(const ZeroLines& lines) {
    const int m = static_cast<int>(lines.a_minus.size());
    int alpha_s = 0;
    int alpha_f = m - 1;
    for (int i = 0; i < m; ++i) {
        if (lines.uninformative_row(i)) continue;
        if (lines.a_minus[i] < lines.a_plus[i] - 1) alpha_s = i;
        if (lines.a_minus[i] < lines.a_plus[i]) alpha_f = i + 1;
    }
    alpha_f = std::min(alpha_f, m - 1);
    return {alpha_s, alpha_f};
}

BoundsBox rho_bounds_zl(const ZeroLines& lines, std::pair<int, int> ab) {
    BoundsBox box;
    box.alpha_s = ab.first;
    box.alpha_f = ab.second;
    const int rho_s_minus = lines.a_minus[box.alpha_s];
    const int rho_s_plus = lines.a_plus[box.alpha_s];
    const int rho_f_minus = lines.a_minus[box.alpha_f];
    const int rho_f_plus = lines.a_plus[box.alpha_f];
    box.zl = BoundsBox::ZlDetail{rho_s_minus, rho_s_plus, rho_f_minus, rho_f_plus};

    // The slope-case selection assumes both bound rows show proper zero
    // crossings and that the slope direction is visible at this grid
    // resolution. Anything else falls back to the widened envelope of the
    // four line reads.
    bool ambiguous = rho_s_minus == rho_f_minus || rho_s_plus == rho_f_plus;
    if (!lines.minus_signs.empty()) {
        for (const int row : {box.alpha_s, box.alpha_f})
            if (lines.minus_signs[row] != RowSigns::cross ||
                lines.plus_signs[row] != RowSigns::cross)
                ambiguous = true;
    }

    if (ambiguous) {
        box.rho_s = std::min(std::min(rho_s_minus, rho_s_plus), std::min(rho_f_minus, rho_f_plus));
        box.rho_f = std::max(std::max(rho_s_minus, rho_s_plus), std::max(rho_f_minus, rho_f_plus));
        if (lines.n_cols > 0) {
            box.rho_s = std::max(box.rho_s - 1, 0);
            box.rho_f = std::min(box.rho_f + 1, lines.n_cols - 1);
        }
    } else if (rho_s_minus > rho_f_minus) { // figure 7c
        box.rho_s = rho_f_minus;
        box.rho_f = rho_s_plus;
    } else if (rho_s_plus < rho_f_plus) { // figure 7d
        box.rho_s = rho_s_plus;
        box.rho_f = rho_f_plus;
    } else { // figures 7a, 7b
        box.rho_s = rho_s_minus;
        box.rho_f = rho_s_plus;
    }
    if (box.rho_s > box.rho_f) std::swap(box.rho_s, box.rho_f);
    return box;
}

BoundsBox rho_bounds_rv(const ErrorMatrices& mats, std::pair<int, int> ab) {
    const int n = static_cast<int>(mats.m_minus.cols());
    BoundsBox box;
    box.alpha_s = ab.first;
    box.alpha_f = ab.second;
    int i_s = 0;
    int i_f = n - 1;
    for (int j = 0; j < n; ++j) {
        if (mats.m_minus(box.alpha_s, j) > mats.m_plus(box.alpha_s, j)) i_s = j;
        if (mats.m_minus(box.alpha_f, j) > mats.m_plus(box.alpha_f, j)) i_f = j;
    }
    box.rv = BoundsBox::RvDetail{i_s, i_f};
    box.rho_s = std::min(i_s, i_f);
    box.rho_f = std::min(std::max(i_s, i_f) + 1, n - 1);
    return box;
}

std::optional<MeshRefinement> local_mesh_refine(const ErrorMatrices& mats, const BoundsBox& box,
                                                const GridAxes& axes) {
    const int n = static_cast<int>(mats.m_minus.cols());
    const int rows = box.alpha_f - box.alpha_s + 1;
    if (rows < 2) return std::nullopt;

    MeshRefinement ref;
    ref.row_cross_idx.resize(rows);
    ref.eps1_minus.resize(rows);
    ref.eps2_minus.resize(rows);
    ref.eps1_plus.resize(rows);
    ref.eps2_plus.resize(rows);
    ref.rho_lo.resize(rows);
    ref.rho_hi.resize(rows);
    ref.slope_minus.resize(rows);
    ref.intercept_minus.resize(rows);
    ref.slope_plus.resize(rows);
    ref.intercept_plus.resize(rows);
    ref.cross_rho.resize(rows);
    ref.cross_err.resize(rows);

    for (int r = 0; r < rows; ++r) {
        const int i = box.alpha_s + r;
        int cross = 0;
        for (int j = 0; j < n; ++j)
            if (mats.m_minus(i, j) > mats.m_plus(i, j)) cross = j;
        cross = std::min(cross, n - 2); // sampling needs column cross + 1
        ref.row_cross_idx[r] = cross;

        ref.eps1_minus[r] = mats.m_minus(i, cross);
        ref.eps2_minus[r] = mats.m_minus(i, cross + 1);
        ref.eps1_plus[r] = mats.m_plus(i, cross);
        ref.eps2_plus[r] = mats.m_plus(i, cross + 1);
        ref.rho_lo[r] = axes.rhos[cross];
        ref.rho_hi[r] = axes.rhos[cross + 1];

        const double drho = ref.rho_lo[r] - ref.rho_hi[r];
        ref.slope_minus[r] = (ref.eps1_minus[r] - ref.eps2_minus[r]) / drho;
        ref.intercept_minus[r] = ref.eps1_minus[r] - ref.slope_minus[r] * ref.rho_lo[r];
        ref.slope_plus[r] = (ref.eps1_plus[r] - ref.eps2_plus[r]) / drho;
        ref.intercept_plus[r] = ref.eps1_plus[r] - ref.slope_plus[r] * ref.rho_lo[r];

        const double da = ref.slope_plus[r] - ref.slope_minus[r];
        if (da == 0.0) return std::nullopt; // parallel lines, no crossing estimate
        ref.cross_rho[r] = -(ref.intercept_plus[r] - ref.intercept_minus[r]) / da;
        ref.cross_err[r] = ref.slope_minus[r] * ref.cross_rho[r] + ref.intercept_minus[r];
    }

    int best = 0;
    for (int r = 1; r < rows; ++r)
        if (std::abs(ref.cross_err[r]) < std::abs(ref.cross_err[best])) best = r;
    ref.best_idx = best;

    const auto sign = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
    const int sb = sign(ref.cross_err[best]);
    int neighbor = -1;
    for (const int cand : {best - 1, best + 1}) {
        if (cand < 0 || cand >= rows) continue;
        if (sign(ref.cross_err[cand]) == sb) continue;
        if (neighbor < 0 ||
            std::abs(ref.cross_err[cand]) < std::abs(ref.cross_err[neighbor]))
            neighbor = cand;
    }
    if (neighbor < 0) return std::nullopt;
    ref.neighbor_idx = neighbor;

    const int i1 = std::min(best, neighbor);
    const int i2 = std::max(best, neighbor);
    const double e1 = ref.cross_err[i1];
    const double e2 = ref.cross_err[i2];
    const double r1 = ref.cross_rho[i1];
    const double r2 = ref.cross_rho[i2];
    const double a1 = axes.alphas[box.alpha_s + i1];
    const double a2 = axes.alphas[box.alpha_s + i2];

    ref.fit_a_rho = (e1 - e2) / (r1 - r2);
    ref.fit_b_rho = e1 - ref.fit_a_rho * r1;
    ref.fit_a_alpha = (e1 - e2) / (a1 - a2);
    ref.fit_b_alpha = e1 - ref.fit_a_alpha * a1;

    // Interpolate to the zero of the error along the crossing line. This is
    // the -b/a intersection written in a form that tolerates r1 == r2.
    const double t = (e1 == e2) ? 0.0 : e1 / (e1 - e2);
    ref.rho_target = r1 + t * (r2 - r1);
    ref.alpha_target = a1 + t * (a2 - a1);

    // Clamp into the bounds box to preserve the bracketing guarantee.
    ref.alpha_target = std::clamp(ref.alpha_target, axes.alphas[box.alpha_s], axes.alphas[box.alpha_f]);
    ref.rho_target = std::clamp(ref.rho_target, axes.rhos[box.rho_s], axes.rhos[box.rho_f]);
    if (!std::isfinite(ref.alpha_target) || !std::isfinite(ref.rho_target)) return std::nullopt;
    return ref;
}

namespace {

// One axis of the locally refined mesh: the target sits on the center node
// and cell widths grow geometrically moving outward, starting from an
// innermost spacing of width / (4 (count - 1)). A side whose geometric
// extent overshoots its bound is rescaled onto it; one that undershoots has
// its outermost node clamped onto the bound.
std::vector<double> refined_axis(double lo, double hi, int count, double target, double ratio) {
    const double width = hi - lo;
    if (!(width > 0.0)) return std::vector<double>(count, lo);
    const double h0 = width / (4.0 * (count - 1));
    const int center = (count - 1) / 2;
    if (!(target > lo && target < hi) || center < 1 || center > count - 2)
        return linspace(lo, hi, count);

    std::vector<double> axis(count);
    axis[center] = target;

    const auto fill_side = [&](int cells, double bound, int dir) {
        // cumulative offsets h0 * (ratio^k - 1) / (ratio - 1)
        std::vector<double> off(cells + 1, 0.0);
        double gap = h0;
        for (int k = 1; k <= cells; ++k) {
            off[k] = off[k - 1] + gap;
            gap *= ratio;
        }
        const double extent = std::abs(bound - target);
        const double scale = off[cells] > extent ? extent / off[cells] : 1.0;
        for (int k = 1; k < cells; ++k) axis[center + dir * k] = target + dir * off[k] * scale;
        axis[center + dir * cells] = bound;
    };
    fill_side(center, lo, -1);
    fill_side(count - 1 - center, hi, +1);

    for (int k = 0; k + 1 < count; ++k)
        if (!(axis[k] < axis[k + 1])) return linspace(lo, hi, count); // degenerate spacing
    return axis;
}

} // namespace

GridAxes build_next_axes(const BoundsBox& box, const std::optional<MeshRefinement>& refinement,
                         const GridAxes& axes, const CalibConfig& cfg) {
    const double alpha_lo = axes.alphas[box.alpha_s];
    const double alpha_hi = axes.alphas[box.alpha_f];
    const double rho_lo = axes.rhos[box.rho_s];
    const double rho_hi = axes.rhos[box.rho_f];

    GridAxes next;
    if (refinement) {
        next.alphas = refined_axis(alpha_lo, alpha_hi, cfg.grid_m, refinement->alpha_target,
                                   cfg.refine_ratio);
        next.rhos = refined_axis(rho_lo, rho_hi, cfg.grid_n, refinement->rho_target,
                                 cfg.refine_ratio);
    } else {
        next.alphas = alpha_lo < alpha_hi ? linspace(alpha_lo, alpha_hi, cfg.grid_m)
                                          : std::vector<double>(cfg.grid_m, alpha_lo);
        next.rhos = rho_lo < rho_hi ? linspace(rho_lo, rho_hi, cfg.grid_n)
                                    : std::vector<double>(cfg.grid_n, rho_lo);
    }
    return next;
}

namespace {

struct BestCell {
    double err = std::numeric_limits<double>::infinity();
    std::size_t i = 0, j = 0;
};

BestCell best_cell(const ErrorMatrices& mats) {
    BestCell best;
    for (std::size_t i = 0; i < mats.m_minus.rows(); ++i)
        for (std::size_t j = 0; j < mats.m_minus.cols(); ++j) {
            const double e = std::abs(mats.m_minus(i, j)) + std::abs(mats.m_plus(i, j));
            if (e < best.err) best = {e, i, j};
        }
    return best;
}

bool any_bracketing_row(const ErrorMatrices& mats) {
    const std::size_t m = mats.m_minus.rows();
    const std::size_t n = mats.m_minus.cols();
    for (std::size_t i = 0; i < m; ++i) {
        bool cross_minus = false, cross_plus = false;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            if (mats.m_minus(i, j) > 0.0 && mats.m_minus(i, j + 1) < 0.0) cross_minus = true;
            if (mats.m_plus(i, j) < 0.0 && mats.m_plus(i, j + 1) > 0.0) cross_plus = true;
        }
        if (cross_minus && cross_plus) return true;
    }
    return false;
}

} // namespace

CalibResult calibrate(const MarketSmile& smile, const CalibConfig& cfg) {
    cfg.validate();
    smile.validate();

    GridAxes axes;
    axes.alphas = linspace(cfg.domain.alpha_lo, cfg.domain.alpha_hi, cfg.grid_m);
    axes.rhos = linspace(cfg.domain.rho_lo, cfg.domain.rho_hi, cfg.grid_n);

    CalibResult result;
    result.final_error = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        const ErrorMatrices mats = error_matrices(axes, smile, cfg.s0, cfg.workers);
        const BestCell best = best_cell(mats);
        if (best.err < result.final_error) {
            result.final_error = best.err;
            result.alpha_star = axes.alphas[best.i];
            result.rho_star = axes.rhos[best.j];
            result.s0_star = mats.s0_grid(best.i, best.j);
        }
        result.iterations = iter;
        const bool done = result.final_error <= cfg.epsilon_sabr;

        if (iter == 1 && !done && !any_bracketing_row(mats))
            throw calibration_error(
                "initial grid does not bracket the smile; enlarge the domain or grid");

        const ZeroLines lines = zero_lines(mats);
        const auto ab = alpha_bounds(lines);
        // The ZL method is mandatory on the first iteration; RV and mesh
        // refinement assume the grid is already near the solution.
        const bool use_rv = iter > 1 && cfg.variant != Variant::V1;
        BoundsBox box = use_rv ? rho_bounds_rv(mats, ab) : rho_bounds_zl(lines, ab);

        result.bounds_history.push_back({iter, axes.alphas[box.alpha_s], axes.alphas[box.alpha_f],
                                         axes.rhos[box.rho_s], axes.rhos[box.rho_f], best.err});

        if (done) {
            result.converged = true;
            return result;
        }
        std::optional<MeshRefinement> refinement;
        if (cfg.variant == Variant::V3 && iter > 1)
            refinement = local_mesh_refine(mats, box, axes);
        axes = build_next_axes(box, refinement, axes, cfg);
    }
    result.converged = result.final_error <= cfg.epsilon_sabr;
    return result;
}

} // namespace smilegrid
