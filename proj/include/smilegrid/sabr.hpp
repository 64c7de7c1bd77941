#pragma once

#include <cstddef>

#include "smilegrid/grid.hpp"

namespace smilegrid {

// SABR model parameters. alpha is the volatility of volatility, s0 the
// initial volatility level (the paper's s(0)); beta is held fixed per smile.
struct SabrParams {
    double alpha = 0.0;
    double beta = 0.5;
    double rho = 0.0;
    double s0 = 0.0;
    double f0 = 0.0;
    double expiry = 0.0;

    void validate() const;
};

// Three-strike calibration target. k_atm must equal the forward f0.
struct MarketSmile {
    double k_minus = 0.0;
    double k_atm = 0.0;
    double k_plus = 0.0;
    double vol_minus = 0.0;
    double vol_atm = 0.0;
    double vol_plus = 0.0;
    double f0 = 0.0;
    double expiry = 0.0;
    double beta = 0.5;

    void validate() const;
};

// Residual surfaces over an (alpha, rho) grid with s0 calibrated per cell.
// Cells whose ATM target is unattainable at that (alpha, rho) — the Hagan
// correction rolls the ATM expression over before it reaches the market vol —
// carry best-effort residuals at the vol-maximizing s0 and are flagged 0 in
// `calibrated`. atm_residual_max covers calibrated cells only.
struct ErrorMatrices {
    Matrix m_minus;
    Matrix m_plus;
    Matrix s0_grid;
    Matrix calibrated;
    double atm_residual_max = 0.0;
};

// Controls the s(0) root find behind calibrate_s0.
struct S0RootConfig {
    double s0_lo = 1e-6;
    double bracket_mult = 10.0; // upper bracket = mult * vol_atm * f0^(1-beta)
    double tol = 1e-14;         // on the ATM vol residual
    int max_iter = 200;
};

// Hagan et al. (2002) lognormal implied volatility for strike K.
double implied_vol(const SabrParams& params, double strike);

// Solves |sigma(k_atm; alpha, rho, s0) - vol_atm| <= cfg.tol for s0.
double calibrate_s0(double alpha, double rho, const MarketSmile& smile,
                    const S0RootConfig& cfg = {});

ErrorMatrices error_matrices(const GridAxes& axes, const MarketSmile& smile,
                             const S0RootConfig& cfg = {}, int workers = 1);

// |M-| + |M+| at one (alpha, rho) point with s0 implicitly calibrated.
double objective(double alpha, double rho, const MarketSmile& smile,
                 const S0RootConfig& cfg = {});

} // namespace smilegrid
