#pragma once

#include <cmath>

namespace smilegrid {

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double normal_pdf(double x) {
    return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

// Wichura's AS 241 (PPND16) rational approximation of the standard normal
// quantile, accurate to about 1e-16 over (0, 1).
double inverse_normal_cdf(double p);

} // namespace smilegrid
