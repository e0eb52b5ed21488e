#pragma once

#include <cmath>

namespace enp::math {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2*pi)
inline constexpr double kSqrt2 = 1.4142135623730950488;

/// Standard normal density.
inline double normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF via erfc (stable in both tails).
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

/// Standard normal tail function 1 - Phi(x).
inline double normal_tail(double x) {
    return 0.5 * std::erfc(x / kSqrt2);
}

/// Inverse standard normal CDF (Wichura's AS241, ~1e-15 absolute accuracy).
/// p outside (0,1) is a domain error.
double normal_quantile(double p);

/// Density of N(0, sigma^2) and its first three derivatives.
inline double gauss_pdf(double y, double sigma) {
    return normal_pdf(y / sigma) / sigma;
}
inline double gauss_dpdf(double y, double sigma) {
    return -y / (sigma * sigma) * gauss_pdf(y, sigma);
}
inline double gauss_d2pdf(double y, double sigma) {
    double s2 = sigma * sigma;
    return (y * y - s2) / (s2 * s2) * gauss_pdf(y, sigma);
}
inline double gauss_d3pdf(double y, double sigma) {
    double s2 = sigma * sigma;
    return y * (3.0 * s2 - y * y) / (s2 * s2 * s2) * gauss_pdf(y, sigma);
}

}  // namespace enp::math
