#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bsdr {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Max-shifted log(sum(exp(v))). Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> values) {
    double peak = kNegInf;
    for (double v : values) peak = std::max(peak, v);
    if (!std::isfinite(peak)) return peak;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - peak);
    return peak + std::log(acc);
}

inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (a == kNegInf) return kNegInf;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace bsdr
