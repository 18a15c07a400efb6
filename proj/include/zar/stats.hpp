#pragma once

// Order-statistic utilities shared by the envelope and simulation modules.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace zar {

// Quantile with linear interpolation between order statistics (the common
// "type 7" rule). p = 0 gives the minimum, p = 1 the maximum.
inline double quantile_type7_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile_type7(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_type7_sorted(values, p);
}

struct DescriptiveStats {
    double min;
    double q1;
    double median;
    double mean;
    double q3;
    double max;
};

inline DescriptiveStats descriptive_stats(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("descriptive_stats: empty sample");
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    return DescriptiveStats{sorted.front(),
                            quantile_type7_sorted(sorted, 0.25),
                            quantile_type7_sorted(sorted, 0.5),
                            sum / static_cast<double>(sorted.size()),
                            quantile_type7_sorted(sorted, 0.75),
                            sorted.back()};
}

}  // namespace zar
