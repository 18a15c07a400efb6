#pragma once

// Test-side numerical oracles kept independent of the library internals:
// an erfc-based normal CDF, adaptive Simpson quadrature and a two-sided
// Kolmogorov-Smirnov statistic. Unit and acceptance suites compare library
// output against these instead of against the library itself.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace detail {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
    const double m = 0.5 * (a + b);
    const double flm = f(0.5 * (a + m));
    const double frm = f(0.5 * (m + b));
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson integral of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// sqrt(n) * sup|F_n - F|, to be compared against kKsCritical1pc.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double u = cdf(sample[i]);
        d = std::max(d, std::fabs(u - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - u));
    }
    return std::sqrt(n) * d;
}

// Asymptotic two-sided Kolmogorov critical value at the 1% level,
// sqrt(-ln(0.005)/2).
inline constexpr double kKsCritical1pc = 1.6276236307187293;

}  // namespace oracle
