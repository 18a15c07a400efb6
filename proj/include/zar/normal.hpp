#pragma once

// Standard-normal CDF, log-CDF, density and quantile. The quantile clamps
// its argument into [1e-300, 1 - 1e-16] before inverting: star-residual
// transforms can feed it products that underflow toward 0, and the clamp
// turns those into a large finite value instead of -inf.

#include <cmath>
#include <stdexcept>

namespace zar {

inline constexpr double kNormQuantileClampLo = 1e-300;
inline constexpr double kNormQuantileClampHi = 1.0 - 1e-16;

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
    static const double inv_sqrt2 = 0.7071067811865475244008444;
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

// log Phi(x), stable far into the left tail where erfc underflows.
inline double norm_logcdf(double x) {
    if (x > -10.0) {
        return std::log(norm_cdf(x));
    }
    // Mills-ratio asymptotic: Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...)
    const double inv2 = 1.0 / (x * x);
    const double series =
        1.0 - inv2 * (1.0 - inv2 * (3.0 - inv2 * (15.0 - inv2 * 105.0)));
    static const double log_sqrt_2pi = 0.9189385332046727417803297;
    return -0.5 * x * x - log_sqrt_2pi - std::log(-x) + std::log(series);
}

namespace detail {

// Acklam's rational approximation on (0, 0.5], ~1e-9 relative.
inline double norm_quantile_estimate(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double norm_quantile_lower_half(double p) {
    double x = norm_quantile_estimate(p);
    // Two Halley refinements push the estimate to full double precision.
    for (int pass = 0; pass < 2; ++pass) {
        const double err = norm_cdf(x) - p;
        const double u = err / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

}  // namespace detail

inline double norm_quantile(double q) {
    if (!(q > 0.0) || !(q < 1.0)) {
        throw std::domain_error("norm_quantile: requires q in (0, 1)");
    }
    if (q < kNormQuantileClampLo) q = kNormQuantileClampLo;
    if (q > kNormQuantileClampHi) q = kNormQuantileClampHi;
    if (q <= 0.5) return detail::norm_quantile_lower_half(q);
    return -detail::norm_quantile_lower_half(1.0 - q);
}

}  // namespace zar
