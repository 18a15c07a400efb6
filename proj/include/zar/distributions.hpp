#pragma once

// Mean/dispersion-parameterized continuous families and the zero-adjusted
// mixture built on top of them.
//
// Conventions:
//   Beta01           shapes (mu*phi, (1-mu)*phi), Var = mu(1-mu)/(1+phi)
//   Gamma            shape 1/phi, scale mu*phi,   Var = phi*mu^2
//   InverseGaussian  lambda = 1/phi,              Var = phi*mu^3

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "zar/normal.hpp"
#include "zar/rng.hpp"
#include "zar/special_functions.hpp"

namespace zar {

enum class ContinuousFamily { Beta01, Gamma, InverseGaussian };

inline std::string family_name(ContinuousFamily f) {
    switch (f) {
        case ContinuousFamily::Beta01: return "beta";
        case ContinuousFamily::Gamma: return "gamma";
        case ContinuousFamily::InverseGaussian: return "inverse_gaussian";
    }
    return "?";
}

inline ContinuousFamily parse_family(const std::string& s) {
    if (s == "beta" || s == "zabe") return ContinuousFamily::Beta01;
    if (s == "gamma" || s == "zaga") return ContinuousFamily::Gamma;
    if (s == "inverse_gaussian" || s == "ig" || s == "zaig") {
        return ContinuousFamily::InverseGaussian;
    }
    throw std::invalid_argument("unknown family: " + s);
}

struct Support {
    double lo;
    double hi;  // +inf for the positive-halfline families
};

inline Support family_support(ContinuousFamily f) {
    if (f == ContinuousFamily::Beta01) return {0.0, 1.0};
    return {0.0, std::numeric_limits<double>::infinity()};
}

// Location/dispersion pair of the continuous part. mu is the mean of the
// positive component; phi its dispersion (Gamma, IG) or precision (Beta01).
struct MeanDispersionParams {
    double mu;
    double phi;
};

inline void validate_params(ContinuousFamily f, const MeanDispersionParams& p) {
    if (!(p.mu > 0.0) || !std::isfinite(p.mu)) {
        throw std::domain_error("params: mu must be positive and finite");
    }
    if (!(p.phi > 0.0) || !std::isfinite(p.phi)) {
        throw std::domain_error("params: phi must be positive and finite");
    }
    if (f == ContinuousFamily::Beta01 && !(p.mu < 1.0)) {
        throw std::domain_error("params: Beta01 requires mu < 1");
    }
}

// Parameter triple of the zero-adjusted mixture: a point mass alpha at zero
// plus (1 - alpha) times the continuous family density.
struct ZeroAdjustedParams {
    double alpha;
    MeanDispersionParams cont;
};

inline void validate_params(ContinuousFamily f, const ZeroAdjustedParams& zp) {
    if (!(zp.alpha > 0.0) || !(zp.alpha < 1.0)) {
        throw std::domain_error("params: alpha must lie in (0, 1)");
    }
    validate_params(f, zp.cont);
}

namespace detail {

inline void require_in_support(ContinuousFamily f, double y) {
    const Support s = family_support(f);
    if (!(y > s.lo) || !(y < s.hi)) {
        throw std::domain_error("y outside the family support");
    }
}

}  // namespace detail

inline double log_pdf_continuous(ContinuousFamily f, const MeanDispersionParams& p, double y) {
    validate_params(f, p);
    detail::require_in_support(f, y);
    switch (f) {
        case ContinuousFamily::Beta01: {
            const double a = p.mu * p.phi;
            const double b = (1.0 - p.mu) * p.phi;
            return (a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) - log_beta(a, b);
        }
        case ContinuousFamily::Gamma: {
            const double shape = 1.0 / p.phi;
            const double scale = p.mu * p.phi;
            return (shape - 1.0) * std::log(y) - y / scale - std::lgamma(shape) -
                   shape * std::log(scale);
        }
        case ContinuousFamily::InverseGaussian: {
            const double lambda = 1.0 / p.phi;
            static const double log_2pi = 1.8378770664093454835606594;
            const double dev = y - p.mu;
            return 0.5 * (std::log(lambda) - log_2pi - 3.0 * std::log(y)) -
                   lambda * dev * dev / (2.0 * p.mu * p.mu * y);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double pdf_continuous(ContinuousFamily f, const MeanDispersionParams& p, double y) {
    return std::exp(log_pdf_continuous(f, p, y));
}

inline double cdf_continuous(ContinuousFamily f, const MeanDispersionParams& p, double y) {
    validate_params(f, p);
    const Support s = family_support(f);
    if (y <= s.lo) return 0.0;
    if (y >= s.hi) return 1.0;
    switch (f) {
        case ContinuousFamily::Beta01:
            return incomplete_beta(p.mu * p.phi, (1.0 - p.mu) * p.phi, y);
        case ContinuousFamily::Gamma:
            return gamma_p(1.0 / p.phi, y / (p.mu * p.phi));
        case ContinuousFamily::InverseGaussian: {
            const double lambda = 1.0 / p.phi;
            const double root = std::sqrt(lambda / y);
            const double z1 = root * (y / p.mu - 1.0);
            const double z2 = -root * (y / p.mu + 1.0);
            // Second term evaluated in log space: the exp factor can be huge
            // while the Phi factor is correspondingly tiny.
            const double t2 = std::exp(2.0 * lambda / p.mu + norm_logcdf(z2));
            const double v = norm_cdf(z1) + t2;
            return v < 1.0 ? v : 1.0;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Family variance of the continuous part under the module conventions.
inline double variance_continuous(ContinuousFamily f, const MeanDispersionParams& p) {
    validate_params(f, p);
    switch (f) {
        case ContinuousFamily::Beta01: return p.mu * (1.0 - p.mu) / (1.0 + p.phi);
        case ContinuousFamily::Gamma: return p.phi * p.mu * p.mu;
        case ContinuousFamily::InverseGaussian: return p.phi * p.mu * p.mu * p.mu;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace detail {

// Bracketed Newton on cdf(x) - q with bisection fallback. lo/hi must bracket
// the root; x0 is a starting guess inside (lo, hi).
template <typename Cdf, typename Pdf>
double invert_cdf(const Cdf& cdf, const Pdf& pdf, double q, double x0, double lo, double hi) {
    double flo = cdf(lo) - q;
    if (flo > 0.0) return lo;
    double x = x0;
    if (!(x > lo) || !(x < hi)) x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double fx = cdf(x) - q;
        if (std::fabs(fx) < 1e-13) return x;
        if (fx > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double dx = pdf(x);
        double next = (dx > 0.0 && std::isfinite(dx)) ? x - fx / dx : lo;
        if (!(next > lo) || !(next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) < 1e-15 * (1.0 + std::fabs(x))) return next;
        x = next;
    }
    return x;
}

}  // namespace detail

inline double quantile_continuous(ContinuousFamily f, const MeanDispersionParams& p, double q) {
    validate_params(f, p);
    if (!(q > 0.0) || !(q < 1.0)) {
        throw std::domain_error("quantile_continuous: requires q in (0, 1)");
    }
    const double z = norm_quantile(q);
    const double sd = std::sqrt(variance_continuous(f, p));
    auto cdf = [&](double y) { return cdf_continuous(f, p, y); };
    auto pdf = [&](double y) { return pdf_continuous(f, p, y); };
    switch (f) {
        case ContinuousFamily::Beta01: {
            double x0 = p.mu + z * sd;
            if (!(x0 > 1e-12)) x0 = 1e-12;
            if (!(x0 < 1.0 - 1e-12)) x0 = 1.0 - 1e-12;
            return detail::invert_cdf(cdf, pdf, q, x0, 0.0, 1.0);
        }
        case ContinuousFamily::Gamma: {
            // Wilson-Hilferty start.
            const double k = 1.0 / p.phi;
            const double cube = 1.0 - 1.0 / (9.0 * k) + z / (3.0 * std::sqrt(k));
            double x0 = (cube > 0.0) ? p.mu * cube * cube * cube : p.mu * 1e-3;
            double hi = p.mu + 10.0 * sd + 1.0;
            while (cdf(hi) < q) hi *= 2.0;
            return detail::invert_cdf(cdf, pdf, q, x0, 0.0, hi);
        }
        case ContinuousFamily::InverseGaussian: {
            // Lognormal moment-match start.
            const double s2 = std::log1p(variance_continuous(f, p) / (p.mu * p.mu));
            double x0 = std::exp(std::log(p.mu) - 0.5 * s2 + std::sqrt(s2) * z);
            double hi = p.mu + 10.0 * sd + 1.0;
            while (cdf(hi) < q) hi *= 2.0;
            return detail::invert_cdf(cdf, pdf, q, x0, 0.0, hi);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Mixture density/mass: alpha at y == 0, (1 - alpha) f_W(y) for y > 0.
inline double pdf_zar(ContinuousFamily f, const ZeroAdjustedParams& zp, double y) {
    validate_params(f, zp);
    if (y < 0.0) throw std::domain_error("pdf_zar: requires y >= 0");
    if (y == 0.0) return zp.alpha;
    return (1.0 - zp.alpha) * pdf_continuous(f, zp.cont, y);
}

// Mixture CDF; right-continuous with F(0) = alpha exactly.
inline double cdf_zar(ContinuousFamily f, const ZeroAdjustedParams& zp, double y) {
    validate_params(f, zp);
    if (y < 0.0) throw std::domain_error("cdf_zar: requires y >= 0");
    if (y == 0.0) return zp.alpha;
    return zp.alpha + (1.0 - zp.alpha) * cdf_continuous(f, zp.cont, y);
}

inline double sample_continuous(ContinuousFamily f, const MeanDispersionParams& p,
                                rng::Stream& stream) {
    validate_params(f, p);
    switch (f) {
        case ContinuousFamily::Beta01:
        case ContinuousFamily::Gamma:
            return quantile_continuous(f, p, stream.uniform());
        case ContinuousFamily::InverseGaussian: {
            // Michael-Schucany-Haas; consumes one normal and one uniform.
            const double lambda = 1.0 / p.phi;
            const double n = stream.normal();
            const double v = n * n;
            const double mu = p.mu;
            const double x = mu + mu * mu * v / (2.0 * lambda) -
                             mu / (2.0 * lambda) *
                                 std::sqrt(4.0 * mu * lambda * v + mu * mu * v * v);
            const double u = stream.uniform();
            return (u <= mu / (mu + x)) ? x : mu * mu / x;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// One draw from the mixture: one uniform against alpha, then a continuous
// draw only when the positive part is selected.
inline double sample_zar(ContinuousFamily f, const ZeroAdjustedParams& zp, rng::Stream& stream) {
    validate_params(f, zp);
    if (stream.uniform() < zp.alpha) return 0.0;
    return sample_continuous(f, zp.cont, stream);
}

}  // namespace zar
