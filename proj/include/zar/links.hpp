#pragma once

// Link functions for the three systematic components. Inverse links are
// numerically guarded: probability-type links keep their output inside
// (1e-12, 1 - 1e-12) and the log link caps the linear predictor, so fitted
// parameters stay strictly interior even for extreme predictors.

#include <cmath>
#include <stdexcept>
#include <string>

#include "zar/normal.hpp"

namespace zar {

enum class Link { Logit, Log, Identity, Probit, CLogLog };

inline constexpr double kProbClampLo = 1e-12;
inline constexpr double kProbClampHi = 1.0 - 1e-12;
inline constexpr double kLogLinkEtaCap = 690.0;

inline std::string link_name(Link l) {
    switch (l) {
        case Link::Logit: return "logit";
        case Link::Log: return "log";
        case Link::Identity: return "identity";
        case Link::Probit: return "probit";
        case Link::CLogLog: return "cloglog";
    }
    return "?";
}

inline Link parse_link(const std::string& s) {
    if (s == "logit") return Link::Logit;
    if (s == "log") return Link::Log;
    if (s == "identity") return Link::Identity;
    if (s == "probit") return Link::Probit;
    if (s == "cloglog") return Link::CLogLog;
    throw std::invalid_argument("unknown link: " + s);
}

inline double link_forward(Link l, double x) {
    switch (l) {
        case Link::Logit: return std::log(x / (1.0 - x));
        case Link::Log: return std::log(x);
        case Link::Identity: return x;
        case Link::Probit: return norm_quantile(x);
        case Link::CLogLog: return std::log(-std::log1p(-x));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace detail {

inline double clamp_prob(double p) {
    if (p < kProbClampLo) return kProbClampLo;
    if (p > kProbClampHi) return kProbClampHi;
    return p;
}

}  // namespace detail

inline double link_inverse(Link l, double eta) {
    switch (l) {
        case Link::Logit:
            return detail::clamp_prob(1.0 / (1.0 + std::exp(-eta)));
        case Link::Log: {
            const double e = eta > kLogLinkEtaCap   ? kLogLinkEtaCap
                             : eta < -kLogLinkEtaCap ? -kLogLinkEtaCap
                                                     : eta;
            return std::exp(e);
        }
        case Link::Identity:
            return eta;
        case Link::Probit:
            return detail::clamp_prob(norm_cdf(eta));
        case Link::CLogLog:
            return detail::clamp_prob(-std::expm1(-std::exp(eta)));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// d g^{-1}/d eta, evaluated at eta (used by scores and working weights).
inline double link_inverse_derivative(Link l, double eta) {
    switch (l) {
        case Link::Logit: {
            const double m = 1.0 / (1.0 + std::exp(-eta));
            return m * (1.0 - m);
        }
        case Link::Log: {
            const double e = eta > kLogLinkEtaCap   ? kLogLinkEtaCap
                             : eta < -kLogLinkEtaCap ? -kLogLinkEtaCap
                                                     : eta;
            return std::exp(e);
        }
        case Link::Identity:
            return 1.0;
        case Link::Probit:
            return norm_pdf(eta);
        case Link::CLogLog:
            return std::exp(eta - std::exp(eta));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double link_derivative(Link l, double x) {
    switch (l) {
        case Link::Logit: return 1.0 / (x * (1.0 - x));
        case Link::Log: return 1.0 / x;
        case Link::Identity: return 1.0;
        case Link::Probit: return 1.0 / norm_pdf(norm_quantile(x));
        case Link::CLogLog: return -1.0 / ((1.0 - x) * std::log1p(-x));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// Range compatibility used by the model layer: probability-valued parameters
// need a (0,1)-link, positive-valued parameters a positive-range link.
inline bool is_probability_link(Link l) {
    return l == Link::Logit || l == Link::Probit || l == Link::CLogLog;
}

inline bool is_positive_link(Link l) { return l == Link::Log; }

}  // namespace zar
