#pragma once

// Residuals for zero-adjusted regression fits.
//
// Continuous-component residuals (quantile, deviance, Pearson, Anscombe,
// Williams) are defined only at positive observations; zeros carry an
// explicit undefined marker. The randomized quantile residual covers every
// observation by drawing a uniform on (0, alpha_hat) at zeros. The star
// transform folds alpha_hat into any component residual; applied to the
// quantile component it gives the zero adjusted quantile residual (ZAQR).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zar/model.hpp"
#include "zar/normal.hpp"
#include "zar/rng.hpp"

namespace zar {

struct ResidualKind {
    enum class Tag {
        QuantileComponent,
        Deviance,
        Pearson,
        Anscombe,
        Williams,
        BinaryZeroPart,
        RandomizedQuantile,
        Star
    };

    Tag tag = Tag::QuantileComponent;
    Tag inner = Tag::QuantileComponent;  // used only when tag == Star

    static bool component(Tag t) {
        return t == Tag::QuantileComponent || t == Tag::Deviance || t == Tag::Pearson ||
               t == Tag::Anscombe || t == Tag::Williams;
    }

    static ResidualKind quantile() { return {Tag::QuantileComponent, Tag::QuantileComponent}; }
    static ResidualKind deviance() { return {Tag::Deviance, Tag::Deviance}; }
    static ResidualKind pearson() { return {Tag::Pearson, Tag::Pearson}; }
    static ResidualKind anscombe() { return {Tag::Anscombe, Tag::Anscombe}; }
    static ResidualKind williams() { return {Tag::Williams, Tag::Williams}; }
    static ResidualKind binary_zero_part() { return {Tag::BinaryZeroPart, Tag::BinaryZeroPart}; }
    static ResidualKind randomized_quantile() {
        return {Tag::RandomizedQuantile, Tag::RandomizedQuantile};
    }
    static ResidualKind star(Tag inner_kind) {
        if (!component(inner_kind)) {
            throw std::invalid_argument("star residual wraps only continuous-component kinds");
        }
        return {Tag::Star, inner_kind};
    }
    static ResidualKind zaqr() { return star(Tag::QuantileComponent); }
};

inline std::string residual_kind_name(const ResidualKind& k) {
    using Tag = ResidualKind::Tag;
    switch (k.tag) {
        case Tag::QuantileComponent: return "quantile";
        case Tag::Deviance: return "deviance";
        case Tag::Pearson: return "pearson";
        case Tag::Anscombe: return "anscombe";
        case Tag::Williams: return "williams";
        case Tag::BinaryZeroPart: return "binary";
        case Tag::RandomizedQuantile: return "randomized_quantile";
        case Tag::Star: break;
    }
    if (k.inner == Tag::QuantileComponent) return "zaqr";
    return "star_" + residual_kind_name(ResidualKind{k.inner, k.inner});
}

inline ResidualKind parse_residual_kind(const std::string& s) {
    using Tag = ResidualKind::Tag;
    if (s == "quantile") return ResidualKind::quantile();
    if (s == "deviance") return ResidualKind::deviance();
    if (s == "pearson") return ResidualKind::pearson();
    if (s == "anscombe") return ResidualKind::anscombe();
    if (s == "williams") return ResidualKind::williams();
    if (s == "binary") return ResidualKind::binary_zero_part();
    if (s == "randomized_quantile" || s == "rq") return ResidualKind::randomized_quantile();
    if (s == "zaqr" || s == "star_quantile") return ResidualKind::zaqr();
    if (s == "star_deviance") return ResidualKind::star(Tag::Deviance);
    if (s == "star_pearson") return ResidualKind::star(Tag::Pearson);
    if (s == "star_anscombe") return ResidualKind::star(Tag::Anscombe);
    if (s == "star_williams") return ResidualKind::star(Tag::Williams);
    throw std::invalid_argument("unknown residual kind: " + s);
}

struct ResidualVector {
    ResidualKind kind;
    std::vector<std::optional<double>> values;  // one per observation
    Eigen::VectorXd alpha_hat;
    std::optional<std::uint64_t> seed;  // recorded for RandomizedQuantile
};

namespace detail {

// Normal quantile with the argument clamped into the representable open
// interval, so CDF values that round to 0 or 1 map to large finite residuals.
inline double safe_norm_quantile(double q) {
    return norm_quantile(std::clamp(q, kNormQuantileClampLo, kNormQuantileClampHi));
}

// Mixture CDF value of a positive observation: alpha + (1 - alpha) F_W(y).
// Shared by the randomized quantile residual and the fused ZAQR path so the
// two agree bitwise where Theorem 1 applies.
inline double positive_branch_q(double alpha, double f_cont) {
    return alpha + (1.0 - alpha) * f_cont;
}

inline void require_continuous_block(const ZarFit& fit) {
    if (!fit.continuous_block_fitted) {
        throw std::invalid_argument("residuals: fit has no continuous-part estimates");
    }
}

inline void require_alpha_block(const ZarFit& fit) {
    if (!fit.alpha_block_fitted) {
        throw std::invalid_argument("residuals: fit has no alpha-part estimates");
    }
}

inline void require_glm_family(const ZarFit& fit, const char* what) {
    if (fit.spec.family == ContinuousFamily::Beta01) {
        throw std::invalid_argument(std::string(what) +
                                    " residuals are defined for Gamma and InverseGaussian only");
    }
}

}  // namespace detail

// Eq. 4 transform. Strictly increasing in r on each branch; r = 0 is mapped
// through the positive branch by convention.
inline double star_residual(double r, double alpha_hat) {
    if (!(alpha_hat > 0.0 && alpha_hat < 1.0)) {
        throw std::domain_error("star_residual: alpha_hat must lie in (0,1)");
    }
    if (std::isnan(r)) return r;
    const double pr = norm_cdf(r);
    const double q = r < 0.0 ? pr * (1.0 - alpha_hat) : detail::positive_branch_q(alpha_hat, pr);
    return detail::safe_norm_quantile(q);
}

// Component quantile residual at one observation: Phi^{-1}(F_W(y_i)).
inline std::optional<double> quantile_component_residual(const ZarFit& fit, Eigen::Index i) {
    detail::require_continuous_block(fit);
    if (fit.y[i] == 0.0) return std::nullopt;
    const MeanDispersionParams p{fit.mu_hat[i], fit.phi_hat[i]};
    return detail::safe_norm_quantile(cdf_continuous(fit.spec.family, p, fit.y[i]));
}

inline std::optional<double> pearson_residual(const ZarFit& fit, Eigen::Index i) {
    detail::require_continuous_block(fit);
    detail::require_glm_family(fit, "Pearson");
    if (fit.y[i] == 0.0) return std::nullopt;
    const MeanDispersionParams p{fit.mu_hat[i], fit.phi_hat[i]};
    return (fit.y[i] - p.mu) / std::sqrt(variance_continuous(fit.spec.family, p));
}

namespace detail {

// Unit deviance of the continuous family (phi factored out).
inline double unit_deviance(ContinuousFamily f, double y, double mu) {
    if (f == ContinuousFamily::Gamma) {
        return 2.0 * ((y - mu) / mu - std::log(y / mu));
    }
    const double d = y - mu;
    return d * d / (mu * mu * y);  // inverse Gaussian
}

}  // namespace detail

inline std::optional<double> deviance_residual(const ZarFit& fit, Eigen::Index i) {
    detail::require_continuous_block(fit);
    detail::require_glm_family(fit, "deviance");
    if (fit.y[i] == 0.0) return std::nullopt;
    const double mu = fit.mu_hat[i];
    const double d = detail::unit_deviance(fit.spec.family, fit.y[i], mu);
    const double r = std::sqrt(std::max(d, 0.0) / fit.phi_hat[i]);
    return fit.y[i] < mu ? -r : r;
}

inline std::optional<double> anscombe_residual(const ZarFit& fit, Eigen::Index i) {
    detail::require_continuous_block(fit);
    detail::require_glm_family(fit, "Anscombe");
    if (fit.y[i] == 0.0) return std::nullopt;
    const double y = fit.y[i];
    const double mu = fit.mu_hat[i];
    const double sphi = std::sqrt(fit.phi_hat[i]);
    if (fit.spec.family == ContinuousFamily::Gamma) {
        return 3.0 * (std::cbrt(y) - std::cbrt(mu)) / (std::cbrt(mu) * sphi);
    }
    return std::log(y / mu) / (sphi * std::sqrt(mu));
}

// Diagonal of the weighted hat matrix of the mu submodel at the MLE,
// restricted to positive observations (undefined marker at zeros).
inline std::vector<std::optional<double>> leverage(const ZarFit& fit) {
    detail::require_continuous_block(fit);
    std::vector<Eigen::Index> pos;
    for (Eigen::Index i = 0; i < fit.n(); ++i) {
        if (fit.y[i] > 0.0) pos.push_back(i);
    }
    const Eigen::Index p = fit.x_mu.cols();
    Eigen::MatrixXd a(static_cast<Eigen::Index>(pos.size()), p);
    for (std::size_t k = 0; k < pos.size(); ++k) {
        const Eigen::Index i = pos[k];
        const MeanDispersionParams mp{fit.mu_hat[i], fit.phi_hat[i]};
        const double dmu = 1.0 / link_derivative(fit.spec.mu.link, fit.mu_hat[i]);
        const double w = dmu * dmu / variance_continuous(fit.spec.family, mp);
        a.row(static_cast<Eigen::Index>(k)) = std::sqrt(w) * fit.x_mu.row(i);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) {
        throw std::runtime_error("leverage: weighted cross-product is singular");
    }
    const Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), p);
    std::vector<std::optional<double>> h(static_cast<std::size_t>(fit.n()), std::nullopt);
    for (std::size_t k = 0; k < pos.size(); ++k) {
        h[static_cast<std::size_t>(pos[k])] =
            thin_q.row(static_cast<Eigen::Index>(k)).squaredNorm();
    }
    return h;
}

inline std::optional<double> williams_residual(const ZarFit& fit, Eigen::Index i,
                                               const std::vector<std::optional<double>>& lev) {
    detail::require_glm_family(fit, "Williams");
    if (fit.y[i] == 0.0) return std::nullopt;
    const double h = lev[static_cast<std::size_t>(i)].value();
    const double rd = *deviance_residual(fit, i);
    const double rp = *pearson_residual(fit, i);
    const double mag = std::sqrt((1.0 - h) * rd * rd + h * rp * rp);
    return fit.y[i] < fit.mu_hat[i] ? -mag : mag;
}

// Bernoulli deviance residual on the zero indicator.
inline Eigen::VectorXd binary_zero_part_residual(const ZarFit& fit) {
    detail::require_alpha_block(fit);
    Eigen::VectorXd r(fit.n());
    for (Eigen::Index i = 0; i < fit.n(); ++i) {
        const double a = fit.alpha_hat[i];
        if (fit.y[i] == 0.0) {
            r[i] = std::sqrt(-2.0 * std::log(a));
        } else {
            r[i] = -std::sqrt(-2.0 * std::log1p(-a));
        }
    }
    return r;
}

// Eq. 3: zeros draw u ~ U(0, alpha_hat); positives use the mixture CDF.
inline ResidualVector randomized_quantile_residual(const ZarFit& fit, rng::Stream& rng) {
    detail::require_alpha_block(fit);
    detail::require_continuous_block(fit);
    ResidualVector out;
    out.kind = ResidualKind::randomized_quantile();
    out.alpha_hat = fit.alpha_hat;
    out.seed = rng.seed();
    out.values.resize(static_cast<std::size_t>(fit.n()));
    for (Eigen::Index i = 0; i < fit.n(); ++i) {
        const double alpha = fit.alpha_hat[i];
        double q;
        if (fit.y[i] == 0.0) {
            q = rng.uniform_open(alpha);
        } else {
            const MeanDispersionParams p{fit.mu_hat[i], fit.phi_hat[i]};
            q = detail::positive_branch_q(alpha, cdf_continuous(fit.spec.family, p, fit.y[i]));
        }
        out.values[static_cast<std::size_t>(i)] = detail::safe_norm_quantile(q);
    }
    return out;
}

// ZAQR: the star transform of the component quantile residual. Since
// Phi(Phi^{-1}(F)) = F, the branches reduce to quantile evaluations of
// F(1-alpha) and alpha + (1-alpha)F; the positive branch then reproduces the
// randomized quantile residual exactly (Theorem 1).
inline ResidualVector zaqr(const ZarFit& fit) {
    detail::require_alpha_block(fit);
    detail::require_continuous_block(fit);
    ResidualVector out;
    out.kind = ResidualKind::zaqr();
    out.alpha_hat = fit.alpha_hat;
    out.values.resize(static_cast<std::size_t>(fit.n()));
    for (Eigen::Index i = 0; i < fit.n(); ++i) {
        if (fit.y[i] == 0.0) continue;  // undefined marker
        const double alpha = fit.alpha_hat[i];
        const MeanDispersionParams p{fit.mu_hat[i], fit.phi_hat[i]};
        const double f = cdf_continuous(fit.spec.family, p, fit.y[i]);
        const double q =
            f < 0.5 ? f * (1.0 - alpha) : detail::positive_branch_q(alpha, f);
        out.values[static_cast<std::size_t>(i)] = detail::safe_norm_quantile(q);
    }
    return out;
}

namespace detail {

inline ResidualVector component_vector(const ZarFit& fit, const ResidualKind& kind) {
    using Tag = ResidualKind::Tag;
    ResidualVector out;
    out.kind = kind;
    out.alpha_hat = fit.alpha_hat;
    out.values.resize(static_cast<std::size_t>(fit.n()));
    std::vector<std::optional<double>> lev;
    if (kind.tag == Tag::Williams) lev = leverage(fit);
    for (Eigen::Index i = 0; i < fit.n(); ++i) {
        std::optional<double> v;
        switch (kind.tag) {
            case Tag::QuantileComponent: v = quantile_component_residual(fit, i); break;
            case Tag::Deviance: v = deviance_residual(fit, i); break;
            case Tag::Pearson: v = pearson_residual(fit, i); break;
            case Tag::Anscombe: v = anscombe_residual(fit, i); break;
            case Tag::Williams: v = williams_residual(fit, i, lev); break;
            default: throw std::logic_error("component_vector: not a component kind");
        }
        out.values[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

}  // namespace detail

// Compute any residual kind; the RandomizedQuantile kind consumes the stream.
inline ResidualVector compute_residuals(const ZarFit& fit, const ResidualKind& kind,
                                        rng::Stream& rng) {
    using Tag = ResidualKind::Tag;
    switch (kind.tag) {
        case Tag::RandomizedQuantile:
            return randomized_quantile_residual(fit, rng);
        case Tag::BinaryZeroPart: {
            ResidualVector out;
            out.kind = kind;
            out.alpha_hat = fit.alpha_hat;
            const Eigen::VectorXd r = binary_zero_part_residual(fit);
            out.values.assign(r.data(), r.data() + r.size());
            return out;
        }
        case Tag::Star: {
            if (kind.inner == Tag::QuantileComponent) return zaqr(fit);
            detail::require_alpha_block(fit);
            ResidualVector out =
                detail::component_vector(fit, ResidualKind{kind.inner, kind.inner});
            out.kind = kind;
            for (Eigen::Index i = 0; i < fit.n(); ++i) {
                auto& v = out.values[static_cast<std::size_t>(i)];
                if (v) v = star_residual(*v, fit.alpha_hat[i]);
            }
            return out;
        }
        default:
            return detail::component_vector(fit, kind);
    }
}

inline ResidualVector compute_residuals(const ZarFit& fit, const ResidualKind& kind) {
    if (kind.tag == ResidualKind::Tag::RandomizedQuantile) {
        throw std::invalid_argument("randomized quantile residuals need a seeded stream");
    }
    rng::Stream unused(0);
    return compute_residuals(fit, kind, unused);
}

}  // namespace zar
