#pragma once

// Zero-adjusted regression: model specification, log-likelihood, maximum
// likelihood fitting, covariance and Wald tests.
//
// The likelihood factorizes into a Bernoulli block for the zero indicator
// (alpha submodel) and a continuous block for the positive observations
// (mu and phi submodels). The two blocks are fitted and their information
// inverted separately; the cross-information is exactly zero.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "zar/distributions.hpp"
#include "zar/links.hpp"
#include "zar/optim.hpp"

namespace zar {

// Saturating value returned by the log-likelihood when a coefficient vector
// drives the linear predictor (or a density term) non-finite.
inline constexpr double kLogLikPenalty = -1e300;

struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> column_names;  // one per X column
    std::vector<std::string> ids;           // optional; defaults to 1-based row numbers

    Eigen::Index n() const { return y.size(); }
    std::string id(Eigen::Index i) const {
        return ids.empty() ? std::to_string(i + 1) : ids[static_cast<std::size_t>(i)];
    }
};

inline void validate_response(ContinuousFamily family, const Eigen::VectorXd& y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || y[i] < 0.0) {
            throw std::invalid_argument("response: y must be finite and >= 0 (row " +
                                        std::to_string(i + 1) + ")");
        }
        if (family == ContinuousFamily::Beta01 && y[i] >= 1.0) {
            throw std::invalid_argument("response: Beta01 requires y < 1 (row " +
                                        std::to_string(i + 1) + ")");
        }
    }
}

struct SubmodelSpec {
    std::vector<int> columns;  // indices into Dataset::X, intercept included as a column
    Link link = Link::Identity;
};

struct ZarModelSpec {
    ContinuousFamily family = ContinuousFamily::Beta01;
    SubmodelSpec mu;
    SubmodelSpec phi;
    SubmodelSpec alpha;

    void validate(Eigen::Index n_columns) const {
        auto check_columns = [&](const SubmodelSpec& s, const char* name) {
            if (s.columns.empty()) {
                throw std::invalid_argument(std::string(name) + " submodel: no covariates");
            }
            for (int c : s.columns) {
                if (c < 0 || c >= n_columns) {
                    throw std::invalid_argument(std::string(name) +
                                                " submodel: column index out of range");
                }
            }
        };
        check_columns(mu, "mu");
        check_columns(phi, "phi");
        check_columns(alpha, "alpha");
        if (!is_probability_link(alpha.link)) {
            throw std::invalid_argument("alpha submodel requires a (0,1)-range link");
        }
        if (family == ContinuousFamily::Beta01) {
            if (!is_probability_link(mu.link)) {
                throw std::invalid_argument("Beta01 mu submodel requires a (0,1)-range link");
            }
        } else if (!is_positive_link(mu.link)) {
            throw std::invalid_argument("mu submodel requires a positive-range link");
        }
        if (!is_positive_link(phi.link)) {
            throw std::invalid_argument("phi submodel requires a positive-range link");
        }
    }
};

struct FitOptions {
    int max_iter = 500;
    double grad_tol = 1e-8;
    enum class Gradient { FiniteDifference, Analytic };
    Gradient gradient = Gradient::FiniteDifference;
    enum class StartStrategy { Heuristic, Zero };
    StartStrategy start_strategy = StartStrategy::Heuristic;
    bool compute_vcov = true;
};

struct Convergence {
    bool converged = false;
    int iterations = 0;
    double grad_norm = std::numeric_limits<double>::quiet_NaN();
};

struct RankDeficiencyError : std::invalid_argument {
    RankDeficiencyError(const std::string& submodel, std::vector<std::string> cols)
        : std::invalid_argument(submodel + " design matrix is rank deficient; collinear: " +
                                join(cols)),
          columns(std::move(cols)) {}
    std::vector<std::string> columns;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += v[i];
        }
        return s;
    }
};

struct ZarFit {
    ZarModelSpec spec;
    Eigen::VectorXd beta1, beta2, beta3;  // mu, phi, alpha coefficients
    Eigen::MatrixXd vcov;                 // ordered (beta1, beta2, beta3)
    Eigen::VectorXd mu_hat, phi_hat, alpha_hat;
    double loglik = 0.0;
    Convergence convergence;
    bool continuous_block_fitted = false;
    bool alpha_block_fitted = false;
    bool vcov_pseudo_inverse = false;

    // Data kept for diagnostics.
    Eigen::VectorXd y;
    Eigen::MatrixXd x_mu, x_phi, x_alpha;
    std::vector<std::string> names_mu, names_phi, names_alpha;
    std::vector<std::string> ids;

    Eigen::Index n() const { return y.size(); }
    Eigen::Index n_zero() const { return (y.array() == 0.0).count(); }
    Eigen::Index n_positive() const { return (y.array() > 0.0).count(); }
    std::string id(Eigen::Index i) const {
        return ids.empty() ? std::to_string(i + 1) : ids[static_cast<std::size_t>(i)];
    }
};

namespace detail {

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
    }
    return out;
}

inline std::vector<std::string> column_names_for(const Dataset& data,
                                                 const std::vector<int>& cols) {
    std::vector<std::string> names;
    names.reserve(cols.size());
    for (int c : cols) {
        if (!data.column_names.empty()) {
            names.push_back(data.column_names[static_cast<std::size_t>(c)]);
        } else {
            names.push_back("x" + std::to_string(c));
        }
    }
    return names;
}

inline void require_full_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                              const std::string& submodel) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (rank < X.cols()) {
        std::vector<std::string> collinear;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = rank; k < X.cols(); ++k) {
            collinear.push_back(names[static_cast<std::size_t>(perm[k])]);
        }
        throw RankDeficiencyError(submodel, collinear);
    }
}

// Per-observation score of ln f_W with respect to mu and phi.
inline void continuous_scores(ContinuousFamily f, double y, double mu, double phi,
                              double& d_mu, double& d_phi) {
    switch (f) {
        case ContinuousFamily::Beta01: {
            const double a = mu * phi;
            const double b = (1.0 - mu) * phi;
            const double ly = std::log(y);
            const double l1y = std::log1p(-y);
            const double psi_a = digamma(a);
            const double psi_b = digamma(b);
            d_mu = phi * (ly - l1y - psi_a + psi_b);
            d_phi = mu * (ly - psi_a) + (1.0 - mu) * (l1y - psi_b) + digamma(phi);
            return;
        }
        case ContinuousFamily::Gamma: {
            d_mu = (y - mu) / (phi * mu * mu);
            d_phi = (digamma(1.0 / phi) + std::log(mu * phi) - std::log(y) - 1.0 + y / mu) /
                    (phi * phi);
            return;
        }
        case ContinuousFamily::InverseGaussian: {
            const double dev = y - mu;
            d_mu = dev / (phi * mu * mu * mu);
            d_phi = -0.5 / phi + dev * dev / (2.0 * phi * phi * mu * mu * y);
            return;
        }
    }
    d_mu = d_phi = std::numeric_limits<double>::quiet_NaN();
}

// Continuous block: joint (beta1, beta2) negative log-likelihood over the
// positive observations.
struct ContinuousBlock {
    ContinuousFamily family;
    Eigen::MatrixXd x_mu, x_phi;  // positive rows only
    Eigen::VectorXd y;            // positive responses
    Link link_mu, link_phi;

    Eigen::Index p_mu() const { return x_mu.cols(); }
    Eigen::Index p_phi() const { return x_phi.cols(); }

    double negloglik(const Eigen::VectorXd& theta) const {
        const Eigen::VectorXd eta1 = x_mu * theta.head(p_mu());
        const Eigen::VectorXd eta2 = x_phi * theta.tail(p_phi());
        double total = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (!std::isfinite(eta1[i]) || !std::isfinite(eta2[i])) return -kLogLikPenalty;
            const MeanDispersionParams p{link_inverse(link_mu, eta1[i]),
                                         link_inverse(link_phi, eta2[i])};
            total += log_pdf_continuous(family, p, y[i]);
        }
        return std::isfinite(total) ? -total : -kLogLikPenalty;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
        const Eigen::VectorXd eta1 = x_mu * theta.head(p_mu());
        const Eigen::VectorXd eta2 = x_phi * theta.tail(p_phi());
        Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double mu = link_inverse(link_mu, eta1[i]);
            const double phi = link_inverse(link_phi, eta2[i]);
            double d_mu, d_phi;
            continuous_scores(family, y[i], mu, phi, d_mu, d_phi);
            const double w1 = d_mu * link_inverse_derivative(link_mu, eta1[i]);
            const double w2 = d_phi * link_inverse_derivative(link_phi, eta2[i]);
            g.head(p_mu()) -= w1 * x_mu.row(i).transpose();
            g.tail(p_phi()) -= w2 * x_phi.row(i).transpose();
        }
        return g;
    }
};

// Bernoulli block for the zero indicator.
struct BernoulliBlock {
    Eigen::MatrixXd x_alpha;
    Eigen::VectorXd z;  // 1(y == 0)
    Link link;

    double negloglik(const Eigen::VectorXd& beta) const {
        const Eigen::VectorXd eta = x_alpha * beta;
        double total = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            if (!std::isfinite(eta[i])) return -kLogLikPenalty;
            const double a = link_inverse(link, eta[i]);
            total += z[i] > 0.5 ? std::log(a) : std::log1p(-a);
        }
        return std::isfinite(total) ? -total : -kLogLikPenalty;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const {
        const Eigen::VectorXd eta = x_alpha * beta;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double a = link_inverse(link, eta[i]);
            const double da = link_inverse_derivative(link, eta[i]);
            const double score = (z[i] - a) / (a * (1.0 - a)) * da;
            g -= score * x_alpha.row(i).transpose();
        }
        return g;
    }

    // Fisher scoring steps from beta = 0; used as starting values.
    Eigen::VectorXd scoring_start(int steps) const {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(x_alpha.cols());
        for (int s = 0; s < steps; ++s) {
            const Eigen::VectorXd eta = x_alpha * beta;
            Eigen::VectorXd w(z.size()), t(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                const double a = link_inverse(link, eta[i]);
                double da = link_inverse_derivative(link, eta[i]);
                if (std::fabs(da) < 1e-10) da = da < 0.0 ? -1e-10 : 1e-10;
                w[i] = da * da / (a * (1.0 - a));
                t[i] = eta[i] + (z[i] - a) / da;
            }
            const Eigen::MatrixXd xtwx =
                x_alpha.transpose() * w.asDiagonal() * x_alpha;
            const Eigen::VectorXd xtwt = x_alpha.transpose() * (w.array() * t.array()).matrix();
            beta = xtwx.ldlt().solve(xtwt);
            if (!beta.allFinite()) return Eigen::VectorXd::Zero(x_alpha.cols());
        }
        return beta;
    }
};

// Method-of-moments dispersion from the positive responses.
inline double phi_moment_estimate(ContinuousFamily f, const Eigen::VectorXd& y_pos) {
    const double n = static_cast<double>(y_pos.size());
    const double mean = y_pos.mean();
    double var = 0.0;
    for (Eigen::Index i = 0; i < y_pos.size(); ++i) {
        var += (y_pos[i] - mean) * (y_pos[i] - mean);
    }
    var = n > 1.5 ? var / (n - 1.0) : 0.0;
    double phi = 1.0;
    if (var > 0.0) {
        switch (f) {
            case ContinuousFamily::Beta01: phi = mean * (1.0 - mean) / var - 1.0; break;
            case ContinuousFamily::Gamma: phi = var / (mean * mean); break;
            case ContinuousFamily::InverseGaussian: phi = var / (mean * mean * mean); break;
        }
    }
    return std::clamp(phi, 1e-6, 1e6);
}

inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& t) {
    return X.colPivHouseholderQr().solve(t);
}

// Heuristic starting values for the continuous block.
inline Eigen::VectorXd continuous_start(const ContinuousBlock& block) {
    Eigen::VectorXd t(block.y.size());
    for (Eigen::Index i = 0; i < block.y.size(); ++i) {
        double yc = block.y[i];
        if (block.family == ContinuousFamily::Beta01) {
            yc = std::clamp(yc, 1e-3, 1.0 - 1e-3);
        } else {
            yc = std::max(yc, 1e-8);
        }
        t[i] = link_forward(block.link_mu, yc);
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(block.p_mu() + block.p_phi());
    theta.head(block.p_mu()) = least_squares(block.x_mu, t);
    if (!theta.head(block.p_mu()).allFinite()) theta.head(block.p_mu()).setZero();

    const double phi0 = phi_moment_estimate(block.family, block.y);
    // Put the dispersion start on a constant column when one exists.
    for (Eigen::Index j = 0; j < block.p_phi(); ++j) {
        const double lo = block.x_phi.col(j).minCoeff();
        const double hi = block.x_phi.col(j).maxCoeff();
        if (std::fabs(hi - lo) < 1e-12 && std::fabs(lo) > 1e-12) {
            theta[block.p_mu() + j] = link_forward(block.link_phi, phi0) / lo;
            break;
        }
    }
    return theta;
}

struct BlockFitResult {
    Eigen::VectorXd estimate;
    double negloglik = 0.0;
    OptimResult optim;
};

template <typename Block>
BlockFitResult fit_block(const Block& block, const Eigen::VectorXd& start,
                         const FitOptions& options) {
    ObjectiveFn f = [&block](const Eigen::VectorXd& x) { return block.negloglik(x); };
    GradientFn g;
    if (options.gradient == FitOptions::Gradient::Analytic) {
        g = [&block](const Eigen::VectorXd& x) { return block.gradient(x); };
    }
    OptimOptions oo;
    oo.max_iter = options.max_iter;
    oo.grad_tol = options.grad_tol;
    BlockFitResult r;
    r.optim = minimize_bfgs(f, g, start, oo);
    r.estimate = r.optim.x;
    r.negloglik = r.optim.value;
    return r;
}

// Observed information by central differences on the analytic score,
// inverted by Cholesky with an eigenvalue pseudo-inverse fallback.
template <typename Block>
Eigen::MatrixXd block_vcov(const Block& block, const Eigen::VectorXd& at, bool& used_pseudo) {
    GradientFn g = [&block](const Eigen::VectorXd& x) { return block.gradient(x); };
    const Eigen::MatrixXd info = fd_jacobian_symmetric(g, at);
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() == Eigen::Success) {
        return llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    }
    used_pseudo = true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const double cutoff = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        inv[i] = inv[i] > cutoff ? 1.0 / inv[i] : 0.0;
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Full log-likelihood at the given coefficient vectors.
inline double log_likelihood(const ZarModelSpec& spec, const Dataset& data,
                             const Eigen::VectorXd& beta1, const Eigen::VectorXd& beta2,
                             const Eigen::VectorXd& beta3) {
    spec.validate(data.X.cols());
    validate_response(spec.family, data.y);
    if (beta1.size() != static_cast<Eigen::Index>(spec.mu.columns.size()) ||
        beta2.size() != static_cast<Eigen::Index>(spec.phi.columns.size()) ||
        beta3.size() != static_cast<Eigen::Index>(spec.alpha.columns.size())) {
        throw std::invalid_argument("log_likelihood: coefficient lengths do not match spec");
    }
    const Eigen::MatrixXd x1 = detail::select_columns(data.X, spec.mu.columns);
    const Eigen::MatrixXd x2 = detail::select_columns(data.X, spec.phi.columns);
    const Eigen::MatrixXd x3 = detail::select_columns(data.X, spec.alpha.columns);
    const Eigen::VectorXd eta1 = x1 * beta1;
    const Eigen::VectorXd eta2 = x2 * beta2;
    const Eigen::VectorXd eta3 = x3 * beta3;
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (!std::isfinite(eta1[i]) || !std::isfinite(eta2[i]) || !std::isfinite(eta3[i])) {
            return kLogLikPenalty;
        }
        const double alpha = link_inverse(spec.alpha.link, eta3[i]);
        if (data.y[i] == 0.0) {
            total += std::log(alpha);
        } else {
            const MeanDispersionParams p{link_inverse(spec.mu.link, eta1[i]),
                                         link_inverse(spec.phi.link, eta2[i])};
            total += std::log1p(-alpha) + log_pdf_continuous(spec.family, p, data.y[i]);
        }
    }
    return std::isfinite(total) ? total : kLogLikPenalty;
}

inline ZarFit fit(const ZarModelSpec& spec, const Dataset& data, const FitOptions& options = {}) {
    spec.validate(data.X.cols());
    validate_response(spec.family, data.y);
    const Eigen::Index n = data.n();
    if (n == 0) throw std::invalid_argument("fit: empty dataset");

    std::vector<Eigen::Index> pos_rows, zero_rows;
    for (Eigen::Index i = 0; i < n; ++i) {
        (data.y[i] > 0.0 ? pos_rows : zero_rows).push_back(i);
    }
    const bool have_zeros = !zero_rows.empty();
    const bool have_positives = !pos_rows.empty();

    ZarFit out;
    out.spec = spec;
    out.y = data.y;
    out.ids = data.ids;
    out.x_mu = detail::select_columns(data.X, spec.mu.columns);
    out.x_phi = detail::select_columns(data.X, spec.phi.columns);
    out.x_alpha = detail::select_columns(data.X, spec.alpha.columns);
    out.names_mu = detail::column_names_for(data, spec.mu.columns);
    out.names_phi = detail::column_names_for(data, spec.phi.columns);
    out.names_alpha = detail::column_names_for(data, spec.alpha.columns);

    const Eigen::Index p1 = out.x_mu.cols();
    const Eigen::Index p2 = out.x_phi.cols();
    const Eigen::Index p3 = out.x_alpha.cols();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.beta1 = Eigen::VectorXd::Constant(p1, nan);
    out.beta2 = Eigen::VectorXd::Constant(p2, nan);
    out.beta3 = Eigen::VectorXd::Constant(p3, nan);
    out.vcov = Eigen::MatrixXd::Zero(p1 + p2 + p3, p1 + p2 + p3);
    out.mu_hat = Eigen::VectorXd::Constant(n, nan);
    out.phi_hat = Eigen::VectorXd::Constant(n, nan);
    out.alpha_hat = Eigen::VectorXd::Constant(n, nan);

    bool converged = true;
    int iterations = 0;
    double grad_norm = 0.0;
    double loglik = 0.0;

    // Continuous block over the positive rows.
    if (have_positives) {
        detail::ContinuousBlock block;
        block.family = spec.family;
        block.link_mu = spec.mu.link;
        block.link_phi = spec.phi.link;
        block.x_mu.resize(static_cast<Eigen::Index>(pos_rows.size()), p1);
        block.x_phi.resize(static_cast<Eigen::Index>(pos_rows.size()), p2);
        block.y.resize(static_cast<Eigen::Index>(pos_rows.size()));
        for (std::size_t k = 0; k < pos_rows.size(); ++k) {
            const Eigen::Index i = pos_rows[k];
            block.x_mu.row(static_cast<Eigen::Index>(k)) = out.x_mu.row(i);
            block.x_phi.row(static_cast<Eigen::Index>(k)) = out.x_phi.row(i);
            block.y[static_cast<Eigen::Index>(k)] = data.y[i];
        }
        detail::require_full_rank(block.x_mu, out.names_mu, "mu");
        detail::require_full_rank(block.x_phi, out.names_phi, "phi");

        Eigen::VectorXd start = Eigen::VectorXd::Zero(p1 + p2);
        if (options.start_strategy == FitOptions::StartStrategy::Heuristic) {
            start = detail::continuous_start(block);
        }
        const auto r = detail::fit_block(block, start, options);
        out.beta1 = r.estimate.head(p1);
        out.beta2 = r.estimate.tail(p2);
        out.continuous_block_fitted = true;
        converged = converged && r.optim.converged;
        iterations += r.optim.iterations;
        grad_norm = std::max(grad_norm, r.optim.gradient.cwiseAbs().maxCoeff());
        loglik -= r.negloglik;
        if (options.compute_vcov) {
            out.vcov.topLeftCorner(p1 + p2, p1 + p2) =
                detail::block_vcov(block, r.estimate, out.vcov_pseudo_inverse);
        }
    }

    // Bernoulli block; identifiable only with both outcome kinds present.
    if (have_zeros && have_positives) {
        detail::BernoulliBlock block;
        block.link = spec.alpha.link;
        block.x_alpha = out.x_alpha;
        block.z = (data.y.array() == 0.0).cast<double>();
        detail::require_full_rank(block.x_alpha, out.names_alpha, "alpha");

        Eigen::VectorXd start = Eigen::VectorXd::Zero(p3);
        if (options.start_strategy == FitOptions::StartStrategy::Heuristic) {
            start = block.scoring_start(3);
        }
        const auto r = detail::fit_block(block, start, options);
        out.beta3 = r.estimate;
        out.alpha_block_fitted = true;
        converged = converged && r.optim.converged;
        iterations += r.optim.iterations;
        grad_norm = std::max(grad_norm, r.optim.gradient.cwiseAbs().maxCoeff());
        loglik -= r.negloglik;
        if (options.compute_vcov) {
            out.vcov.bottomRightCorner(p3, p3) =
                detail::block_vcov(block, r.estimate, out.vcov_pseudo_inverse);
        }
    }

    // Fitted per-observation parameters through the guarded inverse links.
    if (out.continuous_block_fitted) {
        const Eigen::VectorXd eta1 = out.x_mu * out.beta1;
        const Eigen::VectorXd eta2 = out.x_phi * out.beta2;
        for (Eigen::Index i = 0; i < n; ++i) {
            out.mu_hat[i] = link_inverse(spec.mu.link, eta1[i]);
            out.phi_hat[i] = link_inverse(spec.phi.link, eta2[i]);
        }
    }
    if (out.alpha_block_fitted) {
        const Eigen::VectorXd eta3 = out.x_alpha * out.beta3;
        for (Eigen::Index i = 0; i < n; ++i) {
            out.alpha_hat[i] = link_inverse(spec.alpha.link, eta3[i]);
        }
    }

    out.loglik = loglik;
    out.convergence.converged = converged;
    out.convergence.iterations = iterations;
    out.convergence.grad_norm = grad_norm;
    return out;
}

// Inverse-link predictions for new covariate rows (same column layout as the
// training matrix). When a block was not fitted its entries are NaN.
inline std::vector<ZeroAdjustedParams> predict(const ZarFit& fit, const Eigen::MatrixXd& new_x) {
    const Eigen::Index max_col = std::max(
        {fit.spec.mu.columns.empty() ? 0 : *std::max_element(fit.spec.mu.columns.begin(),
                                                             fit.spec.mu.columns.end()),
         fit.spec.phi.columns.empty() ? 0 : *std::max_element(fit.spec.phi.columns.begin(),
                                                              fit.spec.phi.columns.end()),
         fit.spec.alpha.columns.empty() ? 0 : *std::max_element(fit.spec.alpha.columns.begin(),
                                                                fit.spec.alpha.columns.end())});
    if (new_x.cols() <= max_col) {
        throw std::invalid_argument("predict: covariate matrix has too few columns");
    }
    const Eigen::MatrixXd x1 = detail::select_columns(new_x, fit.spec.mu.columns);
    const Eigen::MatrixXd x2 = detail::select_columns(new_x, fit.spec.phi.columns);
    const Eigen::MatrixXd x3 = detail::select_columns(new_x, fit.spec.alpha.columns);
    std::vector<ZeroAdjustedParams> out;
    out.reserve(static_cast<std::size_t>(new_x.rows()));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < new_x.rows(); ++i) {
        ZeroAdjustedParams zp{nan, {nan, nan}};
        if (fit.continuous_block_fitted) {
            zp.cont.mu = link_inverse(fit.spec.mu.link, x1.row(i).dot(fit.beta1));
            zp.cont.phi = link_inverse(fit.spec.phi.link, x2.row(i).dot(fit.beta2));
        }
        if (fit.alpha_block_fitted) {
            zp.alpha = link_inverse(fit.spec.alpha.link, x3.row(i).dot(fit.beta3));
        }
        out.push_back(zp);
    }
    return out;
}

struct WaldRow {
    std::string equation;
    std::string variable;
    double estimate;
    double std_error;
    double z;
    double p_value;
};

inline std::vector<WaldRow> wald_tests(const ZarFit& fit) {
    const Eigen::Index p = fit.vcov.rows();
    if (p == 0) throw std::runtime_error("wald_tests: no covariance available");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.vcov);
    const double min_eig = es.eigenvalues().minCoeff();
    if (!std::isfinite(min_eig) || min_eig < -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw std::runtime_error(
            "wald_tests: covariance is not positive semidefinite; "
            "the fit likely did not converge");
    }
    std::vector<WaldRow> rows;
    Eigen::Index offset = 0;
    auto add_block = [&](const char* eq, const Eigen::VectorXd& beta,
                         const std::vector<std::string>& names, bool fitted) {
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (!fitted) continue;
            WaldRow r;
            r.equation = eq;
            r.variable = names[static_cast<std::size_t>(j)];
            r.estimate = beta[j];
            const double v = fit.vcov(offset + j, offset + j);
            if (v > 0.0) {
                r.std_error = std::sqrt(v);
                r.z = r.estimate / r.std_error;
                r.p_value = 2.0 * norm_cdf(-std::fabs(r.z));
            } else {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                r.std_error = r.z = r.p_value = nan;
            }
            rows.push_back(std::move(r));
        }
        offset += beta.size();
    };
    add_block("mu", fit.beta1, fit.names_mu, fit.continuous_block_fitted);
    add_block("phi", fit.beta2, fit.names_phi, fit.continuous_block_fitted);
    add_block("alpha", fit.beta3, fit.names_alpha, fit.alpha_block_fitted);
    return rows;
}

}  // namespace zar
