#pragma once

// Monte Carlo calibration harness: repeated generation from a known scenario,
// refitting, and residual tail-exceedance tallies with descriptive summaries.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "zar/model.hpp"
#include "zar/residuals.hpp"
#include "zar/rng.hpp"
#include "zar/stats.hpp"

namespace zar {

// Raised when more than 2% of the replications fail to converge.
struct NonConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioSpec {
    std::string name;
    ContinuousFamily family = ContinuousFamily::Beta01;
    Eigen::MatrixXd X;  // fixed covariate matrix, held constant across replications
    std::vector<std::string> column_names;
    SubmodelSpec mu, phi, alpha;
    Eigen::VectorXd beta1, beta2, beta3;  // true coefficients

    Eigen::Index n() const { return X.rows(); }

    ZarModelSpec model_spec() const {
        ZarModelSpec s;
        s.family = family;
        s.mu = mu;
        s.phi = phi;
        s.alpha = alpha;
        return s;
    }

    // True per-observation parameters implied by the coefficients.
    std::vector<ZeroAdjustedParams> true_params() const {
        const Eigen::VectorXd eta1 = detail::select_columns(X, mu.columns) * beta1;
        const Eigen::VectorXd eta2 = detail::select_columns(X, phi.columns) * beta2;
        const Eigen::VectorXd eta3 = detail::select_columns(X, alpha.columns) * beta3;
        std::vector<ZeroAdjustedParams> out;
        out.reserve(static_cast<std::size_t>(n()));
        for (Eigen::Index i = 0; i < n(); ++i) {
            out.push_back(ZeroAdjustedParams{link_inverse(alpha.link, eta3[i]),
                                             {link_inverse(mu.link, eta1[i]),
                                              link_inverse(phi.link, eta2[i])}});
        }
        return out;
    }

    void validate() const {
        if (n() < 1) throw std::invalid_argument("scenario: empty covariate matrix");
        model_spec().validate(X.cols());
        if (beta1.size() != static_cast<Eigen::Index>(mu.columns.size()) ||
            beta2.size() != static_cast<Eigen::Index>(phi.columns.size()) ||
            beta3.size() != static_cast<Eigen::Index>(alpha.columns.size())) {
            throw std::invalid_argument("scenario: coefficient lengths do not match columns");
        }
        for (const ZeroAdjustedParams& zp : true_params()) {
            validate_params(family, zp);  // implied ranges valid for the family
        }
    }
};

struct TailSpec {
    std::vector<double> thresholds{-3.0, -2.0, -1.0, 1.0, 2.0, 3.0};

    void validate() const {
        if (thresholds.empty()) throw std::invalid_argument("tails: empty threshold list");
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            if (thresholds[i] == 0.0) throw std::invalid_argument("tails: zero threshold");
            if (i > 0 && thresholds[i] <= thresholds[i - 1]) {
                throw std::invalid_argument("tails: thresholds must be strictly increasing");
            }
        }
    }
};

struct SimReport {
    std::string scenario_name;
    std::string scenario_hash;
    std::uint64_t seed = 0;
    int replications = 0;
    int non_convergent = 0;
    std::vector<double> thresholds;
    std::vector<ResidualKind> kinds;
    // One matrix per kind: observation rows, threshold columns, values in
    // percent of converged replications.
    std::vector<Eigen::MatrixXd> exceed_pct;

    int used() const { return replications - non_convergent; }

    // Descriptive statistics over observations for one kind and threshold.
    DescriptiveStats stats(std::size_t kind_index, std::size_t threshold_index) const {
        const Eigen::MatrixXd& m = exceed_pct[kind_index];
        std::vector<double> col(m.data() + threshold_index * static_cast<std::size_t>(m.rows()),
                                m.data() + (threshold_index + 1) * static_cast<std::size_t>(m.rows()));
        return descriptive_stats(col);
    }
};

namespace detail {

struct Fnv1a {
    std::uint64_t h = 1469598103934665603ULL;
    void bytes(const void* p, std::size_t len) {
        const unsigned char* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= c[i];
            h *= 1099511628211ULL;
        }
    }
    void add(double v) { bytes(&v, sizeof v); }
    void add(const std::string& s) { bytes(s.data(), s.size()); }
    void add(int v) { bytes(&v, sizeof v); }
};

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

}  // namespace detail

inline std::string scenario_hash(const ScenarioSpec& s) {
    detail::Fnv1a h;
    h.add(family_name(s.family));
    h.add(link_name(s.mu.link));
    h.add(link_name(s.phi.link));
    h.add(link_name(s.alpha.link));
    for (int c : s.mu.columns) h.add(c);
    for (int c : s.phi.columns) h.add(c);
    for (int c : s.alpha.columns) h.add(c);
    for (Eigen::Index i = 0; i < s.beta1.size(); ++i) h.add(s.beta1[i]);
    for (Eigen::Index i = 0; i < s.beta2.size(); ++i) h.add(s.beta2[i]);
    for (Eigen::Index i = 0; i < s.beta3.size(); ++i) h.add(s.beta3[i]);
    for (Eigen::Index j = 0; j < s.X.cols(); ++j) {
        for (Eigen::Index i = 0; i < s.X.rows(); ++i) h.add(s.X(i, j));
    }
    return detail::hex64(h.h);
}

// Scenario 1: zero adjusted beta, n = 100, logit/log/logit links,
// beta1 = (-1.5, -1, 1), phi = e^4, beta3 = (-0.5, 0.5, -1), giving
// mu in (0.076, 0.378), phi = 54.6 and alpha in (0.182, 0.5). The two
// uniform covariates are drawn once from the given seed and held fixed.
inline ScenarioSpec scenario1_zabe(std::uint64_t covariate_seed = 97531,
                                   Eigen::Index n = 100) {
    ScenarioSpec s;
    s.name = "zabe1";
    s.family = ContinuousFamily::Beta01;
    s.X.resize(n, 3);
    rng::Stream stream(covariate_seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.X(i, 0) = 1.0;
        s.X(i, 1) = stream.uniform();
        s.X(i, 2) = stream.uniform();
    }
    s.column_names = {"intercept", "x2", "x3"};
    s.mu = {{0, 1, 2}, Link::Logit};
    s.phi = {{0}, Link::Log};
    s.alpha = {{0, 1, 2}, Link::Logit};
    s.beta1 = Eigen::Vector3d(-1.5, -1.0, 1.0);
    s.beta2 = Eigen::VectorXd::Constant(1, 4.0);
    s.beta3 = Eigen::Vector3d(-0.5, 0.5, -1.0);
    s.validate();
    return s;
}

// Zero adjusted gamma analogue of Scenario 1 (log mean link); the paper does
// not print coefficients for this case, so the values are chosen to give a
// well-conditioned design: mu in (0.61, 4.48), phi = 0.5, alpha as Scenario 1.
inline ScenarioSpec scenario_zaga(std::uint64_t covariate_seed = 97531,
                                  Eigen::Index n = 100) {
    ScenarioSpec s = scenario1_zabe(covariate_seed, n);
    s.name = "zaga1";
    s.family = ContinuousFamily::Gamma;
    s.mu.link = Link::Log;
    s.beta1 = Eigen::Vector3d(0.5, -1.0, 1.0);
    s.beta2 = Eigen::VectorXd::Constant(1, std::log(0.5));
    s.validate();
    return s;
}

// Zero adjusted inverse Gaussian scenario reproducing the ranges quoted for
// the paper's second study: mu in (20.9, 403.4), phi = 0.02 and alpha in
// (0.27, 0.62). The coefficients themselves are unpublished; these are chosen
// to land on those ranges with log/log/logit links.
inline ScenarioSpec scenario_zaig(std::uint64_t covariate_seed = 97531,
                                  Eigen::Index n = 100) {
    ScenarioSpec s = scenario1_zabe(covariate_seed, n);
    s.name = "zaig1";
    s.family = ContinuousFamily::InverseGaussian;
    s.mu.link = Link::Log;
    s.beta1 = Eigen::Vector3d(4.0, -0.96, 2.0);
    s.beta2 = Eigen::VectorXd::Constant(1, std::log(0.02));
    s.beta3 = Eigen::Vector3d(-0.25, 0.74, -0.745);
    s.validate();
    return s;
}

inline ScenarioSpec scenario_by_name(const std::string& name, std::uint64_t covariate_seed,
                                     Eigen::Index n = 100) {
    if (name == "zabe1") return scenario1_zabe(covariate_seed, n);
    if (name == "zaga1") return scenario_zaga(covariate_seed, n);
    if (name == "zaig1") return scenario_zaig(covariate_seed, n);
    throw std::invalid_argument("unknown scenario: " + name);
}

struct RunStudyOptions {
    int workers = 1;
    TailSpec tails;
    // The harness prefers the analytic score and skips the covariance; both
    // choices are validated against the defaults in the test suite.
    FitOptions fit_options = [] {
        FitOptions o;
        o.gradient = FitOptions::Gradient::Analytic;
        o.compute_vcov = false;
        return o;
    }();
    double max_nonconvergent_fraction = 0.02;
};

inline SimReport run_study(const ScenarioSpec& scenario, int reps,
                           const std::vector<ResidualKind>& kinds, std::uint64_t seed,
                           const RunStudyOptions& options = {}) {
    if (reps < 1) throw std::invalid_argument("run_study: reps must be >= 1");
    if (kinds.empty()) throw std::invalid_argument("run_study: no residual kinds");
    scenario.validate();
    options.tails.validate();

    const Eigen::Index n = scenario.n();
    const std::vector<double>& thr = options.tails.thresholds;
    const std::size_t n_thr = thr.size();
    const std::size_t n_kinds = kinds.size();
    const std::vector<ZeroAdjustedParams> truth = scenario.true_params();
    const ZarModelSpec spec = scenario.model_spec();
    const rng::Stream master(seed);

    Dataset base;
    base.y = Eigen::VectorXd::Zero(n);
    base.X = scenario.X;
    base.column_names = scenario.column_names;

    using Counts = std::vector<Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>>;
    auto zero_counts = [&] {
        Counts c(n_kinds);
        for (auto& m : c) m.setZero(n, static_cast<Eigen::Index>(n_thr));
        return c;
    };

    const int workers = std::max(1, options.workers);
    std::vector<Counts> worker_counts(static_cast<std::size_t>(workers), zero_counts());
    std::vector<int> worker_nonconv(static_cast<std::size_t>(workers), 0);

    auto run_chunk = [&](int w) {
        Counts& counts = worker_counts[static_cast<std::size_t>(w)];
        Dataset data = base;
        for (int rep = w; rep < reps; rep += workers) {
            rng::Stream stream = master.substream(static_cast<std::uint64_t>(rep));
            for (Eigen::Index i = 0; i < n; ++i) {
                data.y[i] = sample_zar(scenario.family, truth[static_cast<std::size_t>(i)],
                                       stream);
            }
            bool ok = false;
            try {
                const ZarFit refit = fit(spec, data, options.fit_options);
                if (refit.convergence.converged && refit.continuous_block_fitted &&
                    refit.alpha_block_fitted) {
                    ok = true;
                    for (std::size_t k = 0; k < n_kinds; ++k) {
                        const ResidualVector rv = compute_residuals(refit, kinds[k], stream);
                        for (Eigen::Index i = 0; i < n; ++i) {
                            const auto& v = rv.values[static_cast<std::size_t>(i)];
                            if (!v) continue;  // undefined: tallied as non-exceeding
                            for (std::size_t t = 0; t < n_thr; ++t) {
                                const bool exceed =
                                    thr[t] < 0.0 ? *v < thr[t] : *v > thr[t];
                                if (exceed) {
                                    ++counts[k](i, static_cast<Eigen::Index>(t));
                                }
                            }
                        }
                    }
                }
            } catch (const std::exception&) {
                ok = false;  // degenerate replication, counted below
            }
            if (!ok) ++worker_nonconv[static_cast<std::size_t>(w)];
        }
    };

    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(run_chunk, w);
        for (auto& t : pool) t.join();
    }

    Counts totals = zero_counts();
    int non_convergent = 0;
    for (int w = 0; w < workers; ++w) {
        for (std::size_t k = 0; k < n_kinds; ++k) {
            totals[k] += worker_counts[static_cast<std::size_t>(w)][k];
        }
        non_convergent += worker_nonconv[static_cast<std::size_t>(w)];
    }
    if (static_cast<double>(non_convergent) >
        options.max_nonconvergent_fraction * static_cast<double>(reps)) {
        throw NonConvergenceError("run_study: " + std::to_string(non_convergent) + " of " +
                                  std::to_string(reps) + " replications did not converge");
    }

    SimReport report;
    report.scenario_name = scenario.name;
    report.scenario_hash = scenario_hash(scenario);
    report.seed = seed;
    report.replications = reps;
    report.non_convergent = non_convergent;
    report.thresholds = thr;
    report.kinds = kinds;
    report.exceed_pct.resize(n_kinds);
    const double denom = static_cast<double>(report.used());
    for (std::size_t k = 0; k < n_kinds; ++k) {
        report.exceed_pct[k] = 100.0 * totals[k].cast<double>() / denom;
    }
    return report;
}

namespace detail {

inline std::string threshold_label(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::fabs(t));
    return (t < 0.0 ? std::string("lt_-") : std::string("gt_")) + buf;
}

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace detail

// Table-style CSV: one row per (kind, statistic), one column per threshold.
inline void write_simreport_stats_csv(const SimReport& report, std::ostream& os) {
    os << "residual,statistic";
    for (double t : report.thresholds) os << ',' << detail::threshold_label(t);
    os << '\n';
    static const char* stat_names[] = {"Min", "Q1", "Median", "Mean", "Q3", "Max"};
    for (std::size_t k = 0; k < report.kinds.size(); ++k) {
        std::vector<DescriptiveStats> per_thr;
        per_thr.reserve(report.thresholds.size());
        for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
            per_thr.push_back(report.stats(k, t));
        }
        for (int s = 0; s < 6; ++s) {
            os << residual_kind_name(report.kinds[k]) << ',' << stat_names[s];
            for (const DescriptiveStats& d : per_thr) {
                const double v = s == 0   ? d.min
                                 : s == 1 ? d.q1
                                 : s == 2 ? d.median
                                 : s == 3 ? d.mean
                                 : s == 4 ? d.q3
                                          : d.max;
                os << ',' << detail::fixed6(v);
            }
            os << '\n';
        }
    }
}

// Per-observation exceedance percentages.
inline void write_simreport_exceedance_csv(const SimReport& report, std::ostream& os) {
    os << "residual,observation";
    for (double t : report.thresholds) os << ',' << detail::threshold_label(t);
    os << '\n';
    for (std::size_t k = 0; k < report.kinds.size(); ++k) {
        const Eigen::MatrixXd& m = report.exceed_pct[k];
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            os << residual_kind_name(report.kinds[k]) << ',' << (i + 1);
            for (Eigen::Index t = 0; t < m.cols(); ++t) {
                os << ',' << detail::fixed6(m(i, t));
            }
            os << '\n';
        }
    }
}

inline nlohmann::json simreport_metadata(const SimReport& report) {
    nlohmann::json meta;
    meta["scenario"] = report.scenario_name;
    meta["scenario_hash"] = report.scenario_hash;
    meta["seed"] = report.seed;
    meta["replications"] = report.replications;
    meta["non_convergent"] = report.non_convergent;
    meta["thresholds"] = report.thresholds;
    std::vector<std::string> kind_names;
    kind_names.reserve(report.kinds.size());
    for (const ResidualKind& k : report.kinds) kind_names.push_back(residual_kind_name(k));
    meta["kinds"] = kind_names;
    return meta;
}

}  // namespace zar
