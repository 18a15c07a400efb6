#pragma once

// Half-normal residual plot with simulated envelope (Atkinson's procedure):
// simulate B responses from the fitted model, refit each, and band the sorted
// absolute residuals per order statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "zar/model.hpp"
#include "zar/residuals.hpp"
#include "zar/stats.hpp"

namespace zar {

// Raised when too many envelope replicates fail to refit; mapped to the
// non-convergence exit path by the CLI.
struct EnvelopeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnvelopeOptions {
    int replicates = 100;
    // Band percentiles; {0, 100} gives the classical min/max convention.
    double lower_percentile = 2.5;
    double upper_percentile = 97.5;
    int workers = 1;
    FitOptions fit_options;
};

struct EnvelopeRow {
    int index;        // order statistic, 1-based
    double score;     // half-normal plotting position
    double lower;
    double median;
    double upper;
    double observed;  // sorted |residual| of the data
};

struct EnvelopeTable {
    ResidualKind kind;
    std::uint64_t seed = 0;
    int replicates = 0;
    int dropped = 0;
    std::vector<EnvelopeRow> rows;
};

namespace detail {

// Dataset + remapped spec that reproduce the fit's design matrices, so a
// replicate can swap in a simulated response and refit the same model.
inline std::pair<Dataset, ZarModelSpec> refit_frame(const ZarFit& fit) {
    const Eigen::Index p1 = fit.x_mu.cols();
    const Eigen::Index p2 = fit.x_phi.cols();
    const Eigen::Index p3 = fit.x_alpha.cols();
    Dataset data;
    data.y = fit.y;
    data.X.resize(fit.n(), p1 + p2 + p3);
    data.X << fit.x_mu, fit.x_phi, fit.x_alpha;
    data.column_names = fit.names_mu;
    data.column_names.insert(data.column_names.end(), fit.names_phi.begin(),
                             fit.names_phi.end());
    data.column_names.insert(data.column_names.end(), fit.names_alpha.begin(),
                             fit.names_alpha.end());
    data.ids = fit.ids;

    ZarModelSpec spec;
    spec.family = fit.spec.family;
    spec.mu.link = fit.spec.mu.link;
    spec.phi.link = fit.spec.phi.link;
    spec.alpha.link = fit.spec.alpha.link;
    for (Eigen::Index j = 0; j < p1; ++j) spec.mu.columns.push_back(static_cast<int>(j));
    for (Eigen::Index j = 0; j < p2; ++j) spec.phi.columns.push_back(static_cast<int>(p1 + j));
    for (Eigen::Index j = 0; j < p3; ++j) {
        spec.alpha.columns.push_back(static_cast<int>(p1 + p2 + j));
    }
    return {std::move(data), spec};
}

inline std::vector<double> sorted_abs_defined(const ResidualVector& rv) {
    std::vector<double> abs_vals;
    abs_vals.reserve(rv.values.size());
    for (const auto& v : rv.values) {
        if (v) abs_vals.push_back(std::fabs(*v));
    }
    std::sort(abs_vals.begin(), abs_vals.end());
    return abs_vals;
}

// Match a replicate's sorted |residuals| to the observed count by reading the
// replicate as an empirical quantile function (the counts can differ because
// each replicate draws its own zeros).
inline std::vector<double> match_length(const std::vector<double>& sorted, std::size_t n) {
    if (sorted.size() == n) return sorted;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
        out[i] = quantile_type7_sorted(sorted, p);
    }
    return out;
}

}  // namespace detail

inline EnvelopeTable halfnormal_envelope(const ZarFit& fit, const ResidualKind& kind,
                                         std::uint64_t seed,
                                         const EnvelopeOptions& options = {}) {
    if (options.replicates < 19) {
        throw std::invalid_argument("envelope: at least 19 replicates are required");
    }
    if (!(options.lower_percentile >= 0.0 && options.upper_percentile <= 100.0 &&
          options.lower_percentile < options.upper_percentile)) {
        throw std::invalid_argument("envelope: invalid band percentiles");
    }
    if (!fit.convergence.converged) {
        throw std::invalid_argument("envelope: fit did not converge");
    }
    detail::require_continuous_block(fit);
    detail::require_alpha_block(fit);

    const rng::Stream master(seed);
    rng::Stream observed_stream = master.substream(0);
    const std::vector<double> observed =
        detail::sorted_abs_defined(compute_residuals(fit, kind, observed_stream));
    const std::size_t n_def = observed.size();
    if (n_def == 0) {
        throw std::invalid_argument("envelope: no defined residuals to plot");
    }

    auto [frame, spec] = detail::refit_frame(fit);
    FitOptions refit_options = options.fit_options;
    refit_options.compute_vcov = false;  // bands never consult the covariance

    const int B = options.replicates;
    std::vector<std::vector<double>> replicate(static_cast<std::size_t>(B));
    std::vector<char> kept(static_cast<std::size_t>(B), 0);

    auto run_one = [&](int b) {
        rng::Stream stream = master.substream(static_cast<std::uint64_t>(b) + 1);
        Dataset data = frame;
        for (Eigen::Index i = 0; i < fit.n(); ++i) {
            const ZeroAdjustedParams zp{fit.alpha_hat[i],
                                        {fit.mu_hat[i], fit.phi_hat[i]}};
            data.y[i] = sample_zar(fit.spec.family, zp, stream);
        }
        try {
            const ZarFit refit = zar::fit(spec, data, refit_options);
            if (!refit.convergence.converged || !refit.continuous_block_fitted ||
                !refit.alpha_block_fitted) {
                return;
            }
            std::vector<double> vals =
                detail::sorted_abs_defined(compute_residuals(refit, kind, stream));
            if (vals.empty()) return;
            replicate[static_cast<std::size_t>(b)] = detail::match_length(vals, n_def);
            kept[static_cast<std::size_t>(b)] = 1;
        } catch (const std::exception&) {
            // degenerate replicate (for example a rank-deficient positive
            // part); dropped and counted below
        }
    };

    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        for (int b = 0; b < B; ++b) run_one(b);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int b = w; b < B; b += workers) run_one(b);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<const std::vector<double>*> usable;
    for (int b = 0; b < B; ++b) {
        if (kept[static_cast<std::size_t>(b)]) {
            usable.push_back(&replicate[static_cast<std::size_t>(b)]);
        }
    }
    const int dropped = B - static_cast<int>(usable.size());
    if (5 * dropped > B) {
        throw EnvelopeError("envelope: " + std::to_string(dropped) + " of " +
                            std::to_string(B) + " replicates failed to refit");
    }

    EnvelopeTable table;
    table.kind = kind;
    table.seed = seed;
    table.replicates = B;
    table.dropped = dropped;
    table.rows.resize(n_def);
    const double n = static_cast<double>(n_def);
    std::vector<double> column(usable.size());
    for (std::size_t i = 0; i < n_def; ++i) {
        for (std::size_t u = 0; u < usable.size(); ++u) column[u] = (*usable[u])[i];
        std::sort(column.begin(), column.end());
        EnvelopeRow& row = table.rows[i];
        row.index = static_cast<int>(i) + 1;
        const double ii = static_cast<double>(i) + 1.0;
        row.score = norm_quantile((ii + n - 0.125) / (2.0 * n + 0.5));
        row.lower = quantile_type7_sorted(column, options.lower_percentile / 100.0);
        row.median = quantile_type7_sorted(column, 0.5);
        row.upper = quantile_type7_sorted(column, options.upper_percentile / 100.0);
        row.observed = observed[i];
    }
    return table;
}

}  // namespace zar
