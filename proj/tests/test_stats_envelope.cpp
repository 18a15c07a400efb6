// Unit tests for the order-statistic helpers and the half-normal envelope:
// type-7 quantiles against hand-worked values, descriptive summaries, the
// envelope table invariants on a real fit, reproducibility across seeds and
// worker counts, and the error paths.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "zar/envelope.hpp"
#include "zar/simulation.hpp"
#include "zar/stats.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

zar::ZarFit scenario_fit(const zar::ScenarioSpec& s, std::uint64_t data_seed) {
    zar::Dataset d;
    d.X = s.X;
    d.column_names = s.column_names;
    d.y.resize(s.n());
    const auto truth = s.true_params();
    zar::rng::Stream stream(data_seed);
    for (Eigen::Index i = 0; i < s.n(); ++i) {
        d.y[i] = zar::sample_zar(s.family, truth[static_cast<std::size_t>(i)], stream);
    }
    zar::FitOptions fo;
    fo.gradient = zar::FitOptions::Gradient::Analytic;
    return zar::fit(s.model_spec(), d, fo);
}

zar::EnvelopeOptions minmax_options(int replicates, int workers = 1) {
    zar::EnvelopeOptions eo;
    eo.replicates = replicates;
    eo.lower_percentile = 0.0;
    eo.upper_percentile = 100.0;
    eo.workers = workers;
    eo.fit_options.gradient = zar::FitOptions::Gradient::Analytic;
    return eo;
}

}  // namespace

TEST_CASE("type-7 quantiles match hand-worked values", "[stats][frozen]") {
    const std::vector<double> v{3.1, -0.4, 2.2, 7.7, 0.0, 5.5, 1.1};
    REQUIRE(zar::quantile_type7(v, 0.0) == Approx(-0.4).margin(1e-15));
    REQUIRE(zar::quantile_type7(v, 0.25) == Approx(0.55).margin(1e-15));
    REQUIRE(zar::quantile_type7(v, 0.5) == Approx(2.2).margin(1e-15));
    REQUIRE(zar::quantile_type7(v, 0.75) == Approx(4.3).margin(1e-15));
    REQUIRE(zar::quantile_type7(v, 1.0) == Approx(7.7).margin(1e-15));

    const std::vector<double> w{1.0, 2.0, 3.0, 4.0};
    REQUIRE(zar::quantile_type7(w, 0.25) == Approx(1.75).margin(1e-15));
    REQUIRE(zar::quantile_type7(w, 0.5) == Approx(2.5).margin(1e-15));
    REQUIRE(zar::quantile_type7(w, 0.75) == Approx(3.25).margin(1e-15));

    REQUIRE_THROWS_AS(zar::quantile_type7({}, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(zar::quantile_type7(w, -0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(zar::quantile_type7(w, 1.1), std::invalid_argument);
}

TEST_CASE("descriptive statistics", "[stats]") {
    const std::vector<double> v{3.1, -0.4, 2.2, 7.7, 0.0, 5.5, 1.1};
    const zar::DescriptiveStats d = zar::descriptive_stats(v);
    REQUIRE(d.min == Approx(-0.4).margin(1e-15));
    REQUIRE(d.q1 == Approx(0.55).margin(1e-15));
    REQUIRE(d.median == Approx(2.2).margin(1e-15));
    REQUIRE(d.mean == Approx(2.742857142857143).epsilon(1e-14));
    REQUIRE(d.q3 == Approx(4.3).margin(1e-15));
    REQUIRE(d.max == Approx(7.7).margin(1e-15));
    REQUIRE_THROWS_AS(zar::descriptive_stats({}), std::invalid_argument);
}

TEST_CASE("match_length reads a replicate as a quantile function", "[envelope]") {
    const std::vector<double> sorted{1.0, 2.0, 3.0};
    const std::vector<double> same = zar::detail::match_length(sorted, 3);
    REQUIRE(same == sorted);
    const std::vector<double> grown = zar::detail::match_length(sorted, 5);
    REQUIRE(grown.size() == 5);
    const std::vector<double> expected{1.0, 1.5, 2.0, 2.5, 3.0};
    for (std::size_t i = 0; i < 5; ++i) {
        REQUIRE(grown[i] == Approx(expected[i]).margin(1e-15));
    }
    const std::vector<double> shrunk = zar::detail::match_length(sorted, 1);
    REQUIRE(shrunk.size() == 1);
    REQUIRE(shrunk[0] == Approx(2.0).margin(1e-15));
}

TEST_CASE("half-normal envelope table invariants", "[envelope]") {
    const zar::ScenarioSpec s = zar::scenario1_zabe(97531, 80);
    const zar::ZarFit fit = scenario_fit(s, 5);
    REQUIRE(fit.convergence.converged);

    const zar::EnvelopeTable table =
        zar::halfnormal_envelope(fit, zar::ResidualKind::zaqr(), 42, minmax_options(19));
    REQUIRE(table.replicates == 19);
    REQUIRE(table.seed == 42);
    REQUIRE(table.rows.size() == static_cast<std::size_t>(fit.n_positive()));

    double prev_score = -1.0;
    double prev_obs = -1.0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const zar::EnvelopeRow& r = table.rows[i];
        REQUIRE(r.index == static_cast<int>(i) + 1);
        REQUIRE(r.score > prev_score);
        REQUIRE(r.observed >= prev_obs);
        REQUIRE(r.lower <= r.median);
        REQUIRE(r.median <= r.upper);
        REQUIRE(r.lower >= 0.0);
        prev_score = r.score;
        prev_obs = r.observed;
    }

    SECTION("the same seed reproduces the table bitwise") {
        const zar::EnvelopeTable again =
            zar::halfnormal_envelope(fit, zar::ResidualKind::zaqr(), 42, minmax_options(19));
        REQUIRE(again.rows.size() == table.rows.size());
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            REQUIRE(again.rows[i].score == table.rows[i].score);
            REQUIRE(again.rows[i].lower == table.rows[i].lower);
            REQUIRE(again.rows[i].median == table.rows[i].median);
            REQUIRE(again.rows[i].upper == table.rows[i].upper);
            REQUIRE(again.rows[i].observed == table.rows[i].observed);
        }
    }

    SECTION("worker count does not change the result") {
        const zar::EnvelopeTable threaded = zar::halfnormal_envelope(
            fit, zar::ResidualKind::zaqr(), 42, minmax_options(19, 3));
        REQUIRE(threaded.dropped == table.dropped);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            REQUIRE(threaded.rows[i].lower == table.rows[i].lower);
            REQUIRE(threaded.rows[i].median == table.rows[i].median);
            REQUIRE(threaded.rows[i].upper == table.rows[i].upper);
        }
    }
}

TEST_CASE("a well-specified model mostly stays inside its own envelope",
          "[envelope][statistical]") {
    const zar::ScenarioSpec s = zar::scenario1_zabe(97531, 80);
    const zar::ZarFit fit = scenario_fit(s, 5);
    const zar::EnvelopeTable table =
        zar::halfnormal_envelope(fit, zar::ResidualKind::zaqr(), 99, minmax_options(60));
    int inside = 0;
    for (const zar::EnvelopeRow& r : table.rows) {
        if (r.observed >= r.lower && r.observed <= r.upper) ++inside;
    }
    REQUIRE(static_cast<double>(inside) >=
            0.85 * static_cast<double>(table.rows.size()));
}

TEST_CASE("envelope error paths", "[envelope][errors]") {
    const zar::ScenarioSpec s = zar::scenario1_zabe(97531, 60);
    const zar::ZarFit fit = scenario_fit(s, 5);

    SECTION("too few replicates") {
        REQUIRE_THROWS_WITH(
            zar::halfnormal_envelope(fit, zar::ResidualKind::zaqr(), 1, minmax_options(18)),
            ContainsSubstring("at least 19"));
    }
    SECTION("inverted band percentiles") {
        zar::EnvelopeOptions eo = minmax_options(19);
        eo.lower_percentile = 80.0;
        eo.upper_percentile = 20.0;
        REQUIRE_THROWS_WITH(
            zar::halfnormal_envelope(fit, zar::ResidualKind::zaqr(), 1, eo),
            ContainsSubstring("band"));
    }
    SECTION("non-converged fit is rejected") {
        zar::ZarFit bad = fit;
        bad.convergence.converged = false;
        REQUIRE_THROWS_WITH(
            zar::halfnormal_envelope(bad, zar::ResidualKind::zaqr(), 1, minmax_options(19)),
            ContainsSubstring("did not converge"));
    }
    SECTION("replicates that cannot refit raise EnvelopeError") {
        zar::EnvelopeOptions eo = minmax_options(19);
        eo.fit_options.max_iter = 1;
        eo.fit_options.start_strategy = zar::FitOptions::StartStrategy::Zero;
        REQUIRE_THROWS_AS(
            zar::halfnormal_envelope(fit, zar::ResidualKind::zaqr(), 1, eo),
            zar::EnvelopeError);
    }
}
