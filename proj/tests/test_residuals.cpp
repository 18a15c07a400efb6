// Unit tests for the residual layer: the star transform (including its
// frozen references, monotonicity and tail identity), component residuals
// against hand-computed Gamma and inverse Gaussian values, leverage and
// Williams residuals, the binary zero-part residual, the randomized quantile
// residual, and the exact agreement between the ZAQR and the randomized
// quantile residual on the positive branch.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "support/oracles.hpp"
#include "zar/residuals.hpp"
#include "zar/simulation.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using zar::ContinuousFamily;
using zar::Link;
using zar::ResidualKind;
using zar::ZarFit;

namespace {

// Diagnostic shell: a ZarFit with the per-observation parameters fixed
// directly, as if an intercept-only model had produced them.
ZarFit make_shell(ContinuousFamily family, const std::vector<double>& y, double mu,
                  double phi, double alpha) {
    ZarFit f;
    f.spec.family = family;
    f.spec.mu = {{0}, family == ContinuousFamily::Beta01 ? Link::Logit : Link::Log};
    f.spec.phi = {{0}, Link::Log};
    f.spec.alpha = {{0}, Link::Logit};
    const auto n = static_cast<Eigen::Index>(y.size());
    f.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    f.x_mu = Eigen::MatrixXd::Ones(n, 1);
    f.x_phi = Eigen::MatrixXd::Ones(n, 1);
    f.x_alpha = Eigen::MatrixXd::Ones(n, 1);
    f.names_mu = f.names_phi = f.names_alpha = {"intercept"};
    f.beta1 = Eigen::VectorXd::Zero(1);
    f.beta2 = Eigen::VectorXd::Zero(1);
    f.beta3 = Eigen::VectorXd::Zero(1);
    f.mu_hat = Eigen::VectorXd::Constant(n, mu);
    f.phi_hat = Eigen::VectorXd::Constant(n, phi);
    f.alpha_hat = Eigen::VectorXd::Constant(n, alpha);
    f.continuous_block_fitted = true;
    f.alpha_block_fitted = true;
    f.convergence.converged = true;
    return f;
}

}  // namespace

TEST_CASE("star transform matches frozen references", "[residuals][star][frozen]") {
    REQUIRE(zar::star_residual(-1.5, 0.3) == Approx(-1.6770634156813635).epsilon(1e-12));
    REQUIRE(zar::star_residual(1.2, 0.25) == Approx(1.3638826401136245).epsilon(1e-12));
    REQUIRE(zar::star_residual(-0.7, 0.15) == Approx(-0.8215409499131313).epsilon(1e-12));
    REQUIRE(zar::star_residual(2.2, 0.45) == Approx(2.4253462523094651).epsilon(1e-12));
    // r = 0 goes through the positive branch: Phi^{-1}(0.4 + 0.6 * 0.5).
    REQUIRE(zar::star_residual(0.0, 0.4) == Approx(0.5244005127080408).epsilon(1e-12));
}

TEST_CASE("star transform properties", "[residuals][star]") {
    SECTION("domain and NaN handling") {
        REQUIRE_THROWS_AS(zar::star_residual(1.0, 0.0), std::domain_error);
        REQUIRE_THROWS_AS(zar::star_residual(1.0, 1.0), std::domain_error);
        REQUIRE_THROWS_AS(zar::star_residual(1.0, -0.2), std::domain_error);
        REQUIRE(std::isnan(zar::star_residual(std::numeric_limits<double>::quiet_NaN(), 0.3)));
    }
    SECTION("strictly increasing in r") {
        for (double alpha : {0.1, 0.3, 0.6}) {
            double prev = -std::numeric_limits<double>::infinity();
            for (double r = -3.0; r <= 3.0 + 1e-12; r += 0.25) {
                const double s = zar::star_residual(r, alpha);
                REQUIRE(s > prev);
                prev = s;
            }
        }
    }
    SECTION("pushes every residual outward") {
        for (double alpha : {0.1, 0.3, 0.6}) {
            for (double r : {-2.5, -1.0, -0.2, 0.0, 0.2, 1.0, 2.5}) {
                const double s = zar::star_residual(r, alpha);
                if (r < 0.0) {
                    REQUIRE(s < r);
                } else {
                    REQUIRE(s > r);
                }
            }
        }
    }
    SECTION("left-tail identity Phi(r*) = Phi(r)(1 - alpha)") {
        for (double alpha : {0.1, 0.3, 0.6}) {
            for (double r : {-2.5, -1.3, -0.4}) {
                const double s = zar::star_residual(r, alpha);
                REQUIRE(zar::norm_cdf(s) ==
                        Approx(zar::norm_cdf(r) * (1.0 - alpha)).epsilon(1e-10));
            }
        }
    }
    SECTION("vanishing zero mass leaves the residual unchanged") {
        for (double r : {-1.7, -0.3, 0.4, 2.1}) {
            REQUIRE(zar::star_residual(r, 1e-12) == Approx(r).margin(1e-9));
        }
    }
}

TEST_CASE("component quantile residual", "[residuals][component]") {
    const zar::MeanDispersionParams p{2.5, 0.4};
    const double y_hi = zar::quantile_continuous(ContinuousFamily::Gamma, p, 0.975);
    const double y_lo = zar::quantile_continuous(ContinuousFamily::Gamma, p, 0.2);
    const ZarFit f = make_shell(ContinuousFamily::Gamma, {0.0, y_hi, y_lo}, 2.5, 0.4, 0.3);
    REQUIRE_FALSE(zar::quantile_component_residual(f, 0).has_value());
    REQUIRE(*zar::quantile_component_residual(f, 1) ==
            Approx(1.9599639845400542).margin(1e-8));
    REQUIRE(*zar::quantile_component_residual(f, 2) ==
            Approx(-0.8416212335729142).margin(1e-8));
}

TEST_CASE("GLM residuals match frozen references", "[residuals][component][frozen]") {
    SECTION("Gamma") {
        const ZarFit a = make_shell(ContinuousFamily::Gamma, {0.0, 0.8}, 1.7, 0.6, 0.3);
        REQUIRE_FALSE(zar::pearson_residual(a, 0).has_value());
        REQUIRE(*zar::pearson_residual(a, 1) == Approx(-0.6834676493307206).epsilon(1e-12));
        REQUIRE(*zar::deviance_residual(a, 1) == Approx(-0.8647929187007677).epsilon(1e-12));
        REQUIRE(*zar::anscombe_residual(a, 1) == Approx(-0.8604907741932002).epsilon(1e-12));

        const ZarFit b = make_shell(ContinuousFamily::Gamma, {3.1}, 2.2, 0.35, 0.3);
        REQUIRE(*zar::pearson_residual(b, 0) == Approx(0.6914898447778772).epsilon(1e-12));
        REQUIRE(*zar::deviance_residual(b, 0) == Approx(0.6147991912071950).epsilon(1e-12));
        REQUIRE(*zar::anscombe_residual(b, 0) == Approx(0.6141150669786708).epsilon(1e-12));
    }
    SECTION("inverse Gaussian") {
        const ZarFit a = make_shell(ContinuousFamily::InverseGaussian, {1.5}, 2.0, 0.5, 0.3);
        REQUIRE(*zar::pearson_residual(a, 0) == Approx(-0.25).epsilon(1e-14));
        REQUIRE(*zar::deviance_residual(a, 0) == Approx(-0.2886751345948129).epsilon(1e-12));
        REQUIRE(*zar::anscombe_residual(a, 0) == Approx(-0.2876820724517809).epsilon(1e-12));

        const ZarFit b = make_shell(ContinuousFamily::InverseGaussian, {0.7}, 1.1, 0.8, 0.3);
        REQUIRE(*zar::pearson_residual(b, 0) == Approx(-0.3876376661011099).epsilon(1e-12));
        REQUIRE(*zar::deviance_residual(b, 0) == Approx(-0.4859295307498625).epsilon(1e-12));
        REQUIRE(*zar::anscombe_residual(b, 0) == Approx(-0.4818177608204951).epsilon(1e-12));
    }
    SECTION("not defined for the beta family") {
        const ZarFit f = make_shell(ContinuousFamily::Beta01, {0.5}, 0.3, 54.6, 0.3);
        REQUIRE_THROWS_AS(zar::pearson_residual(f, 0), std::invalid_argument);
        REQUIRE_THROWS_AS(zar::deviance_residual(f, 0), std::invalid_argument);
        REQUIRE_THROWS_AS(zar::anscombe_residual(f, 0), std::invalid_argument);
        const std::vector<std::optional<double>> lev(1, 0.5);
        REQUIRE_THROWS_AS(zar::williams_residual(f, 0, lev), std::invalid_argument);
    }
}

TEST_CASE("leverage diagonal", "[residuals][leverage]") {
    SECTION("hand-computed three-point design") {
        // Gamma with a log mean link has weight 1/phi, so the per-row phi
        // values below give weights (1, 2, 0.5); the weighted hat diagonal of
        // the design {(1,0),(1,1),(1,2)} is then (0.8, 0.6, 0.6) exactly.
        ZarFit f = make_shell(ContinuousFamily::Gamma, {1.0, 1.0, 1.0}, 1.0, 1.0, 0.3);
        f.x_mu.resize(3, 2);
        f.x_mu << 1.0, 0.0, 1.0, 1.0, 1.0, 2.0;
        f.phi_hat << 1.0, 0.5, 2.0;
        const auto h = zar::leverage(f);
        REQUIRE(*h[0] == Approx(0.8).margin(1e-12));
        REQUIRE(*h[1] == Approx(0.6).margin(1e-12));
        REQUIRE(*h[2] == Approx(0.6).margin(1e-12));
    }
    SECTION("balanced intercept-only design") {
        const ZarFit f =
            make_shell(ContinuousFamily::Gamma, {0.5, 1.2, 0.0, 2.0, 0.9}, 1.5, 0.4, 0.3);
        const auto h = zar::leverage(f);
        REQUIRE_FALSE(h[2].has_value());  // the zero row carries no leverage
        for (std::size_t i : {0u, 1u, 3u, 4u}) {
            REQUIRE(*h[i] == Approx(0.25).margin(1e-12));
        }
    }
    SECTION("the diagonal sums to the number of mu parameters") {
        const zar::ScenarioSpec s = zar::scenario_zaga(97531, 100);
        zar::Dataset d;
        d.X = s.X;
        d.column_names = s.column_names;
        d.y.resize(s.n());
        const auto truth = s.true_params();
        zar::rng::Stream stream(61);
        for (Eigen::Index i = 0; i < s.n(); ++i) {
            d.y[i] = zar::sample_zar(s.family, truth[static_cast<std::size_t>(i)], stream);
        }
        zar::FitOptions fo;
        fo.gradient = zar::FitOptions::Gradient::Analytic;
        const ZarFit fit = zar::fit(s.model_spec(), d, fo);
        REQUIRE(fit.convergence.converged);
        const auto h = zar::leverage(fit);
        double total = 0.0;
        for (const auto& v : h) {
            if (v) total += *v;
        }
        REQUIRE(total == Approx(3.0).margin(1e-6));
    }
    SECTION("a singular weighted design throws") {
        ZarFit f = make_shell(ContinuousFamily::Gamma, {1.0, 2.0}, 1.0, 1.0, 0.3);
        f.x_mu.resize(2, 2);
        f.x_mu << 1.0, 1.0, 1.0, 1.0;
        REQUIRE_THROWS_WITH(zar::leverage(f), ContainsSubstring("singular"));
    }
}

TEST_CASE("Williams residual interpolates deviance and Pearson",
          "[residuals][component]") {
    const ZarFit f = make_shell(ContinuousFamily::Gamma, {0.8}, 1.7, 0.6, 0.3);
    const std::vector<std::optional<double>> at_zero(1, 0.0);
    const std::vector<std::optional<double>> at_one(1, 1.0);
    REQUIRE(*zar::williams_residual(f, 0, at_zero) ==
            Approx(*zar::deviance_residual(f, 0)).margin(1e-14));
    REQUIRE(*zar::williams_residual(f, 0, at_one) ==
            Approx(*zar::pearson_residual(f, 0)).margin(1e-14));
}

TEST_CASE("binary zero-part residual", "[residuals][binary][frozen]") {
    const ZarFit zero_case = make_shell(ContinuousFamily::Gamma, {0.0}, 1.0, 1.0, 0.5);
    REQUIRE(zar::binary_zero_part_residual(zero_case)[0] ==
            Approx(1.1774100225154747).epsilon(1e-12));
    const ZarFit pos_case = make_shell(ContinuousFamily::Gamma, {1.3}, 1.0, 1.0, 0.3);
    REQUIRE(zar::binary_zero_part_residual(pos_case)[0] ==
            Approx(-0.8446004309005915).epsilon(1e-12));
}

TEST_CASE("randomized quantile residual mechanics", "[residuals][rq]") {
    const zar::MeanDispersionParams p{2.5, 0.4};
    std::vector<double> y;
    zar::rng::Stream gen(271);
    const zar::ZeroAdjustedParams truth{0.3, p};
    for (int i = 0; i < 60; ++i) y.push_back(zar::sample_zar(ContinuousFamily::Gamma, truth, gen));
    const ZarFit f = make_shell(ContinuousFamily::Gamma, y, 2.5, 0.4, 0.3);

    zar::rng::Stream s1(99);
    const zar::ResidualVector rv = zar::randomized_quantile_residual(f, s1);
    REQUIRE(rv.seed.has_value());
    REQUIRE(*rv.seed == 99);

    const double floor = zar::norm_quantile(0.3);
    for (Eigen::Index i = 0; i < f.n(); ++i) {
        const double v = *rv.values[static_cast<std::size_t>(i)];
        if (f.y[i] > 0.0) {
            REQUIRE(v >= floor - 1e-12);  // positives live above Phi^{-1}(alpha)
        } else {
            REQUIRE(v < floor);  // zeros live strictly below
        }
    }

    SECTION("same seed reproduces bitwise, different seed moves only zeros") {
        zar::rng::Stream s2(99), s3(1234);
        const zar::ResidualVector again = zar::randomized_quantile_residual(f, s2);
        const zar::ResidualVector other = zar::randomized_quantile_residual(f, s3);
        bool zero_changed = false;
        for (Eigen::Index i = 0; i < f.n(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            REQUIRE(*again.values[k] == *rv.values[k]);
            if (f.y[i] > 0.0) {
                REQUIRE(*other.values[k] == *rv.values[k]);
            } else if (*other.values[k] != *rv.values[k]) {
                zero_changed = true;
            }
        }
        REQUIRE(zero_changed);
    }

    SECTION("the no-stream overload refuses randomized kinds") {
        REQUIRE_THROWS_AS(zar::compute_residuals(f, ResidualKind::randomized_quantile()),
                          std::invalid_argument);
    }
}

TEST_CASE("randomized quantile residuals are standard normal under the truth",
          "[residuals][rq][statistical]") {
    const zar::ZeroAdjustedParams truth{0.3, {2.5, 0.4}};
    std::vector<double> y(10000);
    zar::rng::Stream gen(314);
    for (double& v : y) v = zar::sample_zar(ContinuousFamily::Gamma, truth, gen);
    const ZarFit f = make_shell(ContinuousFamily::Gamma, y, 2.5, 0.4, 0.3);
    zar::rng::Stream rq_stream(2718);
    const zar::ResidualVector rv = zar::randomized_quantile_residual(f, rq_stream);
    std::vector<double> sample;
    sample.reserve(rv.values.size());
    for (const auto& v : rv.values) sample.push_back(*v);
    REQUIRE(oracle::ks_statistic(sample, oracle::normal_cdf) < oracle::kKsCritical1pc);
}

TEST_CASE("ZAQR agrees bitwise with the randomized quantile residual where it is positive",
          "[residuals][zaqr]") {
    std::vector<double> y;
    zar::rng::Stream gen(555);
    const zar::ZeroAdjustedParams truth{0.3, {2.5, 0.4}};
    for (int i = 0; i < 200; ++i) {
        y.push_back(zar::sample_zar(ContinuousFamily::Gamma, truth, gen));
    }
    const ZarFit f = make_shell(ContinuousFamily::Gamma, y, 2.5, 0.4, 0.3);
    const zar::ResidualVector star = zar::zaqr(f);
    zar::rng::Stream stream(7);
    const zar::ResidualVector rq = zar::randomized_quantile_residual(f, stream);

    int matched = 0;
    for (Eigen::Index i = 0; i < f.n(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        REQUIRE(star.values[k].has_value() == (f.y[i] > 0.0));
        if (star.values[k] && *star.values[k] > 0.0) {
            REQUIRE(*star.values[k] == *rq.values[k]);  // bitwise
            ++matched;
        }
    }
    REQUIRE(matched > 20);
}

TEST_CASE("ZAQR branches pin down around the component median", "[residuals][zaqr]") {
    const zar::MeanDispersionParams p{2.5, 0.4};
    const double below = zar::quantile_continuous(ContinuousFamily::Gamma, p, 0.49);
    const double above = zar::quantile_continuous(ContinuousFamily::Gamma, p, 0.51);
    const ZarFit f = make_shell(ContinuousFamily::Gamma, {below, above}, 2.5, 0.4, 0.3);
    const zar::ResidualVector star = zar::zaqr(f);
    zar::rng::Stream stream(7);
    const zar::ResidualVector rq = zar::randomized_quantile_residual(f, stream);

    // Just below the median the two residuals separate: the ZAQR drops to the
    // negative branch while the randomized quantile stays above Phi^{-1}(alpha).
    REQUIRE(*star.values[0] < 0.0);
    REQUIRE(*rq.values[0] > 0.0);
    REQUIRE(*star.values[0] != *rq.values[0]);
    // Just above it they coincide exactly.
    REQUIRE(*star.values[1] > 0.0);
    REQUIRE(*star.values[1] == *rq.values[1]);
}

TEST_CASE("fused ZAQR equals the star transform of the quantile component",
          "[residuals][zaqr]") {
    const zar::MeanDispersionParams p{2.5, 0.4};
    std::vector<double> y;
    for (double q = 0.05; q < 0.96; q += 0.05) {
        y.push_back(zar::quantile_continuous(ContinuousFamily::Gamma, p, q));
    }
    const ZarFit f = make_shell(ContinuousFamily::Gamma, y, 2.5, 0.4, 0.3);
    const zar::ResidualVector fused = zar::zaqr(f);
    for (Eigen::Index i = 0; i < f.n(); ++i) {
        const double literal =
            zar::star_residual(*zar::quantile_component_residual(f, i), 0.3);
        REQUIRE(*fused.values[static_cast<std::size_t>(i)] ==
                Approx(literal).margin(1e-9));
    }
}

TEST_CASE("star of a non-quantile component applies elementwise", "[residuals][star]") {
    std::vector<double> y;
    zar::rng::Stream gen(321);
    const zar::ZeroAdjustedParams truth{0.25, {1.7, 0.6}};
    for (int i = 0; i < 40; ++i) {
        y.push_back(zar::sample_zar(ContinuousFamily::Gamma, truth, gen));
    }
    const ZarFit f = make_shell(ContinuousFamily::Gamma, y, 1.7, 0.6, 0.25);
    const zar::ResidualVector sp =
        zar::compute_residuals(f, ResidualKind::star(ResidualKind::Tag::Pearson));
    for (Eigen::Index i = 0; i < f.n(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const auto base = zar::pearson_residual(f, i);
        REQUIRE(sp.values[k].has_value() == base.has_value());
        if (base) {
            REQUIRE(*sp.values[k] == zar::star_residual(*base, 0.25));  // bitwise
        }
    }
}

TEST_CASE("residual kind names round trip", "[residuals][parse]") {
    for (const char* name :
         {"quantile", "deviance", "pearson", "anscombe", "williams", "binary",
          "randomized_quantile", "zaqr", "star_deviance", "star_pearson", "star_anscombe",
          "star_williams"}) {
        REQUIRE(zar::residual_kind_name(zar::parse_residual_kind(name)) == name);
    }
    REQUIRE(zar::residual_kind_name(zar::parse_residual_kind("rq")) == "randomized_quantile");
    REQUIRE(zar::residual_kind_name(zar::parse_residual_kind("star_quantile")) == "zaqr");
    REQUIRE_THROWS_AS(zar::parse_residual_kind("studentized"), std::invalid_argument);
    REQUIRE_THROWS_AS(ResidualKind::star(ResidualKind::Tag::RandomizedQuantile),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(ResidualKind::star(ResidualKind::Tag::BinaryZeroPart),
                      std::invalid_argument);
}

TEST_CASE("residuals require the matching fitted block", "[residuals][errors]") {
    ZarFit no_cont = make_shell(ContinuousFamily::Gamma, {0.0, 1.0}, 1.0, 1.0, 0.3);
    no_cont.continuous_block_fitted = false;
    REQUIRE_THROWS_WITH(zar::quantile_component_residual(no_cont, 1),
                        ContainsSubstring("continuous-part"));
    REQUIRE_THROWS_AS(zar::zaqr(no_cont), std::invalid_argument);

    ZarFit no_alpha = make_shell(ContinuousFamily::Gamma, {0.0, 1.0}, 1.0, 1.0, 0.3);
    no_alpha.alpha_block_fitted = false;
    REQUIRE_THROWS_WITH(zar::binary_zero_part_residual(no_alpha),
                        ContainsSubstring("alpha-part"));
    REQUIRE_THROWS_AS(zar::zaqr(no_alpha), std::invalid_argument);
    zar::rng::Stream stream(1);
    REQUIRE_THROWS_AS(zar::randomized_quantile_residual(no_alpha, stream),
                      std::invalid_argument);
}
