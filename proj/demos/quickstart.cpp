// Library walkthrough: simulate one dataset from the built-in beta scenario,
// fit the model, print the coefficient table, and show a few residuals.

#include <cstdio>

#include "zar/model.hpp"
#include "zar/residuals.hpp"
#include "zar/simulation.hpp"

int main() {
    const zar::ScenarioSpec scenario = zar::scenario1_zabe();
    zar::rng::Stream stream(42);

    zar::Dataset data;
    data.X = scenario.X;
    data.column_names = scenario.column_names;
    data.y.resize(scenario.n());
    const auto truth = scenario.true_params();
    for (Eigen::Index i = 0; i < scenario.n(); ++i) {
        data.y[i] = zar::sample_zar(scenario.family, truth[static_cast<std::size_t>(i)], stream);
    }

    const zar::ZarFit fit = zar::fit(scenario.model_spec(), data);
    std::printf("log-likelihood %.4f, converged: %s\n\n", fit.loglik,
                fit.convergence.converged ? "yes" : "no");
    std::printf("%-8s %-10s %10s %10s %8s\n", "equation", "variable", "estimate", "stderr",
                "z");
    for (const zar::WaldRow& row : zar::wald_tests(fit)) {
        std::printf("%-8s %-10s %10.4f %10.4f %8.2f\n", row.equation.c_str(),
                    row.variable.c_str(), row.estimate, row.std_error, row.z);
    }

    const zar::ResidualVector rq = zar::randomized_quantile_residual(fit, stream);
    const zar::ResidualVector star = zar::zaqr(fit);
    std::printf("\nfirst observations (zeros have no ZAQR):\n");
    std::printf("%4s %10s %12s %12s\n", "i", "y", "rq", "zaqr");
    for (Eigen::Index i = 0; i < 8; ++i) {
        const auto& z = star.values[static_cast<std::size_t>(i)];
        std::printf("%4lld %10.4f %12.4f %12s\n", static_cast<long long>(i + 1), fit.y[i],
                    *rq.values[static_cast<std::size_t>(i)],
                    z ? std::to_string(*z).c_str() : "-");
    }
    return 0;
}
