// zar: fit and diagnose zero-adjusted regression models.

#include <CLI11.hpp>

#include "zar/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Zero-adjusted regression: fitting, residual diagnostics, "
                 "simulated envelopes and Monte Carlo calibration studies"};
    app.require_subcommand(1);

    struct SubSpec {
        const char* name;
        const char* help;
        zar::cli::Command command;
        bool needs_data;
    };
    const SubSpec subs[] = {
        {"fit", "Fit a model and write a report plus a fit artifact", zar::cli::Command::Fit,
         true},
        {"diagnose", "Compute residuals from a fit artifact", zar::cli::Command::Diagnose,
         true},
        {"envelope", "Half-normal residual envelope from a fit artifact",
         zar::cli::Command::Envelope, true},
        {"simulate", "Run a Monte Carlo calibration study", zar::cli::Command::Simulate,
         false},
    };

    zar::cli::RunConfig rc;
    for (const SubSpec& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", rc.config_path, "Model/config file (key = value lines)")
            ->required();
        if (s.needs_data) {
            sub->add_option("--data", rc.data_path, "Input CSV with a header row")
                ->required();
        }
        sub->add_option("--out", rc.out_dir, "Output directory")->required();
        sub->add_option("--seed", rc.seed, "RNG seed (64-bit unsigned)");
        sub->callback([&rc, &s] { rc.command = s.command; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help prints exit 0; parse failures are usage errors
    }
    return zar::cli::run(rc);
}
