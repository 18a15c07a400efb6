#pragma once

// Command front end: fit, diagnose, envelope and simulate, sharing a
// key = value config format and a JSON fit artifact for the downstream
// commands. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 non-convergence.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zar/csv.hpp"
#include "zar/envelope.hpp"
#include "zar/model.hpp"
#include "zar/residuals.hpp"
#include "zar/simulation.hpp"

namespace zar::cli {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { Fit, Diagnose, Envelope, Simulate };

struct RunConfig {
    Command command = Command::Fit;
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::uint64_t seed = 1;
};

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& in) {
    ConfigMap out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = detail::strip(line);
        if (s.empty() || s[0] == '#') continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) +
                             ": expected key = value");
        }
        const std::string key = detail::strip(s.substr(0, eq));
        if (key.empty()) {
            throw UsageError("config line " + std::to_string(line_no) + ": empty key");
        }
        out[key] = detail::strip(s.substr(eq + 1));
    }
    return out;
}

inline ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file: " + path);
    return parse_config(in);
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string item = zar::detail::strip(
            comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string get_or(const ConfigMap& cfg, const std::string& key,
                          const std::string& fallback) {
    const auto it = cfg.find(key);
    return it == cfg.end() ? fallback : it->second;
}

inline std::string require_key(const ConfigMap& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    if (it == cfg.end() || it->second.empty()) {
        throw UsageError("config: missing required key '" + key + "'");
    }
    return it->second;
}

inline long parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw UsageError("config: key '" + key + "' is not an integer: " + value);
    }
}

inline double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw UsageError("config: key '" + key + "' is not a number: " + value);
    }
}

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace detail

struct ModelConfig {
    ContinuousFamily family = ContinuousFamily::Beta01;
    std::string response;
    std::vector<std::string> mu_covariates, phi_covariates, alpha_covariates;
    Link mu_link = Link::Logit;
    Link phi_link = Link::Log;
    Link alpha_link = Link::Logit;
};

inline ModelConfig parse_model_config(const ConfigMap& cfg) {
    ModelConfig mc;
    try {
        mc.family = parse_family(detail::require_key(cfg, "family"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    mc.response = detail::require_key(cfg, "response");
    mc.mu_covariates = detail::split_list(detail::require_key(cfg, "mu.covariates"));
    mc.phi_covariates = detail::split_list(detail::get_or(cfg, "phi.covariates", "intercept"));
    mc.alpha_covariates = detail::split_list(
        detail::get_or(cfg, "alpha.covariates", detail::require_key(cfg, "mu.covariates")));
    if (mc.mu_covariates.empty() || mc.phi_covariates.empty() || mc.alpha_covariates.empty()) {
        throw UsageError("config: covariate lists must not be empty");
    }
    const std::string default_mu_link =
        mc.family == ContinuousFamily::Beta01 ? "logit" : "log";
    try {
        mc.mu_link = parse_link(detail::get_or(cfg, "mu.link", default_mu_link));
        mc.phi_link = parse_link(detail::get_or(cfg, "phi.link", "log"));
        mc.alpha_link = parse_link(detail::get_or(cfg, "alpha.link", "logit"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return mc;
}

// Dataset with a synthesized leading intercept column followed by every CSV
// column except the response; covariate names resolve against that layout.
inline std::pair<Dataset, ZarModelSpec> build_dataset(const CsvTable& table,
                                                      const ModelConfig& mc) {
    Eigen::Index response_col;
    try {
        response_col = table.column(mc.response);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    const Eigen::Index n = table.values.rows();
    Dataset data;
    data.y = table.values.col(response_col);
    data.X.resize(n, table.values.cols());  // intercept replaces the response slot
    data.X.col(0).setOnes();
    data.column_names = {"intercept"};
    std::map<std::string, int> index{{"intercept", 0}, {"1", 0}};
    int next = 1;
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
        if (j == response_col) continue;
        data.X.col(next) = table.values.col(j);
        data.column_names.push_back(table.header[static_cast<std::size_t>(j)]);
        index.emplace(table.header[static_cast<std::size_t>(j)], next);
        ++next;
    }

    auto resolve = [&](const std::vector<std::string>& names) {
        std::vector<int> cols;
        cols.reserve(names.size());
        for (const std::string& name : names) {
            const auto it = index.find(name);
            if (it == index.end()) {
                throw DataError("covariate '" + name + "' not found in the data header");
            }
            cols.push_back(it->second);
        }
        return cols;
    };

    ZarModelSpec spec;
    spec.family = mc.family;
    spec.mu = {resolve(mc.mu_covariates), mc.mu_link};
    spec.phi = {resolve(mc.phi_covariates), mc.phi_link};
    spec.alpha = {resolve(mc.alpha_covariates), mc.alpha_link};
    try {
        spec.validate(data.X.cols());
        validate_response(mc.family, data.y);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    if (data.y.minCoeff() == data.y.maxCoeff()) {
        throw DataError("response '" + mc.response + "' is constant");
    }
    return {std::move(data), spec};
}

inline FitOptions parse_fit_options(const ConfigMap& cfg) {
    FitOptions fo;
    const std::string grad = detail::get_or(cfg, "fit.gradient", "fd");
    if (grad == "fd" || grad == "finite_difference") {
        fo.gradient = FitOptions::Gradient::FiniteDifference;
    } else if (grad == "analytic") {
        fo.gradient = FitOptions::Gradient::Analytic;
    } else {
        throw UsageError("config: fit.gradient must be 'fd' or 'analytic'");
    }
    const std::string start = detail::get_or(cfg, "fit.start", "heuristic");
    if (start == "heuristic") {
        fo.start_strategy = FitOptions::StartStrategy::Heuristic;
    } else if (start == "zero") {
        fo.start_strategy = FitOptions::StartStrategy::Zero;
    } else {
        throw UsageError("config: fit.start must be 'heuristic' or 'zero'");
    }
    fo.max_iter = static_cast<int>(
        detail::parse_int(detail::get_or(cfg, "fit.max_iter", "500"), "fit.max_iter"));
    fo.grad_tol =
        detail::parse_double(detail::get_or(cfg, "fit.grad_tol", "1e-8"), "fit.grad_tol");
    if (fo.max_iter < 1 || !(fo.grad_tol > 0.0)) {
        throw UsageError("config: fit.max_iter must be >= 1 and fit.grad_tol > 0");
    }
    return fo;
}

// ---------------------------------------------------------------------------
// Fit artifact (JSON) round trip.

inline nlohmann::json artifact_json(const ZarFit& fit, const ModelConfig& mc) {
    nlohmann::json art;
    art["artifact"] = "zar-fit";
    art["version"] = 1;
    art["family"] = family_name(fit.spec.family);
    art["response"] = mc.response;
    auto block = [](Link link, const std::vector<std::string>& names,
                    const Eigen::VectorXd& beta, bool fitted) {
        nlohmann::json b;
        b["link"] = link_name(link);
        b["covariates"] = names;
        // NaN has no JSON form; an unfitted block stores no coefficients.
        std::vector<double> coef;
        if (fitted) coef.assign(beta.data(), beta.data() + beta.size());
        b["coefficients"] = coef;
        return b;
    };
    art["mu"] = block(fit.spec.mu.link, fit.names_mu, fit.beta1,
                      fit.continuous_block_fitted);
    art["phi"] = block(fit.spec.phi.link, fit.names_phi, fit.beta2,
                       fit.continuous_block_fitted);
    art["alpha"] = block(fit.spec.alpha.link, fit.names_alpha, fit.beta3,
                         fit.alpha_block_fitted);
    art["loglik"] = fit.loglik;
    art["convergence"] = {{"converged", fit.convergence.converged},
                          {"iterations", fit.convergence.iterations},
                          {"grad_norm", fit.convergence.grad_norm}};
    art["blocks"] = {{"continuous", fit.continuous_block_fitted},
                     {"alpha", fit.alpha_block_fitted}};
    std::vector<std::vector<double>> vcov;
    for (Eigen::Index i = 0; i < fit.vcov.rows(); ++i) {
        vcov.emplace_back(fit.vcov.row(i).data(), fit.vcov.row(i).data() + fit.vcov.cols());
    }
    art["vcov"] = vcov;
    art["vcov_pseudo_inverse"] = fit.vcov_pseudo_inverse;
    return art;
}

inline ModelConfig model_config_from_artifact(const nlohmann::json& art) {
    if (!art.contains("artifact") || art["artifact"] != "zar-fit") {
        throw DataError("fit artifact: unrecognized format");
    }
    ModelConfig mc;
    mc.family = parse_family(art.at("family").get<std::string>());
    mc.response = art.at("response").get<std::string>();
    mc.mu_covariates = art.at("mu").at("covariates").get<std::vector<std::string>>();
    mc.phi_covariates = art.at("phi").at("covariates").get<std::vector<std::string>>();
    mc.alpha_covariates = art.at("alpha").at("covariates").get<std::vector<std::string>>();
    mc.mu_link = parse_link(art.at("mu").at("link").get<std::string>());
    mc.phi_link = parse_link(art.at("phi").at("link").get<std::string>());
    mc.alpha_link = parse_link(art.at("alpha").at("link").get<std::string>());
    return mc;
}

inline ZarFit fit_from_artifact(const nlohmann::json& art, const Dataset& data,
                                const ZarModelSpec& spec) {
    ZarFit out;
    out.spec = spec;
    out.y = data.y;
    out.ids = data.ids;
    out.x_mu = zar::detail::select_columns(data.X, spec.mu.columns);
    out.x_phi = zar::detail::select_columns(data.X, spec.phi.columns);
    out.x_alpha = zar::detail::select_columns(data.X, spec.alpha.columns);
    out.names_mu = art.at("mu").at("covariates").get<std::vector<std::string>>();
    out.names_phi = art.at("phi").at("covariates").get<std::vector<std::string>>();
    out.names_alpha = art.at("alpha").at("covariates").get<std::vector<std::string>>();

    out.continuous_block_fitted = art.at("blocks").at("continuous").get<bool>();
    out.alpha_block_fitted = art.at("blocks").at("alpha").get<bool>();
    auto coef = [&](const char* key, Eigen::Index expected, bool fitted) {
        const std::vector<double> v = art.at(key).at("coefficients").get<std::vector<double>>();
        if (!fitted && v.empty()) {
            return Eigen::VectorXd::Constant(expected,
                                             std::numeric_limits<double>::quiet_NaN())
                .eval();
        }
        if (static_cast<Eigen::Index>(v.size()) != expected) {
            throw DataError("fit artifact: coefficient lengths do not match the data");
        }
        return Eigen::Map<const Eigen::VectorXd>(v.data(), expected).eval();
    };
    out.beta1 = coef("mu", out.x_mu.cols(), out.continuous_block_fitted);
    out.beta2 = coef("phi", out.x_phi.cols(), out.continuous_block_fitted);
    out.beta3 = coef("alpha", out.x_alpha.cols(), out.alpha_block_fitted);
    out.loglik = art.at("loglik").get<double>();
    out.convergence.converged = art.at("convergence").at("converged").get<bool>();
    out.convergence.iterations = art.at("convergence").at("iterations").get<int>();
    out.convergence.grad_norm = art.at("convergence").at("grad_norm").get<double>();
    out.vcov_pseudo_inverse = art.value("vcov_pseudo_inverse", false);
    const auto vc = art.at("vcov").get<std::vector<std::vector<double>>>();
    out.vcov.resize(static_cast<Eigen::Index>(vc.size()),
                    vc.empty() ? 0 : static_cast<Eigen::Index>(vc.front().size()));
    for (std::size_t i = 0; i < vc.size(); ++i) {
        for (std::size_t j = 0; j < vc[i].size(); ++j) {
            out.vcov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vc[i][j];
        }
    }

    const Eigen::Index n = data.n();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.mu_hat = Eigen::VectorXd::Constant(n, nan);
    out.phi_hat = Eigen::VectorXd::Constant(n, nan);
    out.alpha_hat = Eigen::VectorXd::Constant(n, nan);
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
    return out;
}

// ---------------------------------------------------------------------------
// Report formatting.

inline std::string format_p_value(double p) {
    if (std::isnan(p)) return "NA";
    if (p < 0.0001) return "< 0.0001";
    return detail::fmt("%.4f", p);
}

inline std::string format_fit_report(const ZarFit& fit, const std::vector<WaldRow>& rows) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-9s %-16s %14s %14s %12s\n", "Equation", "Variable",
                  "Estimate", "Std. error", "P-value");
    os << line;
    for (const WaldRow& r : rows) {
        const std::string se = std::isnan(r.std_error) ? "NA" : detail::fmt("%.6f", r.std_error);
        std::snprintf(line, sizeof line, "%-9s %-16s %14.6f %14s %12s\n", r.equation.c_str(),
                      r.variable.c_str(), r.estimate, se.c_str(),
                      format_p_value(r.p_value).c_str());
        os << line;
    }
    os << '\n';
    os << "Log-likelihood: " << detail::fmt("%.6f", fit.loglik) << '\n';
    os << "Converged: " << (fit.convergence.converged ? "yes" : "no") << " ("
       << fit.convergence.iterations << " iterations, max |gradient| "
       << detail::fmt("%.3e", fit.convergence.grad_norm) << ")\n";
    os << "Blocks fitted: continuous=" << (fit.continuous_block_fitted ? "yes" : "no")
       << " alpha=" << (fit.alpha_block_fitted ? "yes" : "no") << '\n';
    os << "Observations: " << fit.n() << " (" << fit.n_zero() << " zero, " << fit.n_positive()
       << " positive)\n";
    return os.str();
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << content;
}

inline std::filesystem::path prepare_out_dir(const RunConfig& rc) {
    if (rc.out_dir.empty()) throw UsageError("missing output directory");
    std::error_code ec;
    std::filesystem::create_directories(rc.out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + rc.out_dir);
    return std::filesystem::path(rc.out_dir);
}

inline std::string artifact_path(const ConfigMap& cfg, const RunConfig& rc) {
    return get_or(cfg, "artifact",
                  (std::filesystem::path(rc.out_dir) / "fit.json").string());
}

inline nlohmann::json load_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read fit artifact: " + path);
    nlohmann::json art;
    try {
        in >> art;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("fit artifact is not valid JSON: " + std::string(e.what()));
    }
    return art;
}

inline std::string fmt_cell(double v) { return fmt("%.17g", v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands.

inline int cmd_fit(const RunConfig& rc) {
    const ConfigMap cfg = parse_config_file(rc.config_path);
    const ModelConfig mc = parse_model_config(cfg);
    const FitOptions fo = parse_fit_options(cfg);
    CsvTable table;
    try {
        table = read_csv_file(rc.data_path);
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    auto [data, spec] = build_dataset(table, mc);
    ZarFit fit_result;
    try {
        fit_result = fit(spec, data, fo);
    } catch (const RankDeficiencyError& e) {
        throw DataError(e.what());
    }
    const auto out = detail::prepare_out_dir(rc);
    std::vector<WaldRow> rows;
    std::string report;
    try {
        rows = wald_tests(fit_result);
        report = format_fit_report(fit_result, rows);
    } catch (const std::runtime_error& e) {
        report = format_fit_report(fit_result, {}) + "Warning: " + e.what() + "\n";
    }
    detail::write_text_file(out / "fit_report.txt", report);
    detail::write_text_file(out / "fit.json", artifact_json(fit_result, mc).dump(2) + "\n");
    std::cout << report;
    if (!fit_result.convergence.converged) {
        std::cerr << "error: fit did not converge\n";
        return 3;
    }
    return 0;
}

namespace detail {

struct RebuiltFit {
    Dataset data;
    ZarModelSpec spec;
    ZarFit fit;
};

inline RebuiltFit rebuild(const RunConfig& rc, const ConfigMap& cfg) {
    const nlohmann::json art = load_artifact(artifact_path(cfg, rc));
    ModelConfig mc;
    try {
        mc = model_config_from_artifact(art);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    CsvTable table;
    try {
        table = read_csv_file(rc.data_path);
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    auto [data, spec] = build_dataset(table, mc);
    ZarFit fit = fit_from_artifact(art, data, spec);
    return RebuiltFit{std::move(data), spec, std::move(fit)};
}

inline std::vector<ResidualKind> parse_kind_list(const std::string& csv_list) {
    std::vector<ResidualKind> kinds;
    for (const std::string& name : split_list(csv_list)) {
        try {
            kinds.push_back(parse_residual_kind(name));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (kinds.empty()) throw UsageError("no residual kinds requested");
    return kinds;
}

}  // namespace detail

inline int cmd_diagnose(const RunConfig& rc) {
    const ConfigMap cfg = parse_config_file(rc.config_path);
    detail::RebuiltFit rebuilt = detail::rebuild(rc, cfg);
    const ZarFit& fit = rebuilt.fit;
    const std::vector<ResidualKind> kinds = detail::parse_kind_list(
        detail::get_or(cfg, "residuals", "zaqr, randomized_quantile, binary"));

    rng::Stream stream(rc.seed);
    std::vector<ResidualVector> results;
    results.reserve(kinds.size());
    for (const ResidualKind& kind : kinds) {
        try {
            results.push_back(compute_residuals(fit, kind, stream));
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what());
        }
    }

    const auto out = detail::prepare_out_dir(rc);
    std::ostringstream os;
    os << "id,y,mu_hat,phi_hat,alpha_hat";
    for (const ResidualKind& kind : kinds) os << ',' << residual_kind_name(kind);
    os << '\n';
    for (Eigen::Index i = 0; i < fit.n(); ++i) {
        os << fit.id(i) << ',' << detail::fmt_cell(fit.y[i]) << ','
           << detail::fmt_cell(fit.mu_hat[i]) << ',' << detail::fmt_cell(fit.phi_hat[i]) << ','
           << detail::fmt_cell(fit.alpha_hat[i]);
        for (const ResidualVector& rv : results) {
            const auto& v = rv.values[static_cast<std::size_t>(i)];
            os << ',';
            if (v) os << detail::fmt_cell(*v);
        }
        os << '\n';
    }
    detail::write_text_file(out / "residuals.csv", os.str());

    for (std::size_t k = 0; k < kinds.size(); ++k) {
        std::ostringstream ps;
        ps << "mu_hat," << residual_kind_name(kinds[k]) << '\n';
        for (Eigen::Index i = 0; i < fit.n(); ++i) {
            const auto& v = results[k].values[static_cast<std::size_t>(i)];
            if (!v) continue;
            ps << detail::fmt_cell(fit.mu_hat[i]) << ',' << detail::fmt_cell(*v) << '\n';
        }
        detail::write_text_file(out / ("plot_" + residual_kind_name(kinds[k]) + ".csv"),
                                ps.str());
    }
    std::cout << "wrote " << (out / "residuals.csv").string() << " and " << kinds.size()
              << " plot file(s)\n";
    return 0;
}

inline int cmd_envelope(const RunConfig& rc) {
    const ConfigMap cfg = parse_config_file(rc.config_path);
    detail::RebuiltFit rebuilt = detail::rebuild(rc, cfg);

    ResidualKind kind = ResidualKind::zaqr();
    try {
        kind = parse_residual_kind(detail::get_or(cfg, "envelope.kind", "zaqr"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    EnvelopeOptions eo;
    eo.replicates = static_cast<int>(detail::parse_int(
        detail::get_or(cfg, "envelope.replicates", "100"), "envelope.replicates"));
    eo.workers = static_cast<int>(
        detail::parse_int(detail::get_or(cfg, "envelope.workers", "1"), "envelope.workers"));
    eo.fit_options = parse_fit_options(cfg);
    const std::string band = detail::get_or(cfg, "envelope.band", "2.5,97.5");
    if (band == "minmax") {
        eo.lower_percentile = 0.0;
        eo.upper_percentile = 100.0;
    } else {
        const std::vector<std::string> parts = detail::split_list(band);
        if (parts.size() != 2) {
            throw UsageError("config: envelope.band must be 'lo,hi' percentiles or 'minmax'");
        }
        eo.lower_percentile = detail::parse_double(parts[0], "envelope.band");
        eo.upper_percentile = detail::parse_double(parts[1], "envelope.band");
    }
    if (eo.replicates < 19) {
        throw UsageError("config: envelope.replicates must be at least 19");
    }
    if (!rebuilt.fit.convergence.converged) {
        std::cerr << "error: the stored fit did not converge; no envelope computed\n";
        return 3;
    }

    EnvelopeTable table;
    try {
        table = halfnormal_envelope(rebuilt.fit, kind, rc.seed, eo);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    if (table.dropped > 0) {
        std::cerr << "warning: dropped " << table.dropped << " of " << table.replicates
                  << " envelope replicates (refit did not converge)\n";
    }

    const auto out = detail::prepare_out_dir(rc);
    std::ostringstream os;
    os << "i,score,lower,median,upper,observed\n";
    for (const EnvelopeRow& r : table.rows) {
        os << r.index << ',' << detail::fmt("%.10g", r.score) << ','
           << detail::fmt("%.10g", r.lower) << ',' << detail::fmt("%.10g", r.median) << ','
           << detail::fmt("%.10g", r.upper) << ',' << detail::fmt("%.10g", r.observed) << '\n';
    }
    detail::write_text_file(out / "envelope.csv", os.str());
    std::cout << "wrote " << (out / "envelope.csv").string() << '\n';
    return 0;
}

inline int cmd_simulate(const RunConfig& rc) {
    const ConfigMap cfg = parse_config_file(rc.config_path);
    const std::string name = detail::require_key(cfg, "sim.scenario");
    const std::uint64_t cov_seed = static_cast<std::uint64_t>(detail::parse_int(
        detail::get_or(cfg, "sim.covariate_seed", "97531"), "sim.covariate_seed"));
    const long n = detail::parse_int(detail::get_or(cfg, "sim.n", "100"), "sim.n");
    const long reps = detail::parse_int(detail::get_or(cfg, "sim.reps", "1000"), "sim.reps");
    if (n < 1 || reps < 1) throw UsageError("config: sim.n and sim.reps must be >= 1");

    ScenarioSpec scenario;
    try {
        scenario = scenario_by_name(name, cov_seed, n);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const std::vector<ResidualKind> kinds =
        detail::parse_kind_list(detail::get_or(cfg, "sim.kinds", "zaqr"));
    RunStudyOptions so;
    so.workers = static_cast<int>(
        detail::parse_int(detail::get_or(cfg, "sim.workers", "1"), "sim.workers"));
    if (cfg.count("fit.gradient") || cfg.count("fit.max_iter") || cfg.count("fit.grad_tol") ||
        cfg.count("fit.start")) {
        const bool vcov = so.fit_options.compute_vcov;
        so.fit_options = parse_fit_options(cfg);
        so.fit_options.compute_vcov = vcov;
    }

    const SimReport report = run_study(scenario, static_cast<int>(reps), kinds, rc.seed, so);

    const auto out = detail::prepare_out_dir(rc);
    std::ostringstream stats, exceed;
    write_simreport_stats_csv(report, stats);
    write_simreport_exceedance_csv(report, exceed);
    detail::write_text_file(out / "simulation_stats.csv", stats.str());
    detail::write_text_file(out / "simulation_exceedance.csv", exceed.str());
    detail::write_text_file(out / "simulation_meta.json",
                            simreport_metadata(report).dump(2) + "\n");
    std::cout << stats.str();
    return 0;
}

inline int run(const RunConfig& rc) {
    try {
        switch (rc.command) {
            case Command::Fit: return cmd_fit(rc);
            case Command::Diagnose: return cmd_diagnose(rc);
            case Command::Envelope: return cmd_envelope(rc);
            case Command::Simulate: return cmd_simulate(rc);
        }
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const EnvelopeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const RankDeficiencyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace zar::cli
