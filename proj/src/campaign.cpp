#include "gnar/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "gnar/init.hpp"
#include "gnar/parallel.hpp"
#include "gnar/rng.hpp"

namespace gnar {

GnarParams scenario_params(int scenario, int g0) {
    if (scenario < 1 || scenario > 3)
        throw std::invalid_argument("scenario_params: scenario must be 1, 2 or 3");
    GnarParams params;
    params.p = 2;
    params.n_groups = g0;
    if (g0 == 2) {
        params.beta.resize(2, 2);
        params.beta << 0.3, -0.2, 0.1, 0.3;
        params.nu.resize(2);
        params.nu << 0.4, 0.6;
        params.zeta.resize(2, 2);
        params.zeta << -0.8, 0.8, -0.32, 1.2;
    } else if (g0 == 3) {
        params.beta.resize(3, 3);
        params.beta << 0.15, 0.2, -0.1, 0.1, 0.3, -0.2, 0.15, 0.1, 0.3;
        params.nu.resize(3);
        params.nu << 0.2, 0.4, 0.6;
        params.zeta.resize(3, 2);
        params.zeta << -1.2, 0.4, -0.8, 0.8, -0.32, 1.2;
    } else {
        throw std::invalid_argument("scenario_params: built-in tables cover g0 = 2 or 3");
    }
    if (scenario == 2) params.nu.setZero();
    if (scenario == 3) params.zeta.setZero();
    return params;
}

Panel preprocess_real(const Eigen::MatrixXd& counts, const Eigen::MatrixXd& covariates) {
    if ((counts.array() < 0.0).any())
        throw std::invalid_argument("preprocess_real: negative counts");
    if (covariates.rows() != counts.rows())
        throw std::invalid_argument("preprocess_real: covariate rows must match nodes");
    Panel panel;
    panel.y = (1.0 + counts.array()).log().matrix();
    const Eigen::RowVectorXd col_means = panel.y.colwise().mean();
    panel.y.rowwise() -= col_means;
    panel.z = covariates;
    panel.validate();
    return panel;
}

int ScenarioConfig::resolved_communities() const {
    if (communities > 0) return communities;
    if (n <= 150) return 5;
    if (n <= 250) return 10;
    return 20;
}

void ScenarioConfig::resolve() {
    if (pi.empty()) {
        if (g0 == 2)
            pi = {0.5, 0.5};
        else if (g0 == 3)
            pi = {0.3, 0.3, 0.4};
        else
            pi.assign(g0, 1.0 / g0);
    }
    if (static_cast<int>(pi.size()) != g0)
        throw std::invalid_argument("config: pi must have g0 entries");
    double total = 0.0;
    for (double x : pi) total += x;
    if (std::abs(total - 1.0) > 1e-8)
        throw std::invalid_argument("config: pi must sum to one");
    if (!custom_params) true_params = scenario_params(scenario, g0);
    true_params.validate();
    if (true_params.n_groups != g0 || true_params.p != p)
        throw std::invalid_argument("config: parameter tables do not match g0/p");
    if (g_grid.empty()) g_grid = {g0};
    std::sort(g_grid.begin(), g_grid.end());
    g_grid.erase(std::unique(g_grid.begin(), g_grid.end()), g_grid.end());
    if (network != "sbm" && network != "powerlaw")
        throw std::invalid_argument("config: network must be sbm or powerlaw");
    if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
}

ScenarioConfig config_from_section(const ConfigSection& section) {
    ScenarioConfig config;
    config.name = section.name;
    config.scenario = static_cast<int>(section.get_int("scenario", config.scenario));
    config.network = section.get("network", config.network);
    config.n = static_cast<int>(section.get_int("n", config.n));
    config.horizon = static_cast<int>(section.get_int("t", config.horizon));
    config.g0 = static_cast<int>(section.get_int("g0", config.g0));
    config.p = static_cast<int>(section.get_int("p", config.p));
    config.communities = static_cast<int>(section.get_int("communities", 0));
    config.pi = section.get_doubles("pi");
    config.sigma = section.get_double("sigma", config.sigma);
    config.replications = static_cast<int>(section.get_int("replications", config.replications));
    config.seed = static_cast<std::uint64_t>(section.get_int("seed", 20240601));
    if (section.has("g_grid")) config.g_grid = parse_grid(section.get("g_grid"));
    config.restarts = static_cast<int>(section.get_int("restarts", config.restarts));
    config.burn_in = static_cast<int>(section.get_int("burn_in", config.burn_in));
    config.ci_level = section.get_double("ci_level", config.ci_level);
    config.lambda = section.get_double("lambda", -1.0);
    config.refine_budget = section.get_int("refine_budget", config.refine_budget);
    config.fit_options.tol = section.get_double("tol", config.fit_options.tol);
    config.fit_options.max_iter =
        static_cast<int>(section.get_int("max_iter", config.fit_options.max_iter));
    if (section.has("beta") || section.has("nu") || section.has("zeta")) {
        GnarParams params = scenario_params(config.scenario, config.g0);
        const auto beta = section.get_doubles("beta");
        const auto nu = section.get_doubles("nu");
        const auto zeta = section.get_doubles("zeta");
        if (!beta.empty()) {
            if (static_cast<int>(beta.size()) != config.g0 * config.g0)
                throw std::invalid_argument("config: beta needs g0*g0 entries");
            for (int g = 0; g < config.g0; ++g)
                for (int h = 0; h < config.g0; ++h) params.beta(g, h) = beta[g * config.g0 + h];
        }
        if (!nu.empty()) {
            if (static_cast<int>(nu.size()) != config.g0)
                throw std::invalid_argument("config: nu needs g0 entries");
            for (int g = 0; g < config.g0; ++g) params.nu[g] = nu[g];
        }
        if (!zeta.empty()) {
            if (static_cast<int>(zeta.size()) != config.g0 * config.p)
                throw std::invalid_argument("config: zeta needs g0*p entries");
            for (int g = 0; g < config.g0; ++g)
                for (int j = 0; j < config.p; ++j) params.zeta(g, j) = zeta[g * config.p + j];
        }
        config.true_params = params;
        config.custom_params = true;
    }
    config.resolve();
    return config;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct ReplicationOutcome {
    bool ok = false;
    std::vector<MetricsRow> rows;  // one per G
    int g_hat = 0;
    bool has_estimated_coverage = false;
    CoverageIndicators estimated_coverage;
    PermMatchedRmse oracle_rmse;
    bool has_oracle = false;
    CoverageIndicators oracle_coverage;
    double oracle_rho = 0.0;
    NodeAveragedRmse oracle_all;
};

double family_mean(const Eigen::MatrixXd& indicators) {
    double sum = 0.0;
    long count = 0;
    for (int r = 0; r < indicators.rows(); ++r)
        for (int c = 0; c < indicators.cols(); ++c) {
            if (std::isnan(indicators(r, c))) continue;
            sum += indicators(r, c);
            ++count;
        }
    return count > 0 ? sum / count : kNan;
}

ReplicationOutcome run_replication(const ScenarioConfig& config, int b) {
    const std::uint64_t base = derive_seed(config.seed, static_cast<std::uint64_t>(b));
    ReplicationOutcome out;

    const Network net = config.network == "sbm"
                            ? gen_sbm(config.n, config.resolved_communities(), derive_seed(base, 0))
                            : gen_powerlaw(config.n, derive_seed(base, 0));
    const WeightMatrix w = row_normalize(net);

    Rng mem_rng(derive_seed(base, 1));
    Membership truth(config.n);
    for (int i = 0; i < config.n; ++i) truth[i] = mem_rng.categorical(config.pi);

    Rng z_rng(derive_seed(base, 2));
    Eigen::MatrixXd z(config.n, config.p);
    for (int i = 0; i < config.n; ++i)
        for (int j = 0; j < config.p; ++j) z(i, j) = z_rng.normal();

    const Panel panel = simulate(config.true_params, truth, w, z, config.horizon, config.burn_in,
                                 {config.sigma}, derive_seed(base, 3));

    double lambda = config.lambda;
    if (lambda < 0.0) lambda = default_lambda(config.n, config.horizon, diagnostics(net, w));

    std::vector<double> gics;
    for (int g : config.g_grid) {
        PipelineOptions options;
        options.fit = config.fit_options;
        options.fit.threads = 1;  // replications parallelize one level up
        options.restarts = config.restarts;
        options.refine_budget = config.refine_budget;
        options.seed = derive_seed(base, 100 + static_cast<std::uint64_t>(g));
        const PipelineFit pipeline = run_pipeline(panel, w, g, options);

        MetricsRow row;
        row.scenario = config.scenario;
        row.network = config.network;
        row.n = config.n;
        row.horizon = config.horizon;
        row.g = g;
        row.replication = b;
        row.rho_hat = membership_error(pipeline.refined.membership, g, truth, config.g0);
        const NodeAveragedRmse all =
            rmse_all(pipeline.refined.params, pipeline.refined.membership, config.true_params,
                     truth, w);
        row.rmse_beta_all = all.beta_all;
        row.rmse_nu_all = all.nu_all;
        row.rmse_zeta_all = all.zeta_all;
        row.rmse_beta = row.rmse_nu = row.rmse_zeta = kNan;
        row.cover_beta = row.cover_nu = row.cover_zeta = kNan;
        if (g == config.g0) {
            const PermMatchedRmse matched =
                rmse_perm(pipeline.refined.params, config.true_params);
            row.rmse_beta = matched.beta;
            row.rmse_nu = matched.nu;
            row.rmse_zeta = matched.zeta;
            const InferenceResult inference =
                confidence_intervals(pipeline.refined, panel, w, config.ci_level);
            out.estimated_coverage =
                coverage_indicators(inference, matched.perm, config.true_params);
            out.has_estimated_coverage = true;
            row.cover_beta = family_mean(out.estimated_coverage.beta);
            row.cover_nu = family_mean(out.estimated_coverage.nu);
            row.cover_zeta = family_mean(out.estimated_coverage.zeta);
        }
        out.rows.push_back(std::move(row));
        gics.push_back(config.sigma > 0.0 ? gic(pipeline.fit, lambda) : kNan);
    }

    out.g_hat = 0;
    if (!gics.empty() && !std::isnan(gics.front())) {
        int best = 0;
        for (std::size_t k = 1; k < gics.size(); ++k)
            if (gics[k] < gics[best]) best = static_cast<int>(k);
        out.g_hat = config.g_grid[best];
    }
    for (auto& row : out.rows) row.g_hat = out.g_hat;

    // Oracle estimator: closed-form solve at the true memberships.
    const FitResult oracle = solve_at(panel, w, config.g0, truth);
    out.oracle_rmse = rmse_perm(oracle.params, config.true_params);
    out.oracle_rho = membership_error(oracle.membership, config.g0, truth, config.g0);
    out.oracle_all = rmse_all(oracle.params, oracle.membership, config.true_params, truth, w);
    const InferenceResult oracle_inference =
        confidence_intervals(oracle, panel, w, config.ci_level);
    out.oracle_coverage =
        coverage_indicators(oracle_inference, out.oracle_rmse.perm, config.true_params);
    out.has_oracle = true;

    out.ok = true;
    return out;
}

double mean_of(const std::vector<double>& values) {
    double sum = 0.0;
    long count = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
    }
    return count > 0 ? sum / count : kNan;
}

}  // namespace

CampaignResult run_campaign(const ScenarioConfig& raw_config, int threads) {
    ScenarioConfig config = raw_config;
    config.resolve();

    std::vector<ReplicationOutcome> outcomes(config.replications);
    parallel_for(config.replications, threads, [&](int b) {
        try {
            outcomes[b] = run_replication(config, b);
        } catch (const std::exception&) {
            outcomes[b].ok = false;
        }
    });

    CampaignResult result;
    for (int b = 0; b < config.replications; ++b) {
        if (!outcomes[b].ok) {
            ++result.failures;
            continue;
        }
        result.selected.push_back(outcomes[b].g_hat);
        if (outcomes[b].has_estimated_coverage)
            result.coverage.push_back(outcomes[b].estimated_coverage);
        if (outcomes[b].has_oracle)
            result.oracle_coverage.push_back(outcomes[b].oracle_coverage);
    }
    for (int g : config.g_grid)
        for (int b = 0; b < config.replications; ++b) {
            if (!outcomes[b].ok) continue;
            for (const auto& row : outcomes[b].rows)
                if (row.g == g) result.rows.push_back(row);
        }

    for (int g : config.g_grid) {
        CampaignSummary s;
        s.g = g;
        std::vector<double> rho, rb, rn, rz, ab, an, az;
        for (const auto& row : result.rows) {
            if (row.g != g) continue;
            rho.push_back(row.rho_hat);
            rb.push_back(row.rmse_beta);
            rn.push_back(row.rmse_nu);
            rz.push_back(row.rmse_zeta);
            ab.push_back(row.rmse_beta_all);
            an.push_back(row.rmse_nu_all);
            az.push_back(row.rmse_zeta_all);
        }
        s.rho_hat = mean_of(rho);
        s.rmse_beta = mean_of(rb);
        s.rmse_nu = mean_of(rn);
        s.rmse_zeta = mean_of(rz);
        s.rmse_beta_all = mean_of(ab);
        s.rmse_nu_all = mean_of(an);
        s.rmse_zeta_all = mean_of(az);
        if (g == config.g0 && !result.coverage.empty()) {
            const CoverageError ae = coverage_error(result.coverage, config.ci_level);
            const CoverageError cov = mean_coverage(result.coverage);
            s.ae_cp_beta = ae.beta;
            s.ae_cp_nu = ae.nu;
            s.ae_cp_zeta = ae.zeta;
            s.cover_beta = cov.beta;
            s.cover_nu = cov.nu;
            s.cover_zeta = cov.zeta;
        } else {
            s.ae_cp_beta = s.ae_cp_nu = s.ae_cp_zeta = kNan;
            s.cover_beta = s.cover_nu = s.cover_zeta = kNan;
        }
        s.msr = result.selected.empty() ? kNan : msr(result.selected, g);
        result.summary.push_back(s);
    }

    // Oracle aggregate (G = G0 only).
    {
        CampaignSummary s;
        s.g = config.g0;
        std::vector<double> rho, rb, rn, rz, ab, an, az;
        for (int b = 0; b < config.replications; ++b) {
            if (!outcomes[b].ok || !outcomes[b].has_oracle) continue;
            rho.push_back(outcomes[b].oracle_rho);
            rb.push_back(outcomes[b].oracle_rmse.beta);
            rn.push_back(outcomes[b].oracle_rmse.nu);
            rz.push_back(outcomes[b].oracle_rmse.zeta);
            ab.push_back(outcomes[b].oracle_all.beta_all);
            an.push_back(outcomes[b].oracle_all.nu_all);
            az.push_back(outcomes[b].oracle_all.zeta_all);
        }
        s.rho_hat = mean_of(rho);
        s.rmse_beta = mean_of(rb);
        s.rmse_nu = mean_of(rn);
        s.rmse_zeta = mean_of(rz);
        s.rmse_beta_all = mean_of(ab);
        s.rmse_nu_all = mean_of(an);
        s.rmse_zeta_all = mean_of(az);
        if (!result.oracle_coverage.empty()) {
            const CoverageError ae = coverage_error(result.oracle_coverage, config.ci_level);
            const CoverageError cov = mean_coverage(result.oracle_coverage);
            s.ae_cp_beta = ae.beta;
            s.ae_cp_nu = ae.nu;
            s.ae_cp_zeta = ae.zeta;
            s.cover_beta = cov.beta;
            s.cover_nu = cov.nu;
            s.cover_zeta = cov.zeta;
        }
        s.msr = kNan;
        result.oracle = s;
    }
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out << "scenario,network,N,T,G,b,rho_hat,rmse_beta,rmse_nu,rmse_zeta,rmse_beta_all,"
           "rmse_nu_all,rmse_zeta_all,ae_cp_beta,ae_cp_nu,ae_cp_zeta,g_hat\n";
    for (const auto& r : rows) {
        out << r.scenario << "," << r.network << "," << r.n << "," << r.horizon << "," << r.g
            << "," << r.replication << "," << format_double(r.rho_hat) << ","
            << format_double(r.rmse_beta) << "," << format_double(r.rmse_nu) << ","
            << format_double(r.rmse_zeta) << "," << format_double(r.rmse_beta_all) << ","
            << format_double(r.rmse_nu_all) << "," << format_double(r.rmse_zeta_all) << ","
            << format_double(r.cover_beta) << "," << format_double(r.cover_nu) << ","
            << format_double(r.cover_zeta) << "," << r.g_hat << "\n";
    }
}

void write_summary_csv(const std::string& path, const ScenarioConfig& config,
                       const CampaignResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
    out << "scenario,network,N,T,G,kind,rho_hat,rmse_beta,rmse_nu,rmse_zeta,rmse_beta_all,"
           "rmse_nu_all,rmse_zeta_all,ae_cp_beta,ae_cp_nu,ae_cp_zeta,cover_beta,cover_nu,"
           "cover_zeta,msr,failures\n";
    auto line = [&](const CampaignSummary& s, const std::string& kind) {
        out << config.scenario << "," << config.network << "," << config.n << ","
            << config.horizon << "," << s.g << "," << kind << "," << format_double(s.rho_hat)
            << "," << format_double(s.rmse_beta) << "," << format_double(s.rmse_nu) << ","
            << format_double(s.rmse_zeta) << "," << format_double(s.rmse_beta_all) << ","
            << format_double(s.rmse_nu_all) << "," << format_double(s.rmse_zeta_all) << ","
            << format_double(s.ae_cp_beta) << "," << format_double(s.ae_cp_nu) << ","
            << format_double(s.ae_cp_zeta) << "," << format_double(s.cover_beta) << ","
            << format_double(s.cover_nu) << "," << format_double(s.cover_zeta) << ","
            << format_double(s.msr) << "," << result.failures << "\n";
    };
    line(result.oracle, "oracle");
    for (const auto& s : result.summary) line(s, "estimated");
}

void write_config_echo(const std::string& path, const ScenarioConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_config_echo: cannot open " + path);
    out << "# resolved configuration\n";
    out << "name = " << config.name << "\n";
    out << "scenario = " << config.scenario << "\n";
    out << "network = " << config.network << "\n";
    out << "n = " << config.n << "\n";
    out << "t = " << config.horizon << "\n";
    out << "g0 = " << config.g0 << "\n";
    out << "p = " << config.p << "\n";
    out << "communities = " << config.resolved_communities() << "\n";
    out << "pi = ";
    for (std::size_t k = 0; k < config.pi.size(); ++k)
        out << (k ? "," : "") << format_double(config.pi[k]);
    out << "\n";
    out << "sigma = " << format_double(config.sigma) << "\n";
    out << "replications = " << config.replications << "\n";
    out << "seed = " << config.seed << "\n";
    out << "g_grid = ";
    for (std::size_t k = 0; k < config.g_grid.size(); ++k)
        out << (k ? "," : "") << config.g_grid[k];
    out << "\n";
    out << "restarts = " << config.restarts << "\n";
    out << "burn_in = " << config.burn_in << "\n";
    out << "ci_level = " << format_double(config.ci_level) << "\n";
    out << "lambda = " << (config.lambda < 0 ? "auto" : format_double(config.lambda)) << "\n";
    out << "refine_budget = " << config.refine_budget << "\n";
    out << "tol = " << format_double(config.fit_options.tol) << "\n";
    out << "max_iter = " << config.fit_options.max_iter << "\n";
    out << "beta = ";
    for (int g = 0; g < config.g0; ++g)
        for (int h = 0; h < config.g0; ++h)
            out << ((g + h) ? "," : "") << format_double(config.true_params.beta(g, h));
    out << "\n";
    out << "nu = ";
    for (int g = 0; g < config.g0; ++g)
        out << (g ? "," : "") << format_double(config.true_params.nu[g]);
    out << "\n";
    out << "zeta = ";
    for (int g = 0; g < config.g0; ++g)
        for (int j = 0; j < config.p; ++j)
            out << ((g + j) ? "," : "") << format_double(config.true_params.zeta(g, j));
    out << "\n";
}

CampaignResult run_campaign_to_dir(const ScenarioConfig& raw_config, const std::string& out_dir,
                                   int threads) {
    ScenarioConfig config = raw_config;
    config.resolve();
    std::filesystem::create_directories(out_dir);
    CampaignResult result = run_campaign(config, threads);
    const std::string prefix = out_dir + "/" + config.name;
    write_metrics_csv(prefix + "_metrics.csv", result.rows);
    write_summary_csv(prefix + "_summary.csv", config, result);
    write_config_echo(prefix + "_config.txt", config);
    return result;
}

}  // namespace gnar
