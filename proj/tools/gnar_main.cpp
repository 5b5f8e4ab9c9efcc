#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "gnar/campaign.hpp"
#include "gnar/init.hpp"
#include "gnar/io.hpp"
#include "gnar/rng.hpp"

namespace fs = std::filesystem;
using namespace gnar;

namespace {

struct DataArgs {
    std::string panel_path;
    std::string covariates_path;
    std::string edges_path;
    bool preprocess = false;
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--panel", args.panel_path, "panel CSV (node,t,y)")->required();
    cmd->add_option("--covariates", args.covariates_path, "covariates CSV (node,z1,...)")
        ->required();
    cmd->add_option("--edges", args.edges_path, "edge list CSV (from,to)")->required();
    cmd->add_flag("--preprocess", args.preprocess,
                  "treat the panel as raw counts: log(1+x), then center per time point");
}

struct LoadedData {
    Panel panel;
    Network net;
    WeightMatrix w;
    std::vector<std::string> covariate_names;
};

LoadedData load_data(const DataArgs& args) {
    LoadedData data;
    Eigen::MatrixXd y = load_panel_csv(args.panel_path);
    data.panel.z = load_covariates_csv(args.covariates_path, &data.covariate_names);
    if (args.preprocess) {
        data.panel = preprocess_real(y, data.panel.z);
    } else {
        data.panel.y = std::move(y);
    }
    data.panel.validate();
    data.net = load_edge_csv(args.edges_path, data.panel.n_nodes());
    data.w = row_normalize(data.net);
    return data;
}

ScenarioConfig config_from_file(const std::string& path, const std::string& section_name) {
    const auto sections = load_config(path);
    if (section_name.empty()) return config_from_section(sections.front());
    for (const auto& section : sections)
        if (section.name == section_name) return config_from_section(section);
    throw std::runtime_error("config: no section named " + section_name);
}

int cmd_simulate(const std::string& config_path, const std::string& section,
                 std::optional<std::uint64_t> seed, const std::string& out_dir) {
    ScenarioConfig config = config_from_file(config_path, section);
    if (seed) config.seed = *seed;
    fs::create_directories(out_dir);

    const std::uint64_t base = derive_seed(config.seed, 0);
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

    save_edge_csv(out_dir + "/edges.csv", net);
    save_panel_csv(out_dir + "/panel.csv", panel.y);
    save_covariates_csv(out_dir + "/covariates.csv", panel.z);
    save_membership_csv(out_dir + "/membership.csv", truth);
    save_params_json(out_dir + "/params.json", config.true_params);
    std::printf("wrote %s/{edges,panel,covariates,membership}.csv and params.json\n",
                out_dir.c_str());
    return 0;
}

int cmd_fit(const DataArgs& data_args, int n_groups, int restarts, std::uint64_t seed, int threads,
            const std::string& out_dir) {
    const LoadedData data = load_data(data_args);
    fs::create_directories(out_dir);
    PipelineOptions options;
    options.restarts = restarts;
    options.seed = seed;
    options.fit.threads = threads;
    const PipelineFit pipeline = run_pipeline(data.panel, data.w, n_groups, options);
    save_fit_json(out_dir + "/fit.json", pipeline.refined, seed, &pipeline.refinement);
    std::printf("loss=%s iterations=%d converged=%d switched=%zu -> %s/fit.json\n",
                format_double(pipeline.refined.loss).c_str(), pipeline.fit.n_iterations,
                pipeline.fit.converged ? 1 : 0, pipeline.refinement.switched.size(),
                out_dir.c_str());
    return 0;
}

int cmd_select(const DataArgs& data_args, const std::string& grid_text, double lambda,
               int restarts, std::uint64_t seed, int threads, const std::string& out_dir) {
    const LoadedData data = load_data(data_args);
    fs::create_directories(out_dir);
    PipelineOptions options;
    options.restarts = restarts;
    options.seed = seed;
    options.fit.threads = threads;
    std::optional<double> lambda_opt;
    if (lambda >= 0.0) lambda_opt = lambda;
    const SelectionResult result =
        select_g(data.panel, data.w, parse_grid(grid_text), options, lambda_opt);

    std::ofstream curve(out_dir + "/gic_curve.csv");
    curve << "G,gic,loss\n";
    for (std::size_t k = 0; k < result.g_grid.size(); ++k)
        curve << result.g_grid[k] << "," << format_double(result.gic_values[k]) << ","
              << format_double(result.fits[k].fit.loss) << "\n";
    for (std::size_t k = 0; k < result.g_grid.size(); ++k) {
        const auto& pipeline = result.fits[k];
        save_fit_json(out_dir + "/fit_g" + std::to_string(result.g_grid[k]) + ".json",
                      pipeline.refined, seed, &pipeline.refinement);
    }
    std::printf("lambda=%s g_hat=%d -> %s/gic_curve.csv\n", format_double(result.lambda).c_str(),
                result.g_hat, out_dir.c_str());
    return 0;
}

int cmd_infer(const DataArgs& data_args, const std::string& fit_path, double level,
              const std::string& out_dir) {
    const LoadedData data = load_data(data_args);
    fs::create_directories(out_dir);
    const FitResult fit = load_fit_json(fit_path);
    const InferenceResult inference = confidence_intervals(fit, data.panel, data.w, level);
    write_coefficient_csv(out_dir + "/coefficients.csv", inference, data.covariate_names);
    std::printf("sigma2_hat=%s -> %s/coefficients.csv\n",
                format_double(inference.sigma2_hat).c_str(), out_dir.c_str());
    return 0;
}

int cmd_eval(const DataArgs& data_args, const std::string& fit_path,
             const std::string& truth_params_path, const std::string& truth_membership_path,
             const std::string& out_dir) {
    const LoadedData data = load_data(data_args);
    fs::create_directories(out_dir);
    const FitResult fit = load_fit_json(fit_path);
    const GnarParams truth_params = load_params_json(truth_params_path);
    const Membership truth = load_membership_csv(truth_membership_path);

    MetricsRow row;
    row.network = "file";
    row.n = data.panel.n_nodes();
    row.horizon = data.panel.horizon();
    row.g = fit.params.n_groups;
    row.rho_hat =
        membership_error(fit.membership, fit.params.n_groups, truth, truth_params.n_groups);
    const NodeAveragedRmse all = rmse_all(fit.params, fit.membership, truth_params, truth, data.w);
    row.rmse_beta_all = all.beta_all;
    row.rmse_nu_all = all.nu_all;
    row.rmse_zeta_all = all.zeta_all;
    row.rmse_beta = row.rmse_nu = row.rmse_zeta = std::numeric_limits<double>::quiet_NaN();
    row.cover_beta = row.cover_nu = row.cover_zeta = std::numeric_limits<double>::quiet_NaN();
    if (fit.params.n_groups == truth_params.n_groups && truth_params.n_groups <= 8) {
        const PermMatchedRmse matched = rmse_perm(fit.params, truth_params);
        row.rmse_beta = matched.beta;
        row.rmse_nu = matched.nu;
        row.rmse_zeta = matched.zeta;
    }
    write_metrics_csv(out_dir + "/metrics.csv", {row});
    std::printf("rho_hat=%s rmse_beta=%s -> %s/metrics.csv\n", format_double(row.rho_hat).c_str(),
                format_double(row.rmse_beta).c_str(), out_dir.c_str());
    return 0;
}

int cmd_bench(const std::string& config_path, std::optional<std::uint64_t> seed, int threads,
              const std::string& out_dir, std::optional<int> restarts) {
    const auto sections = load_config(config_path);
    for (const auto& section : sections) {
        ScenarioConfig config = config_from_section(section);
        if (seed) config.seed = *seed;
        if (restarts) config.restarts = *restarts;
        const CampaignResult result = run_campaign_to_dir(config, out_dir, threads);
        std::printf("[%s] replications=%d failures=%d", config.name.c_str(), config.replications,
                    result.failures);
        for (const auto& s : result.summary)
            std::printf(" | G=%d rho=%s msr=%s", s.g, format_double(s.rho_hat).c_str(),
                        format_double(s.msr).c_str());
        std::printf("\n");
    }
    return 0;
}

int cmd_diag(const std::string& edges_path, int n_nodes) {
    const Network net = load_edge_csv(edges_path, n_nodes);
    const WeightMatrix w = row_normalize(net);
    const NetDiagnostics d = diagnostics(net, w);
    std::printf("nodes: %d\n", net.n_nodes);
    std::printf("mean out-degree: %s\n", format_double(d.mean_degree).c_str());
    std::printf("max out-degree: %d\n", d.max_degree);
    std::printf("out-degree q90: %s\n", format_double(d.degree_q90).c_str());
    std::printf("r_p: %s\n", format_double(d.r_p).c_str());
    std::printf("sigma_max(W+W'): %s\n", format_double(d.sigma_max_sym).c_str());
    std::printf("stationary distribution converged: %s (%d sweeps)\n",
                d.stationary_converged ? "yes" : "no", d.stationary_iterations);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grouped network autoregression: simulation, estimation, selection, inference"};
    app.require_subcommand(1);

    std::string config_path, section, out_dir = "out";
    std::uint64_t seed_value = 0;
    bool seed_set = false;
    int threads = 0;

    auto* sim = app.add_subcommand("simulate", "generate one synthetic dataset from a config");
    sim->add_option("--config", config_path, "config file")->required();
    sim->add_option("--section", section, "config section (default: first)");
    sim->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sim->add_option("--out-dir", out_dir, "output directory");

    DataArgs fit_data;
    int fit_groups = 2, fit_restarts = 100;
    std::uint64_t fit_seed = 1;
    auto* fit_cmd = app.add_subcommand("fit", "estimate parameters and memberships for one G");
    add_data_options(fit_cmd, fit_data);
    fit_cmd->add_option("--groups", fit_groups, "number of groups")->required();
    fit_cmd->add_option("--restarts", fit_restarts, "initializer restarts");
    fit_cmd->add_option("--seed", fit_seed, "initializer seed");
    fit_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    fit_cmd->add_option("--out-dir", out_dir, "output directory");

    DataArgs select_data;
    std::string grid_text = "1:5";
    double lambda = -1.0;
    int select_restarts = 100;
    std::uint64_t select_seed = 1;
    auto* select_cmd = app.add_subcommand("select", "choose the number of groups by GIC");
    add_data_options(select_cmd, select_data);
    select_cmd->add_option("--g-grid", grid_text, "candidate G values, e.g. 1:10 or 2,3,4");
    select_cmd->add_option("--lambda", lambda, "GIC penalty (default: data-driven rule)");
    select_cmd->add_option("--restarts", select_restarts, "initializer restarts");
    select_cmd->add_option("--seed", select_seed, "initializer seed");
    select_cmd->add_option("--threads", threads, "worker threads");
    select_cmd->add_option("--out-dir", out_dir, "output directory");

    DataArgs infer_data;
    std::string fit_path;
    double level = 0.95;
    auto* infer_cmd = app.add_subcommand("infer", "coefficient table with normal intervals");
    add_data_options(infer_cmd, infer_data);
    infer_cmd->add_option("--fit", fit_path, "fit JSON produced by fit/select")->required();
    infer_cmd->add_option("--level", level, "confidence level");
    infer_cmd->add_option("--out-dir", out_dir, "output directory");

    DataArgs eval_data;
    std::string eval_fit_path, truth_params_path, truth_membership_path;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a fit against known truth");
    add_data_options(eval_cmd, eval_data);
    eval_cmd->add_option("--fit", eval_fit_path, "fit JSON")->required();
    eval_cmd->add_option("--truth-params", truth_params_path, "true parameter JSON")->required();
    eval_cmd->add_option("--truth-membership", truth_membership_path, "true membership CSV")
        ->required();
    eval_cmd->add_option("--out-dir", out_dir, "output directory");

    std::string bench_config;
    std::optional<int> bench_restarts;
    int bench_restarts_value = 0;
    auto* bench_cmd = app.add_subcommand("bench", "run simulation campaigns from a config");
    bench_cmd->add_option("--config", bench_config, "config file")->required();
    bench_cmd->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    bench_cmd->add_option("--threads", threads, "worker threads");
    bench_cmd->add_option("--out-dir", out_dir, "output directory");
    bench_cmd->add_option("--restarts", bench_restarts_value, "override initializer restarts")
        ->each([&](const std::string&) { bench_restarts = bench_restarts_value; });

    std::string diag_edges;
    int diag_nodes = 0;
    auto* diag_cmd = app.add_subcommand("diag", "network diagnostics from an edge list");
    diag_cmd->add_option("--edges", diag_edges, "edge list CSV")->required();
    diag_cmd->add_option("--nodes", diag_nodes, "node count (default: max id)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, section,
                                seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                                out_dir);
        if (fit_cmd->parsed())
            return cmd_fit(fit_data, fit_groups, fit_restarts, fit_seed, threads, out_dir);
        if (select_cmd->parsed())
            return cmd_select(select_data, grid_text, lambda, select_restarts, select_seed,
                              threads, out_dir);
        if (infer_cmd->parsed()) return cmd_infer(infer_data, fit_path, level, out_dir);
        if (eval_cmd->parsed())
            return cmd_eval(eval_data, eval_fit_path, truth_params_path, truth_membership_path,
                            out_dir);
        if (bench_cmd->parsed())
            return cmd_bench(bench_config,
                             seed_set ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                             threads, out_dir, bench_restarts);
        if (diag_cmd->parsed()) return cmd_diag(diag_edges, diag_nodes);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
