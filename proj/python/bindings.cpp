#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gnar/campaign.hpp"
#include "gnar/init.hpp"
#include "gnar/io.hpp"
#include "gnar/metrics.hpp"
#include "gnar/select.hpp"

namespace py = pybind11;
using namespace gnar;

namespace {

WeightMatrix weights_from_dense(const Eigen::MatrixXd& dense) {
    WeightMatrix w;
    w.n_nodes = static_cast<int>(dense.rows());
    w.neighbors.resize(w.n_nodes);
    w.values.resize(w.n_nodes);
    for (int i = 0; i < w.n_nodes; ++i)
        for (int j = 0; j < dense.cols(); ++j)
            if (dense(i, j) != 0.0) {
                w.neighbors[i].push_back(j);
                w.values[i].push_back(dense(i, j));
            }
    return w;
}

Panel make_panel(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
    Panel panel;
    panel.y = y;
    panel.z = z;
    panel.validate();
    return panel;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Grouped network autoregression: estimation, selection and inference";

    py::class_<Network>(m, "Network")
        .def_readonly("n_nodes", &Network::n_nodes)
        .def_readonly("followees", &Network::followees)
        .def_readonly("out_degree", &Network::out_degree)
        .def("dense_adjacency", &Network::dense_adjacency)
        .def("has_edge", &Network::has_edge);

    py::class_<WeightMatrix>(m, "WeightMatrix")
        .def_readonly("n_nodes", &WeightMatrix::n_nodes)
        .def("dense", &WeightMatrix::dense);

    py::class_<NetDiagnostics>(m, "NetDiagnostics")
        .def_readonly("stationary_dist", &NetDiagnostics::stationary_dist)
        .def_readonly("r_p", &NetDiagnostics::r_p)
        .def_readonly("sigma_max_sym", &NetDiagnostics::sigma_max_sym)
        .def_readonly("mean_degree", &NetDiagnostics::mean_degree)
        .def_readonly("max_degree", &NetDiagnostics::max_degree)
        .def_readonly("degree_q90", &NetDiagnostics::degree_q90)
        .def_readonly("stationary_converged", &NetDiagnostics::stationary_converged);

    m.def("make_network", &make_network, py::arg("n_nodes"), py::arg("edges"));
    m.def("gen_sbm", &gen_sbm, py::arg("n_nodes"), py::arg("communities"), py::arg("seed"));
    m.def("gen_powerlaw", &gen_powerlaw, py::arg("n_nodes"), py::arg("seed"));
    m.def("row_normalize", &row_normalize, py::arg("network"));
    m.def("weights_from_dense", &weights_from_dense, py::arg("dense"),
          "Build a weight matrix from a dense array (rows need not be uniform)");
    m.def("diagnostics", &diagnostics, py::arg("network"), py::arg("weights"));
    m.def("load_edge_csv", &load_edge_csv, py::arg("path"), py::arg("n_nodes") = 0);
    m.def("save_edge_csv", &save_edge_csv, py::arg("path"), py::arg("network"));

    py::class_<GnarParams>(m, "GnarParams")
        .def(py::init([](const Eigen::MatrixXd& beta, const Eigen::VectorXd& nu,
                         const Eigen::MatrixXd& zeta) {
                 GnarParams p;
                 p.n_groups = static_cast<int>(beta.rows());
                 p.p = static_cast<int>(zeta.cols());
                 p.beta = beta;
                 p.nu = nu;
                 p.zeta = zeta;
                 p.validate();
                 return p;
             }),
             py::arg("beta"), py::arg("nu"), py::arg("zeta"))
        .def_readonly("n_groups", &GnarParams::n_groups)
        .def_readonly("p", &GnarParams::p)
        .def_readonly("beta", &GnarParams::beta)
        .def_readonly("nu", &GnarParams::nu)
        .def_readonly("zeta", &GnarParams::zeta);

    m.def("scenario_params", &scenario_params, py::arg("scenario"), py::arg("g0"));
    m.def("transition_matrix", &transition_matrix, py::arg("params"), py::arg("membership"),
          py::arg("weights"));
    m.def(
        "check_stationarity",
        [](const GnarParams& params) {
            const auto check = check_stationarity(params);
            return py::make_tuple(check.stationary, check.margin);
        },
        py::arg("params"));
    m.def(
        "simulate",
        [](const GnarParams& params, const Membership& mem, const WeightMatrix& w,
           const Eigen::MatrixXd& z, int horizon, int burn_in, double sigma, std::uint64_t seed,
           bool allow_nonstationary) {
            return simulate(params, mem, w, z, horizon, burn_in, {sigma}, seed,
                            allow_nonstationary)
                .y;
        },
        py::arg("params"), py::arg("membership"), py::arg("weights"), py::arg("z"),
        py::arg("horizon"), py::arg("burn_in") = 200, py::arg("sigma") = 1.0, py::arg("seed") = 1,
        py::arg("allow_nonstationary") = false);

    m.def(
        "loss",
        [](const GnarParams& params, const Membership& mem, const Eigen::MatrixXd& y,
           const Eigen::MatrixXd& z, const WeightMatrix& w) {
            std::vector<double> node_q;
            const double q = loss(params, mem, make_panel(y, z), w, &node_q);
            return py::make_tuple(q, node_q);
        },
        py::arg("params"), py::arg("membership"), py::arg("y"), py::arg("z"), py::arg("weights"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("params", &FitResult::params)
        .def_readonly("membership", &FitResult::membership)
        .def_readonly("loss", &FitResult::loss)
        .def_readonly("loss_trace", &FitResult::loss_trace)
        .def_readonly("node_loss", &FitResult::node_loss)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("n_iterations", &FitResult::n_iterations)
        .def_readonly("init_index", &FitResult::init_index);

    m.def(
        "init_pool",
        [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const WeightMatrix& w, int n_groups,
           int restarts, std::uint64_t seed) {
            return init_pool(make_panel(y, z), w, n_groups, restarts, seed);
        },
        py::arg("y"), py::arg("z"), py::arg("weights"), py::arg("n_groups"),
        py::arg("restarts") = 100, py::arg("seed") = 1);
    m.def(
        "fit",
        [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const WeightMatrix& w, int n_groups,
           const std::vector<Membership>& pool, double tol, int max_iter, int threads) {
            FitOptions options{tol, max_iter, threads};
            return fit(make_panel(y, z), w, n_groups, pool, options);
        },
        py::arg("y"), py::arg("z"), py::arg("weights"), py::arg("n_groups"), py::arg("init_pool"),
        py::arg("tol") = 1e-8, py::arg("max_iter") = 100, py::arg("threads") = 0);
    m.def(
        "solve_at",
        [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const WeightMatrix& w, int n_groups,
           const Membership& mem) { return solve_at(make_panel(y, z), w, n_groups, mem); },
        py::arg("y"), py::arg("z"), py::arg("weights"), py::arg("n_groups"), py::arg("membership"));

    py::class_<RefinementReport>(m, "RefinementReport")
        .def_readonly("labels_before", &RefinementReport::labels_before)
        .def_readonly("labels_after", &RefinementReport::labels_after)
        .def_readonly("switched", &RefinementReport::switched)
        .def_readonly("delta_threshold", &RefinementReport::delta_threshold)
        .def_readonly("profile_losses", &RefinementReport::profile_losses);

    m.def(
        "refine",
        [](const FitResult& fit, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
           const WeightMatrix& w, std::optional<double> threshold, long budget) {
            return refine(fit, make_panel(y, z), w, threshold, budget);
        },
        py::arg("fit"), py::arg("y"), py::arg("z"), py::arg("weights"),
        py::arg("threshold") = std::nullopt, py::arg("budget") = 4096);
    m.def(
        "profile_loss",
        [](int node, int group, const FitResult& fit, const Eigen::MatrixXd& y,
           const Eigen::MatrixXd& z, const WeightMatrix& w, long budget) {
            return profile_loss(node, group, fit, make_panel(y, z), w, budget);
        },
        py::arg("node"), py::arg("group"), py::arg("fit"), py::arg("y"), py::arg("z"),
        py::arg("weights"), py::arg("budget") = 4096);

    m.def("default_lambda",
          py::overload_cast<int, int, double>(&default_lambda), py::arg("n_nodes"),
          py::arg("horizon"), py::arg("degree_q90"));
    m.def("gic", &gic, py::arg("fit"), py::arg("lambda_"));

    py::class_<PipelineFit>(m, "PipelineFit")
        .def_readonly("fit", &PipelineFit::fit)
        .def_readonly("refinement", &PipelineFit::refinement)
        .def_readonly("refined", &PipelineFit::refined);

    py::class_<SelectionResult>(m, "SelectionResult")
        .def_readonly("g_grid", &SelectionResult::g_grid)
        .def_readonly("gic_values", &SelectionResult::gic_values)
        .def_readonly("fits", &SelectionResult::fits)
        .def_readonly("g_hat", &SelectionResult::g_hat)
        .def_readonly("lambda_", &SelectionResult::lambda);

    m.def(
        "run_pipeline",
        [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const WeightMatrix& w, int n_groups,
           int restarts, std::uint64_t seed, int threads) {
            PipelineOptions options;
            options.restarts = restarts;
            options.seed = seed;
            options.fit.threads = threads;
            return run_pipeline(make_panel(y, z), w, n_groups, options);
        },
        py::arg("y"), py::arg("z"), py::arg("weights"), py::arg("n_groups"),
        py::arg("restarts") = 100, py::arg("seed") = 1, py::arg("threads") = 0);
    m.def(
        "select_g",
        [](const Eigen::MatrixXd& y, const Eigen::MatrixXd& z, const WeightMatrix& w,
           const std::vector<int>& grid, int restarts, std::uint64_t seed,
           std::optional<double> lambda, int threads) {
            PipelineOptions options;
            options.restarts = restarts;
            options.seed = seed;
            options.fit.threads = threads;
            return select_g(make_panel(y, z), w, grid, options, lambda);
        },
        py::arg("y"), py::arg("z"), py::arg("weights"), py::arg("g_grid"),
        py::arg("restarts") = 100, py::arg("seed") = 1, py::arg("lambda_") = std::nullopt,
        py::arg("threads") = 0);

    py::class_<GroupInference>(m, "GroupInference")
        .def_readonly("estimate", &GroupInference::estimate)
        .def_readonly("se", &GroupInference::se)
        .def_readonly("ci_lo", &GroupInference::ci_lo)
        .def_readonly("ci_hi", &GroupInference::ci_hi)
        .def_readonly("p_value", &GroupInference::p_value)
        .def_readonly("n_members", &GroupInference::n_members)
        .def_readonly("singular", &GroupInference::singular);

    py::class_<InferenceResult>(m, "InferenceResult")
        .def_readonly("groups", &InferenceResult::groups)
        .def_readonly("sigma2_hat", &InferenceResult::sigma2_hat)
        .def_readonly("level", &InferenceResult::level);

    m.def(
        "confidence_intervals",
        [](const FitResult& fit, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
           const WeightMatrix& w, double level) {
            return confidence_intervals(fit, make_panel(y, z), w, level);
        },
        py::arg("fit"), py::arg("y"), py::arg("z"), py::arg("weights"), py::arg("level") = 0.95);
    m.def(
        "residual_variance",
        [](const FitResult& fit, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
           const WeightMatrix& w) { return residual_variance(fit, make_panel(y, z), w); },
        py::arg("fit"), py::arg("y"), py::arg("z"), py::arg("weights"));

    m.def("majority_map", &majority_map, py::arg("est"), py::arg("n_groups_est"), py::arg("truth"),
          py::arg("n_groups_true"));
    m.def("membership_error", &membership_error, py::arg("est"), py::arg("n_groups_est"),
          py::arg("truth"), py::arg("n_groups_true"));
    m.def(
        "rmse_all",
        [](const GnarParams& est_params, const Membership& est_mem, const GnarParams& true_params,
           const Membership& true_mem, const WeightMatrix& w) {
            const auto r = rmse_all(est_params, est_mem, true_params, true_mem, w);
            return py::make_tuple(r.beta_all, r.nu_all, r.zeta_all);
        },
        py::arg("est_params"), py::arg("est_membership"), py::arg("true_params"),
        py::arg("true_membership"), py::arg("weights"));
    m.def(
        "rmse_perm",
        [](const GnarParams& est_params, const GnarParams& true_params) {
            const auto r = rmse_perm(est_params, true_params);
            return py::make_tuple(r.beta, r.nu, r.zeta, r.perm);
        },
        py::arg("est_params"), py::arg("true_params"));

    m.def(
        "preprocess_real",
        [](const Eigen::MatrixXd& counts, const Eigen::MatrixXd& covariates) {
            return preprocess_real(counts, covariates).y;
        },
        py::arg("counts"), py::arg("covariates"));

    m.def("kmeans",
          [](const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
              const auto r = kmeans(points, k, seed);
              return py::make_tuple(r.labels, r.centroids, r.inertia);
          },
          py::arg("points"), py::arg("k"), py::arg("seed") = 1);

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
