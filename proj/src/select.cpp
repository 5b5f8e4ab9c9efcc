#include "gnar/select.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gnar/init.hpp"
#include "gnar/rng.hpp"

namespace gnar {

double default_lambda(int n_nodes, int horizon, double degree_q90) {
    if (n_nodes < 1 || horizon < 1)
        throw std::invalid_argument("default_lambda: need positive N and T");
    const double divisor = 2.0 * std::min(10.0, degree_q90);
    return std::pow(static_cast<double>(n_nodes), 0.1) /
           std::sqrt(static_cast<double>(horizon)) / divisor;
}

double default_lambda(int n_nodes, int horizon, const NetDiagnostics& diag) {
    return default_lambda(n_nodes, horizon, diag.degree_q90);
}

double gic(const FitResult& fit, double lambda) {
    if (!(fit.loss > 0.0))
        throw std::domain_error(
            "gic: loss is zero (exact fit); the criterion needs a positive noise floor");
    return std::log(fit.loss) + lambda * fit.params.n_groups;
}

PipelineFit run_pipeline(const Panel& panel, const WeightMatrix& w, int n_groups,
                         const PipelineOptions& options) {
    PipelineFit out;
    const auto pool =
        init_pool(panel, w, n_groups, options.restarts, options.seed, options.fit.threads);
    out.fit = fit(panel, w, n_groups, pool, options.fit);
    if (options.run_refinement) {
        out.refinement =
            refine(out.fit, panel, w, std::nullopt, options.refine_budget, options.fit.threads);
        if (out.refinement.switched.empty())
            out.refined = out.fit;
        else
            out.refined = solve_at(panel, w, n_groups, out.refinement.labels_after);
    } else {
        out.refined = out.fit;
    }
    return out;
}

SelectionResult select_g(const Panel& panel, const WeightMatrix& w, std::vector<int> g_grid,
                         const PipelineOptions& options, std::optional<double> lambda) {
    if (g_grid.empty()) throw std::invalid_argument("select_g: empty grid");
    std::sort(g_grid.begin(), g_grid.end());
    g_grid.erase(std::unique(g_grid.begin(), g_grid.end()), g_grid.end());

    SelectionResult result;
    result.g_grid = g_grid;
    if (lambda) {
        result.lambda = *lambda;
    } else {
        std::vector<int> degrees(w.n_nodes);
        for (int i = 0; i < w.n_nodes; ++i) degrees[i] = w.out_degree(i);
        result.lambda = default_lambda(panel.n_nodes(), panel.horizon(),
                                       degree_quantile(degrees, 0.9));
    }

    result.fits.reserve(g_grid.size());
    for (int g : g_grid) {
        PipelineOptions per_g = options;
        per_g.seed = derive_seed(options.seed, 0x6000 + static_cast<std::uint64_t>(g));
        result.fits.push_back(run_pipeline(panel, w, g, per_g));
        result.gic_values.push_back(gic(result.fits.back().fit, result.lambda));
    }
    int best = 0;
    for (std::size_t k = 1; k < g_grid.size(); ++k)
        if (result.gic_values[k] < result.gic_values[best]) best = static_cast<int>(k);
    result.g_hat = g_grid[best];
    return result;
}

}  // namespace gnar
