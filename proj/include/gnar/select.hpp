#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gnar/estimate.hpp"
#include "gnar/refine.hpp"

namespace gnar {

/// Penalty weight lambda_NT = N^{1/10} T^{-1/2} / (2 min{10, n_0.9}).
double default_lambda(int n_nodes, int horizon, double degree_q90);
double default_lambda(int n_nodes, int horizon, const NetDiagnostics& diag);

/// GIC(G) = log Q + lambda * G. Throws on a zero loss (exact fit): the
/// criterion needs a positive noise floor.
double gic(const FitResult& fit, double lambda);

struct PipelineOptions {
    FitOptions fit;
    int restarts = 100;
    std::uint64_t seed = 1;
    long refine_budget = 4096;
    bool run_refinement = true;
};

/// One full estimation pass for a fixed G: initial pool, alternating fit,
/// refinement, and a closed-form refit at the refined labels.
struct PipelineFit {
    FitResult fit;                 // converged alternating fit
    RefinementReport refinement;
    FitResult refined;             // refit at the refined labels
};

PipelineFit run_pipeline(const Panel& panel, const WeightMatrix& w, int n_groups,
                         const PipelineOptions& options);

struct SelectionResult {
    std::vector<int> g_grid;          // sorted ascending
    std::vector<double> gic_values;
    std::vector<PipelineFit> fits;
    int g_hat = 0;
    double lambda = 0.0;
};

/**
 * Fit the full pipeline for every candidate G and pick the GIC minimizer
 * (ties to the smaller G). The criterion is evaluated at the converged
 * alternating-fit loss for each G.
 */
SelectionResult select_g(const Panel& panel, const WeightMatrix& w, std::vector<int> g_grid,
                         const PipelineOptions& options,
                         std::optional<double> lambda = std::nullopt);

}  // namespace gnar
