#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gnar/estimate.hpp"

namespace gnar {

struct RefinementReport {
    Membership labels_before;
    Membership labels_after;
    std::vector<int> switched;        // nodes whose label changed
    double delta_threshold = 0.0;
    Eigen::MatrixXd profile_losses;   // N x G, entry (i, g) = Q_i^P(g)
};

/**
 * Node-specific profile loss Q_i^P(g): the node loss with momentum and
 * fixed effects taken from candidate group g, minimized over every
 * network-effect vector reachable by re-labeling the node itself and all
 * of its followees. Minimization is exact enumeration while
 * G^(n_i+1) <= budget; otherwise the own label is enumerated and the
 * followee labels are optimized by cyclic coordinate descent (single and
 * pair moves) from the fitted labels plus random draws.
 */
double profile_loss(int node, int group, const FitResult& fit, const Panel& panel,
                    const WeightMatrix& w, long budget = 4096);

/// Practical switching threshold: (2/G) * sum_g sd({Q_i : g_i = g}),
/// groups with fewer than two members contributing zero, floored at 1e-12.
double default_threshold(const FitResult& fit, const Panel& panel, const WeightMatrix& w);

/**
 * One synchronized refinement pass: each node switches to the group
 * minimizing its profile loss whenever that beats the fitted group's
 * profile loss by more than the threshold. All comparisons are against
 * the pre-refinement labels.
 */
RefinementReport refine(const FitResult& fit, const Panel& panel, const WeightMatrix& w,
                        std::optional<double> threshold = std::nullopt, long budget = 4096,
                        int threads = 0);

}  // namespace gnar
