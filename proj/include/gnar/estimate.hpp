#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gnar/model.hpp"
#include "gnar/network.hpp"

namespace gnar {

/**
 * Per-group stacked regression blocks. For group g, x[g] stacks the rows
 * (ytilde_{i(t-1),1}, ..., ytilde_{i(t-1),G}, y_{i(t-1)}, z_i') over all
 * nodes i with g_i = g (ascending) and t = 1..T, where ytilde_{i(t-1),g'}
 * is the weighted lag sum restricted to followees currently in group g'.
 * y[g] stacks the matching responses y_it.
 */
struct DesignBlocks {
    std::vector<Eigen::MatrixXd> x;
    std::vector<Eigen::VectorXd> y;
};

struct GroupGram {
    Eigen::MatrixXd xtx;  // (G+p+1)^2
    Eigen::VectorXd xty;
    long rows = 0;        // N_g * T
    long n_members = 0;   // N_g
};

struct FitOptions {
    double tol = 1e-8;   // relative loss decrease
    int max_iter = 100;  // outer (b)-(c) iterations
    int threads = 0;     // 0 = hardware concurrency
};

struct FitResult {
    GnarParams params;
    Membership membership;
    double loss = 0.0;
    std::vector<double> loss_trace;
    std::vector<GroupGram> grams;
    std::vector<double> node_loss;  // Q_i at the returned solution
    bool converged = false;
    int n_iterations = 0;
    int init_index = 0;
};

/**
 * Quadratic loss Q = N^{-1} sum_i T^{-1} sum_t residual_it^2, computed
 * directly from per-node residuals. When node_q is given it receives the
 * per-node values Q_i.
 */
double loss(const GnarParams& params, const Membership& mem, const Panel& panel,
            const WeightMatrix& w, std::vector<double>* node_q = nullptr);

DesignBlocks build_design(const Panel& panel, const WeightMatrix& w, const Membership& mem,
                          int n_groups);

/**
 * Minimum-norm least squares for one group block; equals
 * (X'X)^{-1} X'y when the Gram is nonsingular. Throws on an empty block.
 */
Eigen::VectorXd solve_group(const Eigen::MatrixXd& x_g, const Eigen::VectorXd& y_g);

/**
 * One membership-update stage: sequential argmin sweeps over nodes
 * (already-updated labels feed later nodes, ties to the smallest group
 * index), repeated until a full sweep changes nothing.
 */
Membership update_memberships(const GnarParams& params, const Membership& mem, const Panel& panel,
                              const WeightMatrix& w);

/**
 * Alternating estimation: from each initial membership, repeat membership
 * sweeps and per-group closed-form solves until the membership stabilizes
 * (which forces a zero loss decrease) or max_iter is hit; the restart with
 * the smallest final loss wins. Empty groups keep their stale coefficients
 * and stay selectable.
 */
FitResult fit(const Panel& panel, const WeightMatrix& w, int n_groups,
              const std::vector<Membership>& init_pool, const FitOptions& options = {});

/// Closed-form solve at fixed labels (oracle fits, post-refinement refits).
FitResult solve_at(const Panel& panel, const WeightMatrix& w, int n_groups, const Membership& mem);

namespace detail {

/**
 * Label-free per-node sufficient statistics over the raw regressors
 * u_it = ((w_ij y_{j(t-1)})_{j in followees(i)}, y_{i(t-1)}, z_i):
 * gram = sum_t u u', xty = sum_t u y_it, yty = sum_t y_it^2. Every group-
 * level quantity in the loss is a fold of these, which is what makes the
 * membership sweeps cheap.
 */
struct NodeStats {
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    double yty = 0.0;
};

std::vector<NodeStats> build_node_stats(const Panel& panel, const WeightMatrix& w);

/// Coefficient vector in u-space for a node with own label g: entries
/// beta(g, label[j]) per followee j, then nu[g], then zeta.row(g).
Eigen::VectorXd node_coefficients(const GnarParams& params, const Membership& mem,
                                  const WeightMatrix& w, int node, int own_label);

/// T * Q_i evaluated from the node statistics and a coefficient vector.
inline double node_sse(const NodeStats& s, const Eigen::VectorXd& v) {
    return s.yty - 2.0 * v.dot(s.xty) + v.dot(s.gram * v);
}

}  // namespace detail

}  // namespace gnar
