#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gnar/model.hpp"
#include "gnar/network.hpp"

namespace gnar {

/**
 * Crude per-node estimates used to seed the initial memberships: network
 * effects b (one per followee), momentum v and the fixed-effect level f,
 * obtained from a ridge regression on mean-centered series.
 */
struct NodeEstimates {
    Eigen::VectorXd b;
    double v = 0.0;
    double f = 0.0;
};

NodeEstimates node_ridge(const Panel& panel, const WeightMatrix& w, int node);

/// All nodes at once (parallel over nodes).
std::vector<NodeEstimates> node_ridge_all(const Panel& panel, const WeightMatrix& w,
                                          int threads = 0);

struct KmeansResult {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    int n_iterations = 0;
};

/**
 * Lloyd iteration with random-point initialization, at most max_iter
 * passes, squared-Euclidean distances and ties to the smallest centroid
 * index. Empty clusters are re-seeded from the point farthest from its
 * assigned centroid. Deterministic given the seed. Throws if the number
 * of points is below k.
 */
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t rng_seed,
                    int max_iter = 300);

/// Clustering features used by the network-effect scheme: per node,
/// (v_i, cellwise means of its b values over a pooled k=G^2 clustering),
/// empty cells set to zero.
Eigen::MatrixXd network_effect_features(const std::vector<NodeEstimates>& estimates, int n_groups,
                                        std::uint64_t rng_seed);

/**
 * Initial-membership pool: for each of `restarts` seeds, run three
 * k-means schemes (on momentum estimates, on fixed-effect estimates, and
 * on the pooled network-effect features) and collect the labelings,
 * dropping exact duplicates.
 */
std::vector<Membership> init_pool(const Panel& panel, const WeightMatrix& w, int n_groups,
                                  int restarts, std::uint64_t rng_seed, int threads = 0);

}  // namespace gnar
