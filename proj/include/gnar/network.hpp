#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gnar {

/**
 * Directed follower network.
 *
 * followees[i] lists the nodes i follows (a_ij = 1), sorted ascending,
 * no self-loops. out_degree[i] == followees[i].size().
 */
struct Network {
    int n_nodes = 0;
    std::vector<std::vector<int>> followees;
    std::vector<int> out_degree;

    bool has_edge(int from, int to) const;
    Eigen::MatrixXd dense_adjacency() const;
};

/// Build from an edge list (0-based pairs), validating shape invariants.
Network make_network(int n_nodes, const std::vector<std::pair<int, int>>& edges);

/**
 * Row-normalized weights: w_ij = a_ij / n_i, stored sparsely.
 * Rows with out-degree zero are representable (all-zero row) so that
 * hand-built fixtures work; row_normalize itself rejects them.
 */
struct WeightMatrix {
    int n_nodes = 0;
    std::vector<std::vector<int>> neighbors;   // column indices per row
    std::vector<std::vector<double>> values;   // matching weights

    Eigen::MatrixXd dense() const;
    int out_degree(int i) const { return static_cast<int>(neighbors[i].size()); }
    /// y -> W y
    Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
    /// y -> W^T y
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;
};

/// w_ij = a_ij / n_i. Throws if some node has out-degree zero (names it).
WeightMatrix row_normalize(const Network& net);

/**
 * Stochastic block model generator. Nodes are split into `communities`
 * groups of size floor(N/C), remainder going to the first groups. Edge
 * probabilities: 2 log(N)/N within a community, log(N)/N across, clipped
 * to [0,1]. Any node left with out-degree zero receives one edge to a
 * uniformly random other node.
 */
Network gen_sbm(int n_nodes, int communities, std::uint64_t rng_seed);

/// Community sizes / labels used by gen_sbm (exposed for evaluation).
std::vector<int> sbm_community_sizes(int n_nodes, int communities);
std::vector<int> sbm_community_labels(int n_nodes, int communities);

/**
 * Power-law in-degree generator: draw dtilde_i with P(dtilde = k)
 * proportional to k^{-2.5} on k = 1..N, set the in-degree to
 * min(4*dtilde_i, N-1) and pick that many distinct followers uniformly.
 * Out-degrees are then repaired to be at least one.
 */
Network gen_powerlaw(int n_nodes, std::uint64_t rng_seed);

/// pmf of dtilde over k = 1..cap (normalized k^{-2.5} weights).
std::vector<double> powerlaw_pmf(int cap);

/// In-degree rule applied to a drawn dtilde.
int powerlaw_indegree(int dtilde, int n_nodes);

struct NetDiagnostics {
    Eigen::VectorXd stationary_dist;  // p_N
    double r_p = 0.0;                 // p_N' p_N
    double sigma_max_sym = 0.0;       // sigma_max(W + W')
    double mean_degree = 0.0;
    int max_degree = 0;
    double degree_q90 = 0.0;
    bool stationary_converged = false;
    bool sigma_converged = false;
    int stationary_iterations = 0;
};

/**
 * Structural diagnostics. The stationary distribution solves p = W'p and
 * is found by power iteration (tolerance 1e-10, at most 10000 sweeps);
 * non-convergence is flagged, with the last iterate returned.
 */
NetDiagnostics diagnostics(const Network& net, const WeightMatrix& w);

/// 90% quantile of out-degrees (linear interpolation between order stats).
double degree_quantile(const std::vector<int>& degrees, double q);

/// CSV edge list with header "from,to", 1-based ids.
Network load_edge_csv(const std::string& path, int n_nodes = 0);
void save_edge_csv(const std::string& path, const Network& net);

}  // namespace gnar
