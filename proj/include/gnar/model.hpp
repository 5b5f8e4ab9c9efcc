#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gnar/network.hpp"

namespace gnar {

/**
 * Group-level parameters of the grouped network autoregression.
 *
 * beta(g, g') is the effect of a followee in group g' on a follower in
 * group g, nu[g] the own-lag (momentum) effect, and zeta.row(g) the
 * coefficients of the time-invariant covariates.
 */
struct GnarParams {
    int n_groups = 0;
    Eigen::MatrixXd beta;  // G x G
    Eigen::VectorXd nu;    // G
    Eigen::MatrixXd zeta;  // G x p
    int p = 0;

    static GnarParams zero(int n_groups, int p);
    void validate() const;
};

/// Node-to-group assignment, 0-based labels in [0, G).
using Membership = std::vector<int>;

void check_membership(const Membership& mem, int n_groups, int n_nodes);

/**
 * Observed data: responses y (N x (T+1), column t = time t) and
 * time-invariant covariates z (N x p).
 */
struct Panel {
    Eigen::MatrixXd y;
    Eigen::MatrixXd z;

    int n_nodes() const { return static_cast<int>(y.rows()); }
    int horizon() const { return static_cast<int>(y.cols()) - 1; }
    int n_covariates() const { return static_cast<int>(z.cols()); }
    void validate() const;
};

struct NoiseSpec {
    double sigma = 1.0;  // innovation standard deviation; 0 = noiseless limit
};

/// N x N matrix B with b_ij = w_ij * beta(g_i, g_j) off-diagonal, b_ii = nu[g_i].
Eigen::MatrixXd transition_matrix(const GnarParams& params, const Membership& mem,
                                  const WeightMatrix& w);

struct StationarityCheck {
    bool stationary = false;
    double margin = 0.0;  // 1 - (max |beta| + max |nu|)
};

/// Sufficient stationarity check: max |beta| + max |nu| < 1.
StationarityCheck check_stationarity(const GnarParams& params);

/**
 * Forward simulation of y_t = B y_{t-1} + mu_z + eps_t with
 * mu_z[i] = z_i' zeta(g_i), eps ~ N(0, sigma^2) iid. The chain starts at
 * zero, runs burn_in discarded steps, then records horizon+1 columns.
 * Throws on non-stationary parameters unless allow_nonstationary is set.
 */
Panel simulate(const GnarParams& params, const Membership& mem, const WeightMatrix& w,
               const Eigen::MatrixXd& z, int horizon, int burn_in, const NoiseSpec& noise,
               std::uint64_t rng_seed, bool allow_nonstationary = false);

}  // namespace gnar
