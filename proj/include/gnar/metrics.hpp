#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gnar/infer.hpp"
#include "gnar/model.hpp"

namespace gnar {

/**
 * Majority map chi: estimated group -> true group holding the majority of
 * its nodes. Empty estimated clusters map to true group 0; count ties go
 * to the smaller true label.
 */
std::vector<int> majority_map(const Membership& est, int n_groups_est, const Membership& truth,
                              int n_groups_true);

/// Fraction of nodes that are minorities in their estimated cluster.
double membership_error(const Membership& est, int n_groups_est, const Membership& truth,
                        int n_groups_true);

/// Permutation-based error rate (est and truth on the same G <= 8).
double membership_error_perm(const Membership& est, const Membership& truth, int n_groups);

/// Node-averaged estimation errors; the beta part compares rows of the
/// transition matrices built from both parameter sets.
struct NodeAveragedRmse {
    double beta_all = 0.0;
    double nu_all = 0.0;
    double zeta_all = 0.0;
};

NodeAveragedRmse rmse_all(const GnarParams& est_params, const Membership& est_mem,
                          const GnarParams& true_params, const Membership& true_mem,
                          const WeightMatrix& w);

/**
 * Parameter errors after the best label permutation (G = G0 <= 8),
 * chosen to minimize the beta error; nu and zeta errors are reported
 * under that same permutation. perm[g] gives the estimated group matched
 * to true group g.
 */
struct PermMatchedRmse {
    double beta = 0.0;
    double nu = 0.0;
    double zeta = 0.0;
    std::vector<int> perm;
};

PermMatchedRmse rmse_perm(const GnarParams& est_params, const GnarParams& true_params);

/// Per-replication CI coverage indicators, permutation-aligned.
struct CoverageIndicators {
    Eigen::MatrixXd beta;  // G0 x G0, entries 0/1 (nan when no interval)
    Eigen::VectorXd nu;    // G0
    Eigen::MatrixXd zeta;  // G0 x p
};

CoverageIndicators coverage_indicators(const InferenceResult& inference,
                                       const std::vector<int>& perm,
                                       const GnarParams& true_params);

/// Average absolute deviation of per-parameter coverage from the level.
struct CoverageError {
    double beta = 0.0;
    double nu = 0.0;
    double zeta = 0.0;
};

CoverageError coverage_error(const std::vector<CoverageIndicators>& replications, double level);

/// Mean per-parameter coverage rates by family.
CoverageError mean_coverage(const std::vector<CoverageIndicators>& replications);

/// Fraction of replications selecting the given G.
double msr(const std::vector<int>& selected, int n_groups);

}  // namespace gnar
