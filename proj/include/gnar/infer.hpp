#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gnar/estimate.hpp"

namespace gnar {

/// Standard normal quantile and CDF (used for intervals and p-values).
double normal_quantile(double p);
double normal_cdf(double x);

/// Pooled residual variance RSS / (NT - G(G+p+1)) at the fit's labels.
/// Throws when the degrees of freedom are not positive.
double residual_variance(const FitResult& fit, const Panel& panel, const WeightMatrix& w);

/**
 * Plug-in covariance of xi_g: sigma2 * (X_g'X_g)^{-1}, computed with a
 * pseudo-inverse. `singular` (optional) reports rank deficiency. Throws
 * on an empty group.
 */
Eigen::MatrixXd covariance(const FitResult& fit, int group, double sigma2,
                           bool* singular = nullptr);

struct GroupInference {
    Eigen::VectorXd estimate;  // (beta_g1..beta_gG, nu_g, zeta_g1..zeta_gp)
    Eigen::VectorXd se;
    Eigen::VectorXd ci_lo;
    Eigen::VectorXd ci_hi;
    Eigen::VectorXd p_value;
    std::vector<bool> valid;   // false where the Gram is singular
    long n_members = 0;
    bool singular = false;
};

struct InferenceResult {
    std::vector<GroupInference> groups;
    double sigma2_hat = 0.0;
    double level = 0.95;
    int n_groups = 0;
    int p = 0;
};

/**
 * Per-coefficient normal confidence intervals and two-sided p-values at
 * the given level. Intended to be called on a fit whose labels are the
 * refined memberships.
 */
InferenceResult confidence_intervals(const FitResult& fit, const Panel& panel,
                                     const WeightMatrix& w, double level = 0.95);

/// Coefficient table CSV: group, coefficient, estimate, se, ci_lo, ci_hi,
/// p_value. Covariate names default to zeta_1..zeta_p.
void write_coefficient_csv(const std::string& path, const InferenceResult& inference,
                           const std::vector<std::string>& covariate_names = {});

}  // namespace gnar
