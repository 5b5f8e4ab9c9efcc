#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gnar/campaign.hpp"
#include "gnar/estimate.hpp"
#include "gnar/model.hpp"
#include "gnar/network.hpp"
#include "gnar/rng.hpp"

namespace gnar::testing {

/// Random group parameters scaled to satisfy the stationarity check with
/// the given margin.
inline GnarParams random_stationary_params(int n_groups, int p, Rng& rng, double margin = 0.2) {
    GnarParams params = GnarParams::zero(n_groups, p);
    for (int g = 0; g < n_groups; ++g) {
        params.nu[g] = rng.normal(0.0, 0.5);
        for (int h = 0; h < n_groups; ++h) params.beta(g, h) = rng.normal(0.0, 0.5);
        for (int j = 0; j < p; ++j) params.zeta(g, j) = rng.normal(0.0, 0.8);
    }
    const double sum = params.beta.cwiseAbs().maxCoeff() + params.nu.cwiseAbs().maxCoeff();
    const double scale = (1.0 - margin) / std::max(sum, 1e-12);
    if (scale < 1.0) {
        params.beta *= scale;
        params.nu *= scale;
    }
    return params;
}

inline Membership random_membership(int n_nodes, int n_groups, Rng& rng) {
    Membership mem(n_nodes);
    for (int i = 0; i < n_nodes; ++i) mem[i] = static_cast<int>(rng.below(n_groups));
    return mem;
}

inline Eigen::MatrixXd random_covariates(int n_nodes, int p, Rng& rng) {
    Eigen::MatrixXd z(n_nodes, p);
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = rng.normal();
    return z;
}

/// Panel with iid N(0,1) cells (not generated by the model); handy for
/// algebraic identities that must hold for arbitrary data.
inline Panel random_panel(int n_nodes, int horizon, int p, Rng& rng) {
    Panel panel;
    panel.y.resize(n_nodes, horizon + 1);
    for (int i = 0; i < n_nodes; ++i)
        for (int t = 0; t <= horizon; ++t) panel.y(i, t) = rng.normal();
    panel.z = random_covariates(n_nodes, p, rng);
    return panel;
}

struct Instance {
    Network net;
    WeightMatrix w;
    GnarParams params;
    Membership truth;
    Panel panel;
};

/// Simulated instance from the built-in scenario tables.
inline Instance scenario_instance(int scenario, int g0, int n_nodes, int horizon, double sigma,
                                  std::uint64_t seed, int communities = 5, int burn_in = 200) {
    Instance inst;
    inst.params = scenario_params(scenario, g0);
    inst.net = gen_sbm(n_nodes, communities, derive_seed(seed, 0));
    inst.w = row_normalize(inst.net);
    Rng rng(derive_seed(seed, 1));
    inst.truth = random_membership(n_nodes, g0, rng);
    const Eigen::MatrixXd z = random_covariates(n_nodes, inst.params.p, rng);
    inst.panel = simulate(inst.params, inst.truth, inst.w, z, horizon, burn_in, {sigma},
                          derive_seed(seed, 2));
    return inst;
}

/// Fully random (but stationary) instance.
inline Instance random_instance(int n_nodes, int horizon, int g0, int p, double sigma,
                                std::uint64_t seed, bool powerlaw = false) {
    Instance inst;
    Rng rng(derive_seed(seed, 1));
    inst.params = random_stationary_params(g0, p, rng);
    inst.net = powerlaw ? gen_powerlaw(n_nodes, derive_seed(seed, 0))
                        : gen_sbm(n_nodes, std::max(1, n_nodes / 20), derive_seed(seed, 0));
    inst.w = row_normalize(inst.net);
    inst.truth = random_membership(n_nodes, g0, rng);
    const Eigen::MatrixXd z = random_covariates(n_nodes, p, rng);
    inst.panel = simulate(inst.params, inst.truth, inst.w, z, horizon, 100, {sigma},
                          derive_seed(seed, 2));
    return inst;
}

}  // namespace gnar::testing
