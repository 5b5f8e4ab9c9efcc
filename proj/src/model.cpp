#include "gnar/model.hpp"

#include <cmath>
#include <stdexcept>

#include "gnar/rng.hpp"

namespace gnar {

GnarParams GnarParams::zero(int n_groups, int p) {
    GnarParams out;
    out.n_groups = n_groups;
    out.p = p;
    out.beta = Eigen::MatrixXd::Zero(n_groups, n_groups);
    out.nu = Eigen::VectorXd::Zero(n_groups);
    out.zeta = Eigen::MatrixXd::Zero(n_groups, p);
    return out;
}

void GnarParams::validate() const {
    if (n_groups <= 0) throw std::invalid_argument("GnarParams: n_groups must be positive");
    if (beta.rows() != n_groups || beta.cols() != n_groups)
        throw std::invalid_argument("GnarParams: beta must be G x G");
    if (nu.size() != n_groups) throw std::invalid_argument("GnarParams: nu must have length G");
    if (zeta.rows() != n_groups || zeta.cols() != p)
        throw std::invalid_argument("GnarParams: zeta must be G x p");
    if (!beta.allFinite() || !nu.allFinite() || !zeta.allFinite())
        throw std::invalid_argument("GnarParams: entries must be finite");
}

void check_membership(const Membership& mem, int n_groups, int n_nodes) {
    if (static_cast<int>(mem.size()) != n_nodes)
        throw std::invalid_argument("membership length does not match the network");
    for (int g : mem)
        if (g < 0 || g >= n_groups)
            throw std::invalid_argument("membership label out of range [0, G)");
}

void Panel::validate() const {
    if (horizon() < 1) throw std::invalid_argument("Panel: need at least two time columns");
    if (z.rows() != y.rows()) throw std::invalid_argument("Panel: z/y row mismatch");
    if (!y.allFinite() || !z.allFinite())
        throw std::invalid_argument("Panel: missing or non-finite values");
}

Eigen::MatrixXd transition_matrix(const GnarParams& params, const Membership& mem,
                                  const WeightMatrix& w) {
    check_membership(mem, params.n_groups, w.n_nodes);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(w.n_nodes, w.n_nodes);
    for (int i = 0; i < w.n_nodes; ++i) {
        const auto& nb = w.neighbors[i];
        const auto& vals = w.values[i];
        for (std::size_t k = 0; k < nb.size(); ++k)
            b(i, nb[k]) = vals[k] * params.beta(mem[i], mem[nb[k]]);
        b(i, i) = params.nu[mem[i]];
    }
    return b;
}

StationarityCheck check_stationarity(const GnarParams& params) {
    const double sum = params.beta.cwiseAbs().maxCoeff() + params.nu.cwiseAbs().maxCoeff();
    return {sum < 1.0, 1.0 - sum};
}

Panel simulate(const GnarParams& params, const Membership& mem, const WeightMatrix& w,
               const Eigen::MatrixXd& z, int horizon, int burn_in, const NoiseSpec& noise,
               std::uint64_t rng_seed, bool allow_nonstationary) {
    params.validate();
    check_membership(mem, params.n_groups, w.n_nodes);
    if (z.rows() != w.n_nodes || z.cols() != params.p)
        throw std::invalid_argument("simulate: z must be N x p");
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("simulate: burn_in must be >= 0");
    if (noise.sigma < 0) throw std::invalid_argument("simulate: sigma must be >= 0");
    if (!allow_nonstationary && !check_stationarity(params).stationary)
        throw std::domain_error(
            "simulate: parameters fail the stationarity check; pass allow_nonstationary to force");

    const int n = w.n_nodes;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) mu[i] = z.row(i).dot(params.zeta.row(mem[i]));

    Rng rng(rng_seed);
    Panel panel;
    panel.y.resize(n, horizon + 1);
    panel.z = z;

    Eigen::VectorXd state = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd next(n);
    auto step = [&](const Eigen::VectorXd& prev, Eigen::VectorXd& out) {
        for (int i = 0; i < n; ++i) {
            const auto& nb = w.neighbors[i];
            const auto& vals = w.values[i];
            double acc = 0.0;
            for (std::size_t k = 0; k < nb.size(); ++k)
                acc += vals[k] * params.beta(mem[i], mem[nb[k]]) * prev[nb[k]];
            acc += params.nu[mem[i]] * prev[i] + mu[i];
            if (noise.sigma > 0) acc += noise.sigma * rng.normal();
            out[i] = acc;
        }
    };
    for (int t = 0; t < burn_in; ++t) {
        step(state, next);
        state.swap(next);
    }
    panel.y.col(0) = state;
    for (int t = 1; t <= horizon; ++t) {
        step(state, next);
        state.swap(next);
        panel.y.col(t) = state;
    }
    return panel;
}

}  // namespace gnar
