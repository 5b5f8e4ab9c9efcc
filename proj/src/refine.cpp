#include "gnar/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gnar/parallel.hpp"
#include "gnar/rng.hpp"

namespace gnar {

namespace {

using detail::NodeStats;

/**
 * Minimizer of the node loss over (own row r, followee labels h) at fixed
 * theta coefficients (nu_g, zeta_g). Works on the u-space coefficient
 * vector: entry a holds beta(r, h_a), the tail holds nu_g and zeta_g.
 */
class ProfileMinimizer {
public:
    ProfileMinimizer(const NodeStats& stats, const GnarParams& params, int node_degree,
                     int horizon)
        : stats_(stats), params_(params), deg_(node_degree), horizon_(horizon) {}

    double exact(int theta_group) const {
        const int g_count = params_.n_groups;
        std::vector<int> h(deg_, 0);
        Eigen::VectorXd v(stats_.xty.size());
        Eigen::VectorXd gv(stats_.xty.size());
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < g_count; ++r) {
            std::fill(h.begin(), h.end(), 0);
            for (int a = 0; a < deg_; ++a) v[a] = params_.beta(r, 0);
            fill_theta(theta_group, v);
            gv.noalias() = stats_.gram * v;
            double sse = detail::node_sse(stats_, v);
            best = std::min(best, sse);
            // Odometer over followee labels; each coordinate move is a
            // rank-one touch on the cached gram product.
            auto bump = [&](int a, int to) {
                const double dv = params_.beta(r, to) - params_.beta(r, h[a]);
                sse += dv * dv * stats_.gram(a, a) + 2.0 * dv * (gv[a] - stats_.xty[a]);
                v[a] += dv;
                gv += dv * stats_.gram.col(a);
                h[a] = to;
            };
            for (;;) {
                int pos = 0;
                while (pos < deg_ && h[pos] == g_count - 1) {
                    bump(pos, 0);
                    ++pos;
                }
                if (pos == deg_) break;
                bump(pos, h[pos] + 1);
                best = std::min(best, sse);
            }
        }
        return best / horizon_;
    }

    // The own-row label moves every neighbor coefficient at once and a
    // greedy joint sweep gets trapped easily, so the own row is enumerated
    // outright (it only has G values) with cyclic descent over the
    // followee labels inside each row, from the fitted labels plus a
    // handful of random draws.
    double coordinate_descent(int theta_group, int /*fitted_own*/,
                              const std::vector<int>& fitted_neighbors,
                              std::uint64_t seed) const {
        Rng rng(seed);
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> h0(deg_);
        for (int own = 0; own < params_.n_groups; ++own) {
            best = std::min(best, descend(theta_group, own, fitted_neighbors));
            for (int restart = 0; restart < 8; ++restart) {
                for (int a = 0; a < deg_; ++a)
                    h0[a] = static_cast<int>(rng.below(params_.n_groups));
                best = std::min(best, descend(theta_group, own, h0));
            }
        }
        return best / horizon_;
    }

private:
    void fill_theta(int theta_group, Eigen::VectorXd& v) const {
        v[deg_] = params_.nu[theta_group];
        v.tail(params_.p) = params_.zeta.row(theta_group);
    }

    // Cyclic descent over the followee labels at a fixed own row: single
    // moves until stable, then pair moves (the objective is quadratic in
    // the coefficients, so pairs capture the remaining cross terms).
    double descend(int theta_group, int own, const std::vector<int>& h0) const {
        constexpr int kMaxCycles = 200;
        const int g_count = params_.n_groups;
        std::vector<int> h = h0;
        Eigen::VectorXd v(stats_.xty.size());
        for (int a = 0; a < deg_; ++a) v[a] = params_.beta(own, h[a]);
        fill_theta(theta_group, v);
        Eigen::VectorXd gv = stats_.gram * v;
        double sse = detail::node_sse(stats_, v);

        auto single_delta = [&](int a, int c) {
            const double dv = params_.beta(own, c) - params_.beta(own, h[a]);
            return dv * dv * stats_.gram(a, a) + 2.0 * dv * (gv[a] - stats_.xty[a]);
        };
        auto commit = [&](int a, int c, double delta) {
            const double dv = params_.beta(own, c) - params_.beta(own, h[a]);
            h[a] = c;
            v[a] += dv;
            gv += dv * stats_.gram.col(a);
            sse += delta;
        };

        for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
            bool changed = false;
            for (int a = 0; a < deg_; ++a) {
                int best_h = h[a];
                double best_delta = 0.0;
                for (int c = 0; c < g_count; ++c) {
                    if (c == h[a]) continue;
                    const double delta = single_delta(a, c);
                    if (delta < best_delta) {
                        best_delta = delta;
                        best_h = c;
                    }
                }
                if (best_h != h[a]) {
                    commit(a, best_h, best_delta);
                    changed = true;
                }
            }
            if (changed) continue;
            for (int a = 0; a < deg_ && !changed; ++a)
                for (int b = a + 1; b < deg_ && !changed; ++b)
                    for (int ca = 0; ca < g_count && !changed; ++ca)
                        for (int cb = 0; cb < g_count && !changed; ++cb) {
                            if (ca == h[a] && cb == h[b]) continue;
                            const double dva = params_.beta(own, ca) - params_.beta(own, h[a]);
                            const double dvb = params_.beta(own, cb) - params_.beta(own, h[b]);
                            const double delta = single_delta(a, ca) + single_delta(b, cb) +
                                                 2.0 * dva * dvb * stats_.gram(a, b);
                            if (delta < -1e-14) {
                                commit(a, ca, single_delta(a, ca));
                                commit(b, cb, single_delta(b, cb));
                                changed = true;
                            }
                        }
            if (!changed) break;
        }
        return sse;
    }

    const NodeStats& stats_;
    const GnarParams& params_;
    int deg_;
    int horizon_;
};

bool within_budget(int n_groups, int node_degree, long budget) {
    if (budget < 1) return false;
    double combos = 1.0;
    for (int k = 0; k <= node_degree; ++k) {
        combos *= n_groups;
        if (combos > static_cast<double>(budget)) return false;
    }
    return true;
}

double profile_loss_impl(int node, int group, const FitResult& fit,
                         const std::vector<NodeStats>& stats, const WeightMatrix& w, int horizon,
                         long budget) {
    const int deg = w.out_degree(node);
    ProfileMinimizer minimizer(stats[node], fit.params, deg, horizon);
    if (within_budget(fit.params.n_groups, deg, budget)) return minimizer.exact(group);
    std::vector<int> fitted(deg);
    for (int a = 0; a < deg; ++a) fitted[a] = fit.membership[w.neighbors[node][a]];
    const std::uint64_t seed =
        derive_seed(0x8f1e2d3c4b5a6978ULL, static_cast<std::uint64_t>(node) *
                                                 static_cast<std::uint64_t>(fit.params.n_groups) +
                                             static_cast<std::uint64_t>(group));
    return minimizer.coordinate_descent(group, fit.membership[node], fitted, seed);
}

}  // namespace

double profile_loss(int node, int group, const FitResult& fit, const Panel& panel,
                    const WeightMatrix& w, long budget) {
    if (node < 0 || node >= panel.n_nodes()) throw std::invalid_argument("profile_loss: bad node");
    if (group < 0 || group >= fit.params.n_groups)
        throw std::invalid_argument("profile_loss: bad group");
    const auto stats = detail::build_node_stats(panel, w);
    return profile_loss_impl(node, group, fit, stats, w, panel.horizon(), budget);
}

double default_threshold(const FitResult& fit, const Panel& panel, const WeightMatrix& w) {
    std::vector<double> node_q = fit.node_loss;
    if (static_cast<int>(node_q.size()) != panel.n_nodes())
        loss(fit.params, fit.membership, panel, w, &node_q);
    const int g_count = fit.params.n_groups;
    double total = 0.0;
    for (int g = 0; g < g_count; ++g) {
        double sum = 0.0, sum2 = 0.0;
        long m = 0;
        for (int i = 0; i < panel.n_nodes(); ++i) {
            if (fit.membership[i] != g) continue;
            sum += node_q[i];
            sum2 += node_q[i] * node_q[i];
            ++m;
        }
        if (m < 2) continue;
        const double var = std::max(0.0, (sum2 - sum * sum / m) / (m - 1));
        total += std::sqrt(var);
    }
    const double threshold = 2.0 * total / g_count;
    return threshold > 0.0 ? threshold : 1e-12;
}

RefinementReport refine(const FitResult& fit, const Panel& panel, const WeightMatrix& w,
                        std::optional<double> threshold, long budget, int threads) {
    const int n = panel.n_nodes();
    const int g_count = fit.params.n_groups;
    check_membership(fit.membership, g_count, n);

    RefinementReport report;
    report.labels_before = fit.membership;
    report.delta_threshold = threshold ? *threshold : default_threshold(fit, panel, w);
    if (report.delta_threshold <= 0.0)
        throw std::invalid_argument("refine: threshold must be positive");
    report.profile_losses.resize(n, g_count);
    report.labels_after = fit.membership;

    const auto stats = detail::build_node_stats(panel, w);
    const int horizon = panel.horizon();
    parallel_for(n, threads, [&](int i) {
        for (int g = 0; g < g_count; ++g)
            report.profile_losses(i, g) = profile_loss_impl(i, g, fit, stats, w, horizon, budget);
        int best = 0;
        for (int g = 1; g < g_count; ++g)
            if (report.profile_losses(i, g) < report.profile_losses(i, best)) best = g;
        const int fitted = fit.membership[i];
        if (report.profile_losses(i, fitted) - report.profile_losses(i, best) >
            report.delta_threshold)
            report.labels_after[i] = best;
    });
    for (int i = 0; i < n; ++i)
        if (report.labels_after[i] != report.labels_before[i]) report.switched.push_back(i);
    return report;
}

}  // namespace gnar
