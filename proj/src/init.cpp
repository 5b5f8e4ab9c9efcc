#include "gnar/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "gnar/parallel.hpp"
#include "gnar/rng.hpp"

namespace gnar {

NodeEstimates node_ridge(const Panel& panel, const WeightMatrix& w, int node) {
    panel.validate();
    const int horizon = panel.horizon();
    if (horizon < 2) throw std::invalid_argument("node_ridge: need horizon >= 2");
    const auto& nb = w.neighbors[node];
    const auto& vals = w.values[node];
    const int m = static_cast<int>(nb.size()) + 1;
    const int n = panel.n_nodes();

    // Per-node means: mean of y_1..y_T and of the lags y_0..y_{T-1}.
    Eigen::VectorXd mean_lag(n);
    for (int j = 0; j < n; ++j) mean_lag[j] = panel.y.row(j).head(horizon).mean();
    const double mean_i = panel.y.row(node).tail(horizon).mean();

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd x(m);
    double x_norm2 = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        for (int k = 0; k < m - 1; ++k)
            x[k] = vals[k] * (panel.y(nb[k], t - 1) - mean_lag[nb[k]]);
        x[m - 1] = panel.y(node, t - 1) - mean_lag[node];
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
        rhs += x * (panel.y(node, t) - mean_i);
        x_norm2 += x.squaredNorm();
    }
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    const double lambda = 0.01 * x_norm2 / m + 1e-6;
    gram.diagonal().array() += lambda;

    const Eigen::VectorXd sol = gram.ldlt().solve(rhs);
    NodeEstimates est;
    est.b = sol.head(m - 1);
    est.v = sol[m - 1];
    double level = mean_i - est.v * mean_lag[node];
    for (int k = 0; k < m - 1; ++k) level -= est.b[k] * vals[k] * mean_lag[nb[k]];
    est.f = level;
    return est;
}

std::vector<NodeEstimates> node_ridge_all(const Panel& panel, const WeightMatrix& w, int threads) {
    std::vector<NodeEstimates> out(panel.n_nodes());
    parallel_for(panel.n_nodes(), threads, [&](int i) { out[i] = node_ridge(panel, w, i); });
    return out;
}

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t rng_seed, int max_iter) {
    const int m = static_cast<int>(points.rows());
    const int d = static_cast<int>(points.cols());
    if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
    if (m < k) throw std::invalid_argument("kmeans: fewer points than clusters");

    Rng rng(rng_seed);
    KmeansResult res;
    res.centroids.resize(k, d);
    const auto seeds = rng.sample_distinct(m, k);
    for (int c = 0; c < k; ++c) res.centroids.row(c) = points.row(seeds[c]);

    res.labels.assign(m, -1);
    std::vector<double> dist(m, 0.0);
    std::vector<int> counts(k, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        res.n_iterations = iter + 1;
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double best_d = (points.row(i) - res.centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double dd = (points.row(i) - res.centroids.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            dist[i] = best_d;
            if (res.labels[i] != best) {
                res.labels[i] = best;
                changed = true;
            }
        }
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < m; ++i) ++counts[res.labels[i]];
        // Re-seed empty clusters from the farthest point.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int far = 0;
            for (int i = 1; i < m; ++i)
                if (dist[i] > dist[far]) far = i;
            --counts[res.labels[far]];
            res.labels[far] = c;
            counts[c] = 1;
            dist[far] = 0.0;
            res.centroids.row(c) = points.row(far);
            changed = true;
        }
        if (!changed) break;
        res.centroids.setZero();
        for (int i = 0; i < m; ++i) res.centroids.row(res.labels[i]) += points.row(i);
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) res.centroids.row(c) /= counts[c];
    }
    res.inertia = 0.0;
    for (int i = 0; i < m; ++i)
        res.inertia += (points.row(i) - res.centroids.row(res.labels[i])).squaredNorm();
    return res;
}

Eigen::MatrixXd network_effect_features(const std::vector<NodeEstimates>& estimates, int n_groups,
                                        std::uint64_t rng_seed) {
    const int n = static_cast<int>(estimates.size());
    const int cells = n_groups * n_groups;
    long total = 0;
    for (const auto& e : estimates) total += e.b.size();

    Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n, 1 + cells);
    for (int i = 0; i < n; ++i) features(i, 0) = estimates[i].v;
    if (total == 0) return features;

    Eigen::MatrixXd pooled(total, 1);
    long cursor = 0;
    for (const auto& e : estimates)
        for (int k = 0; k < e.b.size(); ++k) pooled(cursor++, 0) = e.b[k];
    const int k_cells = static_cast<int>(std::min<long>(cells, total));
    const auto clusters = kmeans(pooled, k_cells, rng_seed);

    cursor = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd sums = Eigen::VectorXd::Zero(cells);
        Eigen::VectorXd hits = Eigen::VectorXd::Zero(cells);
        for (int k = 0; k < estimates[i].b.size(); ++k) {
            const int cell = clusters.labels[cursor++];
            sums[cell] += estimates[i].b[k];
            hits[cell] += 1.0;
        }
        for (int cell = 0; cell < cells; ++cell)
            features(i, 1 + cell) = hits[cell] > 0 ? sums[cell] / hits[cell] : 0.0;
    }
    return features;
}

std::vector<Membership> init_pool(const Panel& panel, const WeightMatrix& w, int n_groups,
                                  int restarts, std::uint64_t rng_seed, int threads) {
    if (n_groups < 1) throw std::invalid_argument("init_pool: n_groups must be positive");
    if (restarts < 1) throw std::invalid_argument("init_pool: restarts must be positive");
    const int n = panel.n_nodes();
    if (n_groups > n) throw std::invalid_argument("init_pool: more groups than nodes");

    const auto estimates = node_ridge_all(panel, w, threads);
    Eigen::MatrixXd momentum(n, 1), level(n, 1);
    for (int i = 0; i < n; ++i) {
        momentum(i, 0) = estimates[i].v;
        level(i, 0) = estimates[i].f;
    }

    std::vector<Membership> pool(static_cast<std::size_t>(restarts) * 3);
    parallel_for(restarts, threads, [&](int r) {
        const std::uint64_t s1 = derive_seed(rng_seed, 3 * static_cast<std::uint64_t>(r));
        const std::uint64_t s2 = derive_seed(rng_seed, 3 * static_cast<std::uint64_t>(r) + 1);
        const std::uint64_t s3 = derive_seed(rng_seed, 3 * static_cast<std::uint64_t>(r) + 2);
        pool[3 * r] = kmeans(momentum, n_groups, s1).labels;
        pool[3 * r + 1] = kmeans(level, n_groups, s2).labels;
        const Eigen::MatrixXd features = network_effect_features(estimates, n_groups, s3);
        pool[3 * r + 2] = kmeans(features, n_groups, derive_seed(s3, 1)).labels;
    });

    std::vector<Membership> unique;
    std::set<Membership> seen;
    for (auto& mem : pool)
        if (seen.insert(mem).second) unique.push_back(std::move(mem));
    return unique;
}

}  // namespace gnar
