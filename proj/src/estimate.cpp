#include "gnar/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gnar/parallel.hpp"

namespace gnar {

double loss(const GnarParams& params, const Membership& mem, const Panel& panel,
            const WeightMatrix& w, std::vector<double>* node_q) {
    params.validate();
    panel.validate();
    check_membership(mem, params.n_groups, panel.n_nodes());
    const int n = panel.n_nodes();
    const int horizon = panel.horizon();
    if (node_q) node_q->assign(n, 0.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& nb = w.neighbors[i];
        const auto& vals = w.values[i];
        const double fixed = panel.z.row(i).dot(params.zeta.row(mem[i]));
        double sse = 0.0;
        for (int t = 1; t <= horizon; ++t) {
            double pred = fixed + params.nu[mem[i]] * panel.y(i, t - 1);
            for (std::size_t k = 0; k < nb.size(); ++k)
                pred += params.beta(mem[i], mem[nb[k]]) * vals[k] * panel.y(nb[k], t - 1);
            const double r = panel.y(i, t) - pred;
            sse += r * r;
        }
        const double qi = sse / horizon;
        if (node_q) (*node_q)[i] = qi;
        total += qi;
    }
    return total / n;
}

DesignBlocks build_design(const Panel& panel, const WeightMatrix& w, const Membership& mem,
                          int n_groups) {
    panel.validate();
    check_membership(mem, n_groups, panel.n_nodes());
    const int n = panel.n_nodes();
    const int horizon = panel.horizon();
    const int p = panel.n_covariates();
    const int dim = n_groups + p + 1;

    std::vector<long> rows(n_groups, 0);
    for (int i = 0; i < n; ++i) rows[mem[i]] += horizon;

    DesignBlocks blocks;
    blocks.x.resize(n_groups);
    blocks.y.resize(n_groups);
    for (int g = 0; g < n_groups; ++g) {
        blocks.x[g].resize(rows[g], dim);
        blocks.y[g].resize(rows[g]);
    }
    std::vector<long> cursor(n_groups, 0);
    Eigen::RowVectorXd row(dim);
    for (int i = 0; i < n; ++i) {
        const int g = mem[i];
        const auto& nb = w.neighbors[i];
        const auto& vals = w.values[i];
        for (int t = 1; t <= horizon; ++t) {
            row.setZero();
            for (std::size_t k = 0; k < nb.size(); ++k)
                row[mem[nb[k]]] += vals[k] * panel.y(nb[k], t - 1);
            row[n_groups] = panel.y(i, t - 1);
            row.segment(n_groups + 1, p) = panel.z.row(i);
            blocks.x[g].row(cursor[g]) = row;
            blocks.y[g][cursor[g]] = panel.y(i, t);
            ++cursor[g];
        }
    }
    return blocks;
}

Eigen::VectorXd solve_group(const Eigen::MatrixXd& x_g, const Eigen::VectorXd& y_g) {
    if (x_g.rows() == 0) throw std::invalid_argument("solve_group: empty group");
    if (x_g.rows() != y_g.size()) throw std::invalid_argument("solve_group: row mismatch");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x_g);
    return cod.solve(y_g);
}

namespace detail {

std::vector<NodeStats> build_node_stats(const Panel& panel, const WeightMatrix& w) {
    panel.validate();
    const int n = panel.n_nodes();
    const int horizon = panel.horizon();
    const int p = panel.n_covariates();
    std::vector<NodeStats> stats(n);
    for (int i = 0; i < n; ++i) {
        const auto& nb = w.neighbors[i];
        const auto& vals = w.values[i];
        const int m = static_cast<int>(nb.size()) + p + 1;
        NodeStats& s = stats[i];
        s.gram = Eigen::MatrixXd::Zero(m, m);
        s.xty = Eigen::VectorXd::Zero(m);
        s.yty = 0.0;
        Eigen::VectorXd u(m);
        u.tail(p) = panel.z.row(i);
        for (int t = 1; t <= horizon; ++t) {
            for (std::size_t k = 0; k < nb.size(); ++k) u[k] = vals[k] * panel.y(nb[k], t - 1);
            u[nb.size()] = panel.y(i, t - 1);
            s.gram.selfadjointView<Eigen::Lower>().rankUpdate(u);
            s.xty += panel.y(i, t) * u;
            s.yty += panel.y(i, t) * panel.y(i, t);
        }
        s.gram.triangularView<Eigen::StrictlyUpper>() = s.gram.transpose();
    }
    return stats;
}

Eigen::VectorXd node_coefficients(const GnarParams& params, const Membership& mem,
                                  const WeightMatrix& w, int node, int own_label) {
    const auto& nb = w.neighbors[node];
    const int p = params.p;
    Eigen::VectorXd v(static_cast<int>(nb.size()) + p + 1);
    for (std::size_t k = 0; k < nb.size(); ++k) v[k] = params.beta(own_label, mem[nb[k]]);
    v[nb.size()] = params.nu[own_label];
    v.tail(p) = params.zeta.row(own_label);
    return v;
}

}  // namespace detail

namespace {

using detail::NodeStats;

struct FollowerRef {
    int node;  // j with i among j's followees
    int slot;  // index of i inside j's followee list
};

std::vector<std::vector<FollowerRef>> build_followers(const WeightMatrix& w) {
    std::vector<std::vector<FollowerRef>> followers(w.n_nodes);
    for (int j = 0; j < w.n_nodes; ++j)
        for (std::size_t k = 0; k < w.neighbors[j].size(); ++k)
            followers[w.neighbors[j][k]].push_back({j, static_cast<int>(k)});
    return followers;
}

/**
 * Mutable state of one restart of the alternating algorithm. Keeps, per
 * node, the coefficient vector v_i implied by the current labels, the
 * product gram_i * v_i and the node loss, so that a candidate relabel of
 * node i costs O((n_i+p)^2) for its own term plus O(1) per follower.
 */
class SweepEngine {
public:
    SweepEngine(const Panel& panel, const WeightMatrix& w, int n_groups,
                const std::vector<NodeStats>& stats,
                const std::vector<std::vector<FollowerRef>>& followers)
        : w_(w),
          stats_(stats),
          followers_(followers),
          n_(panel.n_nodes()),
          horizon_(panel.horizon()),
          p_(panel.n_covariates()),
          n_groups_(n_groups) {
        params_ = GnarParams::zero(n_groups, p_);
        coef_.resize(n_);
        gram_coef_.resize(n_);
        node_q_.assign(n_, 0.0);
    }

    void set_labels(const Membership& labels) { labels_ = labels; }
    void set_params(const GnarParams& params) {
        if (params.n_groups != n_groups_ || params.p != p_)
            throw std::invalid_argument("SweepEngine: parameter dimensions do not match");
        params_ = params;
    }
    const Membership& labels() const { return labels_; }
    const GnarParams& params() const { return params_; }
    const std::vector<double>& node_loss() const { return node_q_; }

    double total_loss() const {
        double acc = 0.0;
        for (double q : node_q_) acc += q;
        return acc / n_;
    }

    /// Step (c): per-group closed-form solves; empty groups keep stale rows.
    void solve_groups() {
        const int dim = n_groups_ + p_ + 1;
        std::vector<Eigen::MatrixXd> xtx(n_groups_, Eigen::MatrixXd::Zero(dim, dim));
        std::vector<Eigen::VectorXd> xty(n_groups_, Eigen::VectorXd::Zero(dim));
        std::vector<long> members(n_groups_, 0);
        accumulate_grams(xtx, xty, members);
        for (int g = 0; g < n_groups_; ++g) {
            if (members[g] == 0) continue;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xtx[g]);
            const Eigen::VectorXd xi = cod.solve(xty[g]);
            params_.beta.row(g) = xi.head(n_groups_);
            params_.nu[g] = xi[n_groups_];
            params_.zeta.row(g) = xi.tail(p_);
        }
    }

    /// Group Gram matrices X_g'X_g, X_g'y_g and member counts at the
    /// current labels, folded from the node statistics.
    void accumulate_grams(std::vector<Eigen::MatrixXd>& xtx, std::vector<Eigen::VectorXd>& xty,
                          std::vector<long>& members) const {
        for (int i = 0; i < n_; ++i) {
            const int g = labels_[i];
            ++members[g];
            const auto& nb = w_.neighbors[i];
            const NodeStats& s = stats_[i];
            const int m = static_cast<int>(nb.size()) + p_ + 1;
            // u-index -> x-index map: followee slot a -> label of followee,
            // own lag -> G, covariate k -> G+1+k.
            map_.resize(m);
            for (std::size_t k = 0; k < nb.size(); ++k) map_[k] = labels_[nb[k]];
            map_[nb.size()] = n_groups_;
            for (int k = 0; k < p_; ++k) map_[nb.size() + 1 + k] = n_groups_ + 1 + k;
            Eigen::MatrixXd& h = xtx[g];
            Eigen::VectorXd& c = xty[g];
            for (int a = 0; a < m; ++a) {
                c[map_[a]] += s.xty[a];
                for (int b = 0; b < m; ++b) h(map_[a], map_[b]) += s.gram(a, b);
            }
        }
    }

    /// Rebuild v_i, gram_i*v_i and Q_i from the current labels and params.
    void refresh() {
        for (int i = 0; i < n_; ++i) {
            coef_[i] = detail::node_coefficients(params_, labels_, w_, i, labels_[i]);
            gram_coef_[i] = stats_[i].gram * coef_[i];
            node_q_[i] = sse(i, coef_[i], gram_coef_[i]) / horizon_;
        }
    }

    /// Step (b): sequential argmin sweeps until a full pass changes nothing.
    /// Returns whether any label changed.
    bool sweep() {
        constexpr int kMaxPasses = 1000;
        bool any = false;
        for (int pass = 0; pass < kMaxPasses; ++pass) {
            bool changed = false;
            for (int i = 0; i < n_; ++i) changed |= update_node(i);
            any |= changed;
            if (!changed) break;
        }
        return any;
    }

private:
    double sse(int i, const Eigen::VectorXd& v, const Eigen::VectorXd& gv) const {
        return stats_[i].yty - 2.0 * v.dot(stats_[i].xty) + v.dot(gv);
    }

    // Change in N*T*Q at follower j when the label of its followee in
    // slot `slot` moves the coefficient there by dv.
    double follower_delta(int j, int slot, double dv) const {
        return dv * dv * stats_[j].gram(slot, slot) +
               2.0 * dv * (gram_coef_[j][slot] - stats_[j].xty[slot]);
    }

    bool update_node(int i) {
        const int cur = labels_[i];
        double best_delta = 0.0;
        int best_g = cur;
        Eigen::VectorXd best_v;
        for (int g = 0; g < n_groups_; ++g) {
            if (g == cur) continue;  // delta is exactly zero
            Eigen::VectorXd v = detail::node_coefficients(params_, labels_, w_, i, g);
            double delta = sse(i, v, stats_[i].gram * v) - node_q_[i] * horizon_;
            for (const auto& f : followers_[i]) {
                const double dv = params_.beta(labels_[f.node], g) - params_.beta(labels_[f.node], cur);
                if (dv != 0.0) delta += follower_delta(f.node, f.slot, dv);
            }
            // argmin with ties to the smallest group index: a candidate with
            // g < best_g wins on equality, g > best_g needs strict decrease.
            const bool wins = (delta < best_delta) || (delta == best_delta && g < best_g);
            if (wins) {
                best_delta = delta;
                best_g = g;
                best_v = std::move(v);
            }
        }
        if (best_g == cur) return false;
        commit(i, best_g, best_v);
        return true;
    }

    void commit(int i, int g, const Eigen::VectorXd& v) {
        const int old = labels_[i];
        for (const auto& f : followers_[i]) {
            const double dv = params_.beta(labels_[f.node], g) - params_.beta(labels_[f.node], old);
            if (dv == 0.0) continue;
            node_q_[f.node] += follower_delta(f.node, f.slot, dv) / horizon_;
            coef_[f.node][f.slot] += dv;
            gram_coef_[f.node] += dv * stats_[f.node].gram.col(f.slot);
        }
        labels_[i] = g;
        coef_[i] = v;
        gram_coef_[i] = stats_[i].gram * v;
        node_q_[i] = sse(i, coef_[i], gram_coef_[i]) / horizon_;
    }

    const WeightMatrix& w_;
    const std::vector<NodeStats>& stats_;
    const std::vector<std::vector<FollowerRef>>& followers_;
    int n_, horizon_, p_, n_groups_;
    GnarParams params_;
    Membership labels_;
    std::vector<Eigen::VectorXd> coef_;
    std::vector<Eigen::VectorXd> gram_coef_;
    std::vector<double> node_q_;
    mutable std::vector<int> map_;
};

struct RestartOutcome {
    GnarParams params;
    Membership labels;
    std::vector<double> trace;
    std::vector<double> node_q;
    bool converged = false;
    int iterations = 0;
};

RestartOutcome run_restart(SweepEngine& engine, const Membership& init, const FitOptions& options) {
    RestartOutcome out;
    engine.set_labels(init);
    engine.solve_groups();
    engine.refresh();
    out.trace.push_back(engine.total_loss());
    for (int it = 1; it <= options.max_iter; ++it) {
        out.iterations = it;
        const bool changed = engine.sweep();
        if (!changed) {
            // Stable membership: the previous solve is already optimal for
            // these labels, so the relative loss decrease is zero too and
            // both halves of the convergence criterion hold.
            out.converged = true;
            break;
        }
        engine.solve_groups();
        engine.refresh();
        out.trace.push_back(engine.total_loss());
    }
    out.params = engine.params();
    out.labels = engine.labels();
    out.node_q = engine.node_loss();
    return out;
}

std::vector<GroupGram> final_grams(const SweepEngine& engine, int n_groups, int dim, int horizon) {
    std::vector<Eigen::MatrixXd> xtx(n_groups, Eigen::MatrixXd::Zero(dim, dim));
    std::vector<Eigen::VectorXd> xty(n_groups, Eigen::VectorXd::Zero(dim));
    std::vector<long> members(n_groups, 0);
    engine.accumulate_grams(xtx, xty, members);
    std::vector<GroupGram> grams(n_groups);
    for (int g = 0; g < n_groups; ++g) {
        grams[g].xtx = std::move(xtx[g]);
        grams[g].xty = std::move(xty[g]);
        grams[g].n_members = members[g];
        grams[g].rows = members[g] * horizon;
    }
    return grams;
}

}  // namespace

Membership update_memberships(const GnarParams& params, const Membership& mem, const Panel& panel,
                              const WeightMatrix& w) {
    params.validate();
    check_membership(mem, params.n_groups, panel.n_nodes());
    const auto stats = detail::build_node_stats(panel, w);
    const auto followers = build_followers(w);
    SweepEngine engine(panel, w, params.n_groups, stats, followers);
    engine.set_labels(mem);
    engine.set_params(params);
    engine.refresh();
    engine.sweep();
    return engine.labels();
}

FitResult solve_at(const Panel& panel, const WeightMatrix& w, int n_groups, const Membership& mem) {
    check_membership(mem, n_groups, panel.n_nodes());
    const auto stats = detail::build_node_stats(panel, w);
    const auto followers = build_followers(w);
    SweepEngine engine(panel, w, n_groups, stats, followers);
    engine.set_labels(mem);
    engine.solve_groups();
    engine.refresh();

    FitResult result;
    result.params = engine.params();
    result.membership = mem;
    result.node_loss = engine.node_loss();
    result.loss = engine.total_loss();
    result.loss_trace = {result.loss};
    result.converged = true;
    result.n_iterations = 0;
    result.init_index = 0;
    result.grams = final_grams(engine, n_groups, n_groups + panel.n_covariates() + 1,
                               panel.horizon());
    return result;
}

FitResult fit(const Panel& panel, const WeightMatrix& w, int n_groups,
              const std::vector<Membership>& init_pool, const FitOptions& options) {
    if (init_pool.empty()) throw std::invalid_argument("fit: init_pool must be nonempty");
    panel.validate();
    for (const auto& mem : init_pool) check_membership(mem, n_groups, panel.n_nodes());

    const auto stats = detail::build_node_stats(panel, w);
    const auto followers = build_followers(w);

    const int n_restarts = static_cast<int>(init_pool.size());
    std::vector<RestartOutcome> outcomes(n_restarts);
    parallel_for(n_restarts, options.threads, [&](int r) {
        SweepEngine engine(panel, w, n_groups, stats, followers);
        outcomes[r] = run_restart(engine, init_pool[r], options);
    });

    int best = -1;
    for (int r = 0; r < n_restarts; ++r) {
        const double q = outcomes[r].trace.back();
        if (!std::isfinite(q)) continue;
        if (best < 0 || q < outcomes[best].trace.back()) best = r;
    }
    if (best < 0) throw std::runtime_error("fit: no restart produced a finite loss");

    RestartOutcome& winner = outcomes[best];
    FitResult result;
    result.params = std::move(winner.params);
    result.membership = winner.labels;
    result.loss = winner.trace.back();
    result.loss_trace = std::move(winner.trace);
    result.node_loss = std::move(winner.node_q);
    result.converged = winner.converged;
    result.n_iterations = winner.iterations;
    result.init_index = best;

    SweepEngine engine(panel, w, n_groups, stats, followers);
    engine.set_labels(result.membership);
    result.grams = final_grams(engine, n_groups, n_groups + panel.n_covariates() + 1,
                               panel.horizon());
    return result;
}

}  // namespace gnar
