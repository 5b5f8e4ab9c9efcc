#include "gnar/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gnar/rng.hpp"

namespace gnar {

bool Network::has_edge(int from, int to) const {
    const auto& row = followees[from];
    return std::binary_search(row.begin(), row.end(), to);
}

Eigen::MatrixXd Network::dense_adjacency() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    for (int i = 0; i < n_nodes; ++i)
        for (int j : followees[i]) a(i, j) = 1.0;
    return a;
}

Network make_network(int n_nodes, const std::vector<std::pair<int, int>>& edges) {
    if (n_nodes <= 0) throw std::invalid_argument("make_network: n_nodes must be positive");
    Network net;
    net.n_nodes = n_nodes;
    net.followees.assign(n_nodes, {});
    for (const auto& [from, to] : edges) {
        if (from < 0 || from >= n_nodes || to < 0 || to >= n_nodes)
            throw std::invalid_argument("make_network: node id out of range");
        if (from == to) throw std::invalid_argument("make_network: self-loop not allowed");
        net.followees[from].push_back(to);
    }
    net.out_degree.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        auto& row = net.followees[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        net.out_degree[i] = static_cast<int>(row.size());
    }
    return net;
}

Eigen::MatrixXd WeightMatrix::dense() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
    for (int i = 0; i < n_nodes; ++i)
        for (std::size_t k = 0; k < neighbors[i].size(); ++k) w(i, neighbors[i][k]) = values[i][k];
    return w;
}

Eigen::VectorXd WeightMatrix::apply(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        double acc = 0.0;
        const auto& nb = neighbors[i];
        const auto& vals = values[i];
        for (std::size_t k = 0; k < nb.size(); ++k) acc += vals[k] * y[nb[k]];
        out[i] = acc;
    }
    return out;
}

Eigen::VectorXd WeightMatrix::apply_transpose(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        const auto& nb = neighbors[i];
        const auto& vals = values[i];
        for (std::size_t k = 0; k < nb.size(); ++k) out[nb[k]] += vals[k] * y[i];
    }
    return out;
}

WeightMatrix row_normalize(const Network& net) {
    WeightMatrix w;
    w.n_nodes = net.n_nodes;
    w.neighbors.resize(net.n_nodes);
    w.values.resize(net.n_nodes);
    for (int i = 0; i < net.n_nodes; ++i) {
        if (net.out_degree[i] == 0)
            throw std::domain_error("row_normalize: node " + std::to_string(i + 1) +
                                    " has out-degree zero");
        w.neighbors[i] = net.followees[i];
        w.values[i].assign(net.followees[i].size(), 1.0 / net.out_degree[i]);
    }
    return w;
}

namespace {

void finalize(Network& net) {
    for (int i = 0; i < net.n_nodes; ++i) {
        auto& row = net.followees[i];
        std::sort(row.begin(), row.end());
        net.out_degree[i] = static_cast<int>(row.size());
    }
}

// Give every node with no followees one edge to a uniformly random other node.
void repair_isolated(Network& net, Rng& rng) {
    for (int i = 0; i < net.n_nodes; ++i) {
        if (!net.followees[i].empty()) continue;
        int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(net.n_nodes - 1)));
        if (target >= i) ++target;
        net.followees[i].push_back(target);
    }
}

}  // namespace

std::vector<int> sbm_community_sizes(int n_nodes, int communities) {
    std::vector<int> sizes(communities, n_nodes / communities);
    for (int c = 0; c < n_nodes % communities; ++c) ++sizes[c];
    return sizes;
}

std::vector<int> sbm_community_labels(int n_nodes, int communities) {
    const auto sizes = sbm_community_sizes(n_nodes, communities);
    std::vector<int> labels(n_nodes);
    int node = 0;
    for (int c = 0; c < communities; ++c)
        for (int k = 0; k < sizes[c]; ++k) labels[node++] = c;
    return labels;
}

Network gen_sbm(int n_nodes, int communities, std::uint64_t rng_seed) {
    if (communities < 1 || n_nodes < communities)
        throw std::invalid_argument("gen_sbm: need n_nodes >= communities >= 1");
    const auto labels = sbm_community_labels(n_nodes, communities);
    const double base = std::log(static_cast<double>(n_nodes)) / n_nodes;
    const double p_in = std::min(1.0, 2.0 * base);
    const double p_out = std::min(1.0, base);

    Rng rng(rng_seed);
    Network net;
    net.n_nodes = n_nodes;
    net.followees.assign(n_nodes, {});
    net.out_degree.assign(n_nodes, 0);
    for (int i = 0; i < n_nodes; ++i) {
        for (int j = 0; j < n_nodes; ++j) {
            if (i == j) continue;
            const double p = labels[i] == labels[j] ? p_in : p_out;
            if (rng.bernoulli(p)) net.followees[i].push_back(j);
        }
    }
    repair_isolated(net, rng);
    finalize(net);
    return net;
}

std::vector<double> powerlaw_pmf(int cap) {
    std::vector<double> pmf(cap);
    double total = 0.0;
    for (int k = 1; k <= cap; ++k) total += std::pow(static_cast<double>(k), -2.5);
    for (int k = 1; k <= cap; ++k) pmf[k - 1] = std::pow(static_cast<double>(k), -2.5) / total;
    return pmf;
}

int powerlaw_indegree(int dtilde, int n_nodes) { return std::min(4 * dtilde, n_nodes - 1); }

Network gen_powerlaw(int n_nodes, std::uint64_t rng_seed) {
    if (n_nodes < 5) throw std::invalid_argument("gen_powerlaw: need n_nodes >= 5");
    const auto pmf = powerlaw_pmf(n_nodes);
    std::vector<double> cdf(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());

    Rng rng(rng_seed);
    Network net;
    net.n_nodes = n_nodes;
    net.followees.assign(n_nodes, {});
    net.out_degree.assign(n_nodes, 0);
    for (int i = 0; i < n_nodes; ++i) {
        const double u = rng.uniform01();
        const int dtilde =
            static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
        const int indeg = powerlaw_indegree(dtilde, n_nodes);
        // Followers of i drawn without replacement from all other nodes.
        auto picks = rng.sample_distinct(n_nodes - 1, indeg);
        for (int f : picks) {
            if (f >= i) ++f;
            net.followees[f].push_back(i);
        }
    }
    repair_isolated(net, rng);
    finalize(net);
    return net;
}

double degree_quantile(const std::vector<int>& degrees, double q) {
    if (degrees.empty()) throw std::invalid_argument("degree_quantile: empty input");
    std::vector<double> sorted(degrees.begin(), degrees.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

NetDiagnostics diagnostics(const Network& net, const WeightMatrix& w) {
    constexpr double kTol = 1e-10;
    constexpr int kMaxIter = 10000;
    const int n = net.n_nodes;

    NetDiagnostics d;
    // Stationary distribution: p <- W'p preserves the simplex for a
    // row-stochastic W, so no renormalization is needed.
    Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int it = 0; it < kMaxIter; ++it) {
        Eigen::VectorXd next = w.apply_transpose(p);
        const double diff = (next - p).lpNorm<Eigen::Infinity>();
        p = next;
        d.stationary_iterations = it + 1;
        if (diff <= kTol) {
            d.stationary_converged = true;
            break;
        }
    }
    d.stationary_dist = p;
    d.r_p = p.squaredNorm();

    // Largest singular value of the symmetric W + W': power iteration.
    Rng rng(0x9a3c5e1fULL);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < kMaxIter; ++it) {
        Eigen::VectorXd sv = w.apply(v) + w.apply_transpose(v);
        const double norm = sv.norm();
        if (norm == 0.0) break;
        sv /= norm;
        const double next = norm;  // Rayleigh quotient of the unit iterate
        const bool done = std::abs(next - lambda) <= kTol && it > 0;
        lambda = next;
        v = sv;
        if (done) {
            d.sigma_converged = true;
            break;
        }
    }
    d.sigma_max_sym = lambda;

    d.mean_degree =
        std::accumulate(net.out_degree.begin(), net.out_degree.end(), 0.0) / net.n_nodes;
    d.max_degree = *std::max_element(net.out_degree.begin(), net.out_degree.end());
    d.degree_q90 = degree_quantile(net.out_degree, 0.9);
    return d;
}

Network load_edge_csv(const std::string& path, int n_nodes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_edge_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_edge_csv: empty file " + path);
    std::vector<std::pair<int, int>> edges;
    int max_id = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw std::runtime_error("load_edge_csv: malformed line: " + line);
        const int from = std::stoi(a);
        const int to = std::stoi(b);
        if (from < 1 || to < 1)
            throw std::runtime_error("load_edge_csv: node ids are 1-based, got " + line);
        if (from == to) throw std::runtime_error("load_edge_csv: self-loop at node " + a);
        max_id = std::max({max_id, from, to});
        edges.emplace_back(from - 1, to - 1);
    }
    if (n_nodes == 0) n_nodes = max_id;
    if (max_id > n_nodes) throw std::runtime_error("load_edge_csv: node id exceeds n_nodes");
    return make_network(n_nodes, edges);
}

void save_edge_csv(const std::string& path, const Network& net) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_edge_csv: cannot open " + path);
    out << "from,to\n";
    for (int i = 0; i < net.n_nodes; ++i)
        for (int j : net.followees[i]) out << i + 1 << "," << j + 1 << "\n";
}

}  // namespace gnar
