#include "gnar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gnar {

std::vector<int> majority_map(const Membership& est, int n_groups_est, const Membership& truth,
                              int n_groups_true) {
    if (est.size() != truth.size())
        throw std::invalid_argument("majority_map: labelings must cover the same nodes");
    check_membership(est, n_groups_est, static_cast<int>(est.size()));
    check_membership(truth, n_groups_true, static_cast<int>(truth.size()));
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(n_groups_est, n_groups_true);
    for (std::size_t i = 0; i < est.size(); ++i) ++confusion(est[i], truth[i]);
    std::vector<int> chi(n_groups_est, 0);
    for (int g = 0; g < n_groups_est; ++g) {
        int best = 0;
        for (int t = 1; t < n_groups_true; ++t)
            if (confusion(g, t) > confusion(g, best)) best = t;
        chi[g] = best;  // empty cluster: all counts zero -> true group 0
    }
    return chi;
}

double membership_error(const Membership& est, int n_groups_est, const Membership& truth,
                        int n_groups_true) {
    const auto chi = majority_map(est, n_groups_est, truth, n_groups_true);
    long wrong = 0;
    for (std::size_t i = 0; i < est.size(); ++i)
        if (truth[i] != chi[est[i]]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(est.size());
}

double membership_error_perm(const Membership& est, const Membership& truth, int n_groups) {
    if (n_groups > 8) throw std::invalid_argument("membership_error_perm: G > 8");
    if (est.size() != truth.size())
        throw std::invalid_argument("membership_error_perm: size mismatch");
    std::vector<int> perm(n_groups);
    std::iota(perm.begin(), perm.end(), 0);
    long best = static_cast<long>(est.size()) + 1;
    do {
        long wrong = 0;
        for (std::size_t i = 0; i < est.size(); ++i)
            if (perm[est[i]] != truth[i]) ++wrong;
        best = std::min(best, wrong);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(est.size());
}

NodeAveragedRmse rmse_all(const GnarParams& est_params, const Membership& est_mem,
                          const GnarParams& true_params, const Membership& true_mem,
                          const WeightMatrix& w) {
    const int n = w.n_nodes;
    check_membership(est_mem, est_params.n_groups, n);
    check_membership(true_mem, true_params.n_groups, n);
    if (est_params.p != true_params.p) throw std::invalid_argument("rmse_all: p mismatch");

    const Eigen::MatrixXd b_est = transition_matrix(est_params, est_mem, w);
    const Eigen::MatrixXd b_true = transition_matrix(true_params, true_mem, w);
    NodeAveragedRmse out;
    for (int i = 0; i < n; ++i) {
        out.beta_all += (b_est.row(i) - b_true.row(i)).norm();
        out.nu_all += std::abs(est_params.nu[est_mem[i]] - true_params.nu[true_mem[i]]);
        out.zeta_all += (est_params.zeta.row(est_mem[i]) - true_params.zeta.row(true_mem[i])).norm();
    }
    out.beta_all /= n;
    out.nu_all /= n;
    out.zeta_all /= n;
    return out;
}

PermMatchedRmse rmse_perm(const GnarParams& est_params, const GnarParams& true_params) {
    const int g_count = true_params.n_groups;
    if (est_params.n_groups != g_count)
        throw std::invalid_argument("rmse_perm: requires G = G0");
    if (g_count > 8) throw std::invalid_argument("rmse_perm: G > 8 (factorial search)");

    std::vector<int> perm(g_count);
    std::iota(perm.begin(), perm.end(), 0);
    PermMatchedRmse out;
    double best = std::numeric_limits<double>::infinity();
    do {
        double err2 = 0.0;
        for (int g = 0; g < g_count; ++g)
            for (int h = 0; h < g_count; ++h) {
                const double d = est_params.beta(perm[g], perm[h]) - true_params.beta(g, h);
                err2 += d * d;
            }
        if (err2 < best) {
            best = err2;
            out.perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    out.beta = std::sqrt(best);
    double nu2 = 0.0, zeta2 = 0.0;
    for (int g = 0; g < g_count; ++g) {
        const double d = est_params.nu[out.perm[g]] - true_params.nu[g];
        nu2 += d * d;
        zeta2 += (est_params.zeta.row(out.perm[g]) - true_params.zeta.row(g)).squaredNorm();
    }
    out.nu = std::sqrt(nu2);
    out.zeta = std::sqrt(zeta2);
    return out;
}

CoverageIndicators coverage_indicators(const InferenceResult& inference,
                                       const std::vector<int>& perm,
                                       const GnarParams& true_params) {
    const int g_count = true_params.n_groups;
    const int p = true_params.p;
    if (static_cast<int>(perm.size()) != g_count || inference.n_groups != g_count)
        throw std::invalid_argument("coverage_indicators: dimension mismatch");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CoverageIndicators out;
    out.beta.setConstant(g_count, g_count, nan);
    out.nu.setConstant(g_count, nan);
    out.zeta.setConstant(g_count, p, nan);
    auto hit = [](const GroupInference& gi, int k, double truth) -> double {
        if (!gi.valid[k]) return std::numeric_limits<double>::quiet_NaN();
        return (truth >= gi.ci_lo[k] && truth <= gi.ci_hi[k]) ? 1.0 : 0.0;
    };
    for (int g = 0; g < g_count; ++g) {
        const GroupInference& gi = inference.groups[perm[g]];
        for (int h = 0; h < g_count; ++h)
            out.beta(g, h) = hit(gi, perm[h], true_params.beta(g, h));
        out.nu[g] = hit(gi, g_count, true_params.nu[g]);
        for (int j = 0; j < p; ++j)
            out.zeta(g, j) = hit(gi, g_count + 1 + j, true_params.zeta(g, j));
    }
    return out;
}

namespace {

// Mean over replications per entry, then fold |rate - level| (or the raw
// rate when level < 0) across the family.
double fold(const std::vector<Eigen::MatrixXd>& entries, double level) {
    if (entries.empty()) return 0.0;
    const Eigen::MatrixXd& first = entries.front();
    double acc = 0.0;
    long cells = 0;
    for (int r = 0; r < first.rows(); ++r)
        for (int c = 0; c < first.cols(); ++c) {
            double sum = 0.0;
            long count = 0;
            for (const auto& e : entries) {
                if (std::isnan(e(r, c))) continue;
                sum += e(r, c);
                ++count;
            }
            if (count == 0) continue;
            const double rate = sum / count;
            acc += level >= 0.0 ? std::abs(rate - level) : rate;
            ++cells;
        }
    return cells > 0 ? acc / cells : 0.0;
}

CoverageError fold_families(const std::vector<CoverageIndicators>& reps, double level) {
    std::vector<Eigen::MatrixXd> beta, nu, zeta;
    beta.reserve(reps.size());
    nu.reserve(reps.size());
    zeta.reserve(reps.size());
    for (const auto& r : reps) {
        beta.push_back(r.beta);
        nu.push_back(r.nu);
        zeta.push_back(r.zeta);
    }
    return {fold(beta, level), fold(nu, level), fold(zeta, level)};
}

}  // namespace

CoverageError coverage_error(const std::vector<CoverageIndicators>& replications, double level) {
    if (replications.empty()) throw std::invalid_argument("coverage_error: no replications");
    return fold_families(replications, level);
}

CoverageError mean_coverage(const std::vector<CoverageIndicators>& replications) {
    if (replications.empty()) throw std::invalid_argument("mean_coverage: no replications");
    return fold_families(replications, -1.0);
}

double msr(const std::vector<int>& selected, int n_groups) {
    if (selected.empty()) throw std::invalid_argument("msr: no replications");
    long hits = 0;
    for (int g : selected)
        if (g == n_groups) ++hits;
    return static_cast<double>(hits) / static_cast<double>(selected.size());
}

}  // namespace gnar
