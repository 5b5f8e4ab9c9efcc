#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "gnar/refine.hpp"

using namespace gnar;
using namespace gnar::testing;

namespace {

// Direct residual evaluation of the node loss with an explicit own-row /
// followee-label assignment for the network part and theta from group g.
double node_loss_at(const FitResult& fit, const Panel& panel, const WeightMatrix& w, int node,
                    int theta_group, int own_row, const std::vector<int>& neighbor_labels) {
    const auto& nb = w.neighbors[node];
    const int horizon = panel.horizon();
    double sse = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        double pred = panel.z.row(node).dot(fit.params.zeta.row(theta_group)) +
                      fit.params.nu[theta_group] * panel.y(node, t - 1);
        for (std::size_t k = 0; k < nb.size(); ++k)
            pred += fit.params.beta(own_row, neighbor_labels[k]) * w.values[node][k] *
                    panel.y(nb[k], t - 1);
        const double r = panel.y(node, t) - pred;
        sse += r * r;
    }
    return sse / horizon;
}

}  // namespace

TEST_SUITE_BEGIN("refine");

TEST_CASE("tiny neighborhood profile loss equals a manual enumeration") {
    // node 0 follows exactly one node, so the candidate set has 4 members
    Instance inst;
    inst.net = make_network(
        6, {{0, 1}, {1, 0}, {1, 2}, {2, 0}, {2, 1}, {2, 3}, {3, 2}, {3, 4}, {4, 3}, {4, 5},
            {5, 4}, {5, 0}});
    inst.w = row_normalize(inst.net);
    Rng rng(111);
    inst.params = random_stationary_params(2, 1, rng);
    inst.truth = random_membership(6, 2, rng);
    inst.panel = simulate(inst.params, inst.truth, inst.w, random_covariates(6, 1, rng), 20, 50,
                          {0.7}, 112);
    const FitResult fit = solve_at(inst.panel, inst.w, 2, inst.truth);
    const int node = 0;
    REQUIRE(inst.w.out_degree(node) == 1);
    for (int g = 0; g < 2; ++g) {
        double manual = std::numeric_limits<double>::infinity();
        for (int r = 0; r < 2; ++r)
            for (int h = 0; h < 2; ++h)
                manual = std::min(manual, node_loss_at(fit, inst.panel, inst.w, node, g, r, {h}));
        const double profiled = profile_loss(node, g, fit, inst.panel, inst.w);
        CHECK(profiled == doctest::Approx(manual).epsilon(1e-10));
    }
}

TEST_CASE("profile loss vanishes at the true group on noiseless data") {
    const Instance inst = scenario_instance(1, 2, 20, 40, 0.0, 113, 2, 10);
    const FitResult fit = solve_at(inst.panel, inst.w, 2, inst.truth);
    for (int i = 0; i < 20; ++i)
        CHECK(profile_loss(i, inst.truth[i], fit, inst.panel, inst.w) <= 1e-12);
}

TEST_CASE("coordinate descent matches enumeration on small neighborhoods") {
    Rng rng(115);
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 30; ++seed) {
        const Instance inst = random_instance(12, 25, 2, 1, 0.8, 500 + seed);
        const FitResult fit = solve_at(inst.panel, inst.w, 2, inst.truth);
        for (int i = 0; i < 12 && checked < 30; ++i) {
            if (inst.w.out_degree(i) != 3) continue;
            for (int g = 0; g < 2; ++g) {
                const double exact = profile_loss(i, g, fit, inst.panel, inst.w, 4096);
                const double heuristic = profile_loss(i, g, fit, inst.panel, inst.w, 1);
                CHECK(std::abs(exact - heuristic) <= 1e-10 * std::max(1.0, exact));
            }
            ++checked;
        }
    }
}

TEST_CASE("constant node losses floor the threshold") {
    FitResult fit;
    fit.params = GnarParams::zero(2, 1);
    fit.membership = {0, 0, 1, 1};
    fit.node_loss = {0.3, 0.3, 0.3, 0.3};
    const WeightMatrix w = row_normalize(make_network(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}}));
    Panel panel;
    panel.y = Eigen::MatrixXd::Zero(4, 3);
    panel.z = Eigen::MatrixXd::Zero(4, 1);
    CHECK(default_threshold(fit, panel, w) == 1e-12);
}

TEST_CASE("single-group threshold is twice the loss spread") {
    Rng rng(117);
    const Instance inst = random_instance(50, 30, 1, 2, 1.0, 118);
    const FitResult fit = solve_at(inst.panel, inst.w, 1, Membership(50, 0));
    double mean = 0.0;
    for (double q : fit.node_loss) mean += q;
    mean /= 50;
    double var = 0.0;
    for (double q : fit.node_loss) var += (q - mean) * (q - mean);
    const double sd = std::sqrt(var / 49);
    CHECK(default_threshold(fit, inst.panel, inst.w) == doctest::Approx(2.0 * sd).epsilon(1e-12));
}

TEST_CASE("threshold matches a direct groupwise recomputation") {
    const Instance inst = random_instance(50, 40, 3, 2, 1.0, 119);
    const FitResult fit = solve_at(inst.panel, inst.w, 3, inst.truth);
    double expected = 0.0;
    for (int g = 0; g < 3; ++g) {
        std::vector<double> qs;
        for (int i = 0; i < 50; ++i)
            if (inst.truth[i] == g) qs.push_back(fit.node_loss[i]);
        if (qs.size() < 2) continue;
        double mean = 0.0;
        for (double q : qs) mean += q;
        mean /= static_cast<double>(qs.size());
        double var = 0.0;
        for (double q : qs) var += (q - mean) * (q - mean);
        expected += std::sqrt(var / (static_cast<double>(qs.size()) - 1.0));
    }
    expected *= 2.0 / 3.0;
    CHECK(default_threshold(fit, inst.panel, inst.w) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("infinite threshold forbids switching") {
    const Instance inst = random_instance(20, 30, 2, 2, 1.0, 121);
    const FitResult fit = solve_at(inst.panel, inst.w, 2, inst.truth);
    const RefinementReport report =
        refine(fit, inst.panel, inst.w, std::numeric_limits<double>::infinity());
    CHECK(report.switched.empty());
    CHECK(report.labels_after == fit.membership);
}

TEST_CASE("refinement is a no-op and idempotent on an exact fit") {
    const Instance inst = scenario_instance(1, 2, 30, 50, 0.0, 123, 3, 10);
    const FitResult fit = solve_at(inst.panel, inst.w, 2, inst.truth);
    const RefinementReport first = refine(fit, inst.panel, inst.w);
    CHECK(first.switched.empty());
    const RefinementReport second = refine(fit, inst.panel, inst.w, first.delta_threshold);
    CHECK(second.labels_after == first.labels_after);
}

TEST_CASE("a planted mislabeled node is the only switch") {
    // Noiseless transient data (no burn-in) so every column is informative;
    // the planted node has a small out-degree, which limits how much the
    // profiled network part can mask the wrong momentum / fixed effects.
    const Instance inst = scenario_instance(1, 2, 100, 25, 0.0, 126, 5, 0);
    int planted = 0;
    for (int i = 1; i < 100; ++i)
        if (inst.w.out_degree(i) < inst.w.out_degree(planted)) planted = i;
    Membership corrupted = inst.truth;
    corrupted[planted] = 1 - corrupted[planted];
    const FitResult fit = solve_at(inst.panel, inst.w, 2, corrupted);
    const RefinementReport report = refine(fit, inst.panel, inst.w);
    REQUIRE(report.switched.size() == 1);
    CHECK(report.switched[0] == planted);
    CHECK(report.labels_after == inst.truth);
}

TEST_CASE("profiling never exceeds the node loss at the fitted labels") {
    const Instance inst = random_instance(25, 40, 3, 2, 1.0, 127);
    const FitResult fit = solve_at(inst.panel, inst.w, 3, inst.truth);
    for (int i = 0; i < 25; ++i) {
        std::vector<int> fitted_neighbors;
        for (int j : inst.w.neighbors[i]) fitted_neighbors.push_back(fit.membership[j]);
        for (int g = 0; g < 3; ++g) {
            const double at_fitted = node_loss_at(fit, inst.panel, inst.w, i, g,
                                                  fit.membership[i], fitted_neighbors);
            CHECK(profile_loss(i, g, fit, inst.panel, inst.w) <= at_fitted + 1e-12);
        }
    }
}

TEST_SUITE_END();
