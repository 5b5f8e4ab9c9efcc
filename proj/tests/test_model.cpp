#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "gnar/campaign.hpp"
#include "gnar/model.hpp"

using namespace gnar;
using namespace gnar::testing;

TEST_SUITE_BEGIN("model");

TEST_CASE("transition matrix for one group and a mutual pair") {
    GnarParams params = GnarParams::zero(1, 0);
    params.beta(0, 0) = 0.3;
    params.nu[0] = 0.4;
    const WeightMatrix w = row_normalize(make_network(2, {{0, 1}, {1, 0}}));
    const Eigen::MatrixXd b = transition_matrix(params, {0, 0}, w);
    CHECK(b(0, 0) == 0.4);
    CHECK(b(0, 1) == 0.3);
    CHECK(b(1, 0) == 0.3);
    CHECK(b(1, 1) == 0.4);
}

TEST_CASE("transition matrix picks the cross-group effect") {
    const GnarParams params = scenario_params(1, 2);
    // node 0 in group 1, following only node 1 in group 2 (1-based naming)
    const WeightMatrix w = row_normalize(make_network(2, {{0, 1}, {1, 0}}));
    const Eigen::MatrixXd b = transition_matrix(params, {0, 1}, w);
    CHECK(b(0, 1) == doctest::Approx(-0.2));
    CHECK(b(0, 0) == doctest::Approx(0.4));
    CHECK(b(1, 0) == doctest::Approx(0.1));
    CHECK(b(1, 1) == doctest::Approx(0.6));
}

TEST_CASE("transition matrix equals an entrywise oracle on a random instance") {
    Rng rng(77);
    const Network net = gen_sbm(6, 2, 5);
    const WeightMatrix w = row_normalize(net);
    const GnarParams params = random_stationary_params(3, 2, rng);
    const Membership mem = random_membership(6, 3, rng);
    const Eigen::MatrixXd b = transition_matrix(params, mem, w);
    const Eigen::MatrixXd dense_w = w.dense();
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const double expected =
                i == j ? params.nu[mem[i]] : dense_w(i, j) * params.beta(mem[i], mem[j]);
            CHECK(b(i, j) == doctest::Approx(expected).epsilon(1e-15));
        }
    // off-diagonal support equals the support of W
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != j) CHECK((b(i, j) != 0.0) == (dense_w(i, j) != 0.0 && params.beta(mem[i], mem[j]) != 0.0));
}

TEST_CASE("stationarity check sums the max effects") {
    const auto table = check_stationarity(scenario_params(1, 2));
    CHECK(table.stationary);
    CHECK(table.margin == doctest::Approx(0.1).epsilon(1e-12));

    GnarParams boundary = GnarParams::zero(1, 0);
    boundary.beta(0, 0) = 0.5;
    boundary.nu[0] = 0.5;
    CHECK_FALSE(check_stationarity(boundary).stationary);

    const auto zero = check_stationarity(GnarParams::zero(2, 1));
    CHECK(zero.stationary);
    CHECK(zero.margin == 1.0);
}

TEST_CASE("noiseless zero-fixed-effect simulation stays at zero") {
    GnarParams params = GnarParams::zero(1, 1);
    params.beta(0, 0) = 0.3;
    params.nu[0] = 0.4;
    const WeightMatrix w = row_normalize(make_network(2, {{0, 1}, {1, 0}}));
    const Panel panel = simulate(params, {0, 0}, w, Eigen::MatrixXd::Zero(2, 1), 10, 50, {0.0}, 3);
    CHECK(panel.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure momentum series shows the AR(1) autocorrelation") {
    GnarParams params = GnarParams::zero(1, 1);
    params.nu[0] = 0.5;
    const WeightMatrix w = row_normalize(make_network(2, {{0, 1}, {1, 0}}));
    const int horizon = 100000;
    const Panel panel =
        simulate(params, {0, 0}, w, Eigen::MatrixXd::Zero(2, 1), horizon, 200, {1.0}, 21);
    for (int i = 0; i < 2; ++i) {
        const auto series = panel.y.row(i);
        const double mean = series.mean();
        double num = 0.0, den = 0.0;
        for (int t = 1; t <= horizon; ++t) {
            num += (series[t] - mean) * (series[t - 1] - mean);
            den += (series[t - 1] - mean) * (series[t - 1] - mean);
        }
        CHECK(num / den == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("long-run mean solves the fixed-point equation") {
    const int n = 50, horizon = 100000;
    const GnarParams params = scenario_params(1, 2);
    const Network net = gen_sbm(n, 5, 61);
    const WeightMatrix w = row_normalize(net);
    Rng rng(62);
    const Membership truth = random_membership(n, 2, rng);
    const Eigen::MatrixXd z = random_covariates(n, 2, rng);
    const Panel panel = simulate(params, truth, w, z, horizon, 500, {1.0}, 63);

    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = z.row(i).dot(params.zeta.row(truth[i]));
    const Eigen::MatrixXd b = transition_matrix(params, truth, w);
    const Eigen::VectorXd target =
        (Eigen::MatrixXd::Identity(n, n) - b).partialPivLu().solve(mu);

    // Batch-means standard errors soak up the serial correlation.
    const int batches = 20, width = horizon / batches;
    int within3 = 0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd batch_means(batches);
        for (int c = 0; c < batches; ++c)
            batch_means[c] = panel.y.row(i).segment(1 + c * width, width).mean();
        const double mean = batch_means.mean();
        const double sd = std::sqrt((batch_means.array() - mean).square().sum() / (batches - 1));
        const double se = sd / std::sqrt(static_cast<double>(batches));
        const double gap = std::abs(mean - target[i]);
        if (gap <= 3.0 * se) ++within3;
        CHECK(gap <= 8.0 * se);
    }
    CHECK(within3 >= 45);  // ~expected coverage of a 3-SE band over 50 nodes
}

TEST_CASE("simulation is deterministic and guards stationarity") {
    const GnarParams params = scenario_params(1, 2);
    const WeightMatrix w = row_normalize(gen_sbm(20, 2, 8));
    Rng rng(9);
    const Membership mem = random_membership(20, 2, rng);
    const Eigen::MatrixXd z = random_covariates(20, 2, rng);
    const Panel a = simulate(params, mem, w, z, 40, 100, {1.0}, 77);
    const Panel b = simulate(params, mem, w, z, 40, 100, {1.0}, 77);
    CHECK(a.y == b.y);

    GnarParams unstable = GnarParams::zero(1, 2);
    unstable.beta(0, 0) = 0.8;
    unstable.nu[0] = 0.7;
    const Membership ones(20, 0);
    CHECK_THROWS_AS(simulate(unstable, ones, w, z, 10, 0, {1.0}, 1), std::domain_error);
    const Panel forced = simulate(unstable, ones, w, z, 10, 0, {1.0}, 1, true);
    CHECK(forced.y.allFinite());
}

TEST_SUITE_END();
