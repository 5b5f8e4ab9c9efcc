"""End-to-end smoke tests for the python bindings."""

import numpy as np
import pytest

import gnar


@pytest.fixture(scope="module")
def instance():
    net = gnar.gen_sbm(40, 4, seed=11)
    w = gnar.row_normalize(net)
    params = gnar.scenario_params(1, 2)
    rng = np.random.default_rng(3)
    mem = [int(g) for g in rng.integers(0, 2, size=40)]
    z = rng.normal(size=(40, 2))
    y = gnar.simulate(params, mem, w, z, horizon=200, burn_in=200, sigma=1.0, seed=5)
    return net, w, params, mem, z, y


def test_network_generation_and_diagnostics():
    net = gnar.gen_sbm(60, 5, seed=2)
    assert net.n_nodes == 60
    assert min(net.out_degree) >= 1
    w = gnar.row_normalize(net)
    dense = w.dense()
    assert np.allclose(dense.sum(axis=1), 1.0, atol=1e-12)
    diag = gnar.diagnostics(net, w)
    assert diag.stationary_converged
    assert abs(diag.stationary_dist.sum() - 1.0) < 1e-9
    assert diag.mean_degree <= diag.max_degree

    pl = gnar.gen_powerlaw(30, seed=4)
    assert min(pl.out_degree) >= 1


def test_simulate_is_deterministic(instance):
    net, w, params, mem, z, y = instance
    y2 = gnar.simulate(params, mem, w, z, horizon=200, burn_in=200, sigma=1.0, seed=5)
    assert np.array_equal(y, y2)
    assert y.shape == (40, 201)


def test_stationarity_check():
    params = gnar.scenario_params(1, 2)
    stationary, margin = gnar.check_stationarity(params)
    assert stationary
    assert margin == pytest.approx(0.1)


def test_fit_recovers_groups(instance):
    net, w, params, mem, z, y = instance
    pool = gnar.init_pool(y, z, w, 2, restarts=30, seed=7)
    result = gnar.fit(y, z, w, 2, pool)
    assert result.converged
    assert gnar.membership_error(result.membership, 2, mem, 2) <= 0.05
    assert result.loss_trace == sorted(result.loss_trace, reverse=True)
    rmse_beta, rmse_nu, rmse_zeta, _perm = gnar.rmse_perm(result.params, params)
    assert rmse_beta < 0.2
    assert rmse_nu < 0.1

    q, node_q = gnar.loss(result.params, result.membership, y, z, w)
    assert q == pytest.approx(result.loss, rel=1e-9)
    assert len(node_q) == 40


def test_refine_and_inference(instance):
    net, w, params, mem, z, y = instance
    pipeline = gnar.run_pipeline(y, z, w, 2, restarts=30, seed=7)
    report = pipeline.refinement
    assert report.delta_threshold > 0
    assert report.profile_losses.shape == (40, 2)

    inference = gnar.confidence_intervals(pipeline.refined, y, z, w, level=0.95)
    assert inference.sigma2_hat == pytest.approx(1.0, rel=0.2)
    for group in inference.groups:
        assert np.all(group.ci_lo[~np.isnan(group.ci_lo)] <=
                      group.estimate[~np.isnan(group.ci_lo)])
        assert np.all(group.estimate[~np.isnan(group.ci_hi)] <=
                      group.ci_hi[~np.isnan(group.ci_hi)])


def test_selection_on_grid(instance):
    net, w, params, mem, z, y = instance
    selection = gnar.select_g(y, z, w, [1, 2, 3], restarts=10, seed=9)
    assert selection.g_hat == 2
    assert list(selection.g_grid) == [1, 2, 3]
    assert len(selection.gic_values) == 3


def test_preprocess_real():
    rng = np.random.default_rng(0)
    counts = rng.poisson(5.0, size=(8, 12)).astype(float)
    out = gnar.preprocess_real(counts, np.zeros((8, 1)))
    assert out.shape == (8, 12)
    assert np.allclose(out.mean(axis=0), 0.0, atol=1e-12)
    with pytest.raises(Exception):
        gnar.preprocess_real(-np.ones((3, 3)), np.zeros((3, 1)))


def test_kmeans_split():
    pts = np.array([[0.0], [0.2], [9.0], [9.3]])
    labels, centroids, inertia = gnar.kmeans(pts, 2, seed=1)
    assert labels[0] == labels[1]
    assert labels[2] == labels[3]
    assert labels[0] != labels[2]
