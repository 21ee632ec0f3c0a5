import math

import numpy as np
import pytest

import stormgen as sg


def egpd_cdf_oracle(x, xi, sigma, kappa):
    h = 1.0 - (1.0 + xi * x / sigma) ** (-1.0 / xi)
    return h**kappa


def variogram_oracle(h, tau, b1, b2, a1, a2, v):
    d = np.hypot(h[0] - tau * v[0], h[1] - tau * v[1])
    return 2.0 * (b1 * d**a1 + b2 * abs(tau) ** a2)


def test_egpd_cdf_matches_closed_form():
    p = sg.EgpdParams(0.262, 0.591, 0.270)
    x = np.array([0.1, 0.5, 2.0, 10.0, 50.0])
    np.testing.assert_allclose(sg.egpd_cdf(x, p), egpd_cdf_oracle(x, 0.262, 0.591, 0.270), rtol=1e-12)


def test_egpd_quantile_inverts_cdf():
    p = sg.EgpdParams(0.1, 1.3, 0.8)
    u = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(sg.egpd_cdf(sg.egpd_quantile(u, p), p), u, atol=1e-12)


def test_fit_egpd_recovers_parameters():
    p = sg.EgpdParams(0.2, 1.0, 0.7)
    rng = np.random.default_rng(7)
    x = sg.egpd_quantile(rng.uniform(size=4000), p)
    fit = sg.fit_egpd(x, precision=0.01)
    assert abs(fit.params.xi - 0.2) < 0.1
    assert abs(fit.params.sigma - 1.0) < 0.2
    assert abs(fit.params.kappa - 0.7) < 0.1
    assert fit.n == 4000


def test_variogram_and_chi():
    theta = sg.VariogramParams(0.4, 0.2, 1.5, 0.8)
    v = (0.3, -0.1)
    for h, tau in [((1.0, 0.0), 0), ((2.0, 1.0), 3), ((-1.5, 0.5), 1)]:
        g = variogram_oracle(h, tau, 0.4, 0.2, 1.5, 0.8, v)
        assert sg.variogram(h, tau, theta, v) == pytest.approx(g, rel=1e-12)
        chi = sg.chi_r(h, tau, theta, v)
        assert chi == pytest.approx(math.erfc(math.sqrt(g) / 2.0), rel=1e-12)
        assert sg.inverse_chi(chi) == pytest.approx(g, rel=1e-8)


def test_transform_advection():
    adv = sg.AdvectionTransform(1.2, 0.5)
    vx, vy = sg.transform_advection((3.0, 4.0), adv)
    assert vx == pytest.approx(1.2 * 5.0**0.5 * 0.6)
    assert vy == pytest.approx(1.2 * 5.0**0.5 * 0.8)


def test_rpareto_anchor_equals_radius():
    coords = np.array([[x, y] for y in range(3) for x in range(3)], dtype=float)
    theta = sg.VariogramParams(0.5, 0.3, 1.0, 1.0)
    y, r = sg.simulate_rpareto(coords, 4, 4, theta, (0.5, 0.0), seed=11)
    assert y.shape == (4, 9)
    assert y[0, 4] == r
    assert r >= 1.0
    assert np.all(y > 0.0)


def test_generate_episode_is_reproducible():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    theta = sg.VariogramParams(0.5, 0.3, 1.0, 1.0)
    margin = sg.MarginalModel(0.9, sg.EgpdParams(0.2, 1.0, 0.5))
    a = sg.generate_episode(coords, 3, 0, theta, (1.0, 0.0), sg.AdvectionTransform(1.0, 1.0), 2.0, margin, seed=5)
    b = sg.generate_episode(coords, 3, 0, theta, (1.0, 0.0), sg.AdvectionTransform(1.0, 1.0), 2.0, margin, seed=5)
    np.testing.assert_array_equal(a["x"], b["x"])
    assert a["x"].shape == (3, 3)
    assert np.all(a["x"] >= 0.0)


def test_select_episodes_finds_isolated_peaks():
    coords = np.array([[0.0, 0.0], [5000.0, 0.0]])
    values = np.full((200, 2), 0.5)
    values[50, 0] = 20.0
    values[150, 1] = 30.0
    cat = sg.select_episodes(values, coords, q=0.95, delta=6, min_separation=1000.0)
    picked = sorted((e["t0"], e["site"]) for e in cat.episodes)
    assert picked == [(50, 0), (150, 1)]


def test_estimate_velocity_on_translating_blob():
    coords = np.array([[x, y] for y in range(10) for x in range(10)], dtype=float)
    values = np.zeros((4, 100))
    for t in range(4):
        values[t, 2 * 10 + 2 + t] = 5.0
    (vx, vy), n = sg.estimate_velocity(values, coords, 0, 3)
    assert (vx, vy) == pytest.approx((1.0, 0.0))
    assert n == 3


def test_fit_variogram_on_simulated_catalog():
    coords = np.array([[x, y] for y in range(4) for x in range(4)], dtype=float)
    theta = sg.VariogramParams(0.4, 0.3, 1.2, 0.8)
    adv = sg.AdvectionTransform(1.0, 1.0)
    cat = sg.simulate_catalog(coords, 4, 150, theta, adv, seed=3)
    assert cat.n_episodes == 150
    ll_true = sg.composite_loglik(theta, adv, cat, 1.0, 3)
    fit = sg.fit_variogram(cat, 1.0, 3, sg.VariogramParams(0.5, 0.5, 1.0, 1.0), fixed_adv=adv)
    assert np.isfinite(ll_true)
    assert fit.loglik >= ll_true - 1e-9
    assert fit.adv.eta1 == 1.0 and fit.adv.eta2 == 1.0


def test_invalid_parameters_raise():
    with pytest.raises(Exception):
        sg.egpd_cdf(np.array([1.0]), sg.EgpdParams(0.1, -1.0, 1.0))
