import math

import numpy as np
import pytest
from scipy import stats

from glmcmc.diagnostics import (coupled_contraction, contraction_factor, distance_report, ess, ks_stats,
                                marginal_tv, sliced_w2, w2_1d)
from glmcmc.errors import DimensionMismatch, EmptySamples
from glmcmc.samplers import HmcParams


def test_sliced_w2_identical(rng):
    a = rng.standard_normal((100, 3))
    assert sliced_w2(a, a, rng=rng) == 0.0


def test_point_masses():
    assert sliced_w2(np.zeros((5, 1)), np.ones((7, 1)), n_proj=3, rng=0) == pytest.approx(1.0)
    assert w2_1d([0.0], [1.0]) == 1.0


def test_w2_1d_unequal_sizes_oracle():
    # {0, 1} vs {0, 0.5, 1}: quantile functions differ on the middle third of levels
    x, y = [0.0, 1.0], [0.0, 0.5, 1.0]
    assert w2_1d(x, y) == pytest.approx(math.sqrt((1 / 6) * 0.25 + (1 / 6) * 0.25))


def test_shifted_gaussians(rng):
    M = 100_000
    a = rng.standard_normal((M, 2))
    b = rng.standard_normal((M, 2)) + [1.0, 0.0]
    V = rng.standard_normal((50, 2))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    est = sliced_w2(a, b, directions=V)
    oracle = np.mean([w2_1d(a @ v, b @ v) for v in V])
    assert est == pytest.approx(oracle, rel=1e-12)
    assert 0.5 <= est <= 1.0


def test_pseudometric(rng):
    V = rng.standard_normal((20, 2))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    for _ in range(100):
        a, b, c = (rng.standard_normal((30, 2)) * rng.uniform(0.5, 2) + rng.standard_normal(2) for _ in range(3))
        ab = sliced_w2(a, b, directions=V)
        assert ab == sliced_w2(b, a, directions=V)
        assert ab <= sliced_w2(a, c, directions=V) + sliced_w2(c, b, directions=V) + 1e-12


def test_sliced_w2_errors():
    with pytest.raises(DimensionMismatch):
        sliced_w2(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(EmptySamples):
        sliced_w2(np.zeros((0, 2)), np.zeros((3, 2)))


def test_tv_matched_and_shifted(rng):
    x = rng.standard_normal(100_000)
    assert marginal_tv(x, stats.norm.cdf) < 0.05
    assert marginal_tv(x, lambda t: stats.norm.cdf(t, loc=10.0)) > 0.9


def test_tv_decreases_with_m():
    means = []
    for k in range(5):
        M = 1000 * 2**k
        means.append(np.mean([marginal_tv(np.random.default_rng(r).standard_normal(M), stats.norm.cdf)
                              for r in range(20)]))
    assert all(b <= a for a, b in zip(means, means[1:]))


def test_ks_stats_forms(rng):
    S = rng.standard_normal((500, 2))
    k1 = ks_stats(S, stats.norm.cdf)
    assert k1.shape == (2,) and np.all(k1 < 1.63 / math.sqrt(500))
    k2 = ks_stats(S, S)
    np.testing.assert_array_equal(k2, 0.0)
    assert ks_stats(S[:, 0], S[:, 0] + 100.0)[0] == 1.0


def test_ess_white_noise(rng):
    x = rng.standard_normal(10_000)
    assert 0.8 <= ess(x) / x.size <= 1.2


def test_ess_ar1(rng):
    rho, M = 0.5, 100_000
    e = rng.standard_normal(M)
    x = np.empty(M)
    x[0] = e[0]
    for t in range(1, M):
        x[t] = rho * x[t - 1] + math.sqrt(1 - rho**2) * e[t]
    assert ess(x) / M == pytest.approx((1 - rho) / (1 + rho), rel=0.2)


def test_ess_constant():
    assert ess(np.full(100, 3.0)) >= 1.0
    with pytest.raises(ValueError):
        ess(np.zeros(5))


@pytest.mark.parametrize("u,c", [(1, 33 / 80), (0, 1 / 16)])
def test_contraction_quadratic(u, c):
    T = 8**-0.5 * 16 / 17
    p = HmcParams(N=1, h=T / 16, n_steps=16, u=u)
    assert contraction_factor(u) == c
    st = coupled_contraction(lambda q: q, 1.0, p, trials=100, rng=0)
    assert st.theory == pytest.approx(math.exp(-2 * c * T * T))
    assert st.violations(st.theory) == 0


def test_contraction_zero_distance_convention():
    p = HmcParams(N=1, h=0.05, n_steps=3, u=1)
    st = coupled_contraction(lambda q: q, 1.0, p, trials=5, rng=0, scale=0.0)
    np.testing.assert_array_equal(st.ratios, 0.0)


def test_contraction_deterministic():
    p = HmcParams(N=1, h=0.05, n_steps=3, u=1)
    a = coupled_contraction(lambda q: q, 1.0, p, trials=10, rng=7)
    b = coupled_contraction(lambda q: q, 1.0, p, trials=10, rng=7)
    np.testing.assert_array_equal(a.ratios, b.ratios)


def test_distance_report(rng):
    S = rng.standard_normal((2000, 2))
    R = rng.standard_normal((2000, 2))
    rep = distance_report(S, R, trace=S, rng=0).to_dict()
    assert rep["max_ks"] < 0.06 and rep["sliced_w2"] < 0.1 and rep["min_ess"] > 1000
