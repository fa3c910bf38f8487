import math

import numpy as np
import pytest
from scipy.special import expit

from glmcmc import analysis
from glmcmc.errors import PreconditionViolated, SingularQ, UnboundedCurvature
from glmcmc.families import GlmFamily
from glmcmc.priors import Prior


@pytest.mark.parametrize("n,d", [(50, 2), (120, 5), (300, 12)])
def test_zellner_identity(n, d, rng):
    X = rng.standard_normal((n, d))
    kap = analysis.preconditioned_condition_number(X, Prior.zellner())
    assert kap == pytest.approx(1 + math.pi**2 / 12 * n / d, rel=1e-8)


def test_explicit_zellner_matrix(rng):
    n, d = 80, 4
    X = rng.standard_normal((n, d))
    Q = 3 * d / (n * math.pi**2) * X.T @ X
    assert analysis.preconditioned_condition_number(X, Q) == pytest.approx(1 + math.pi**2 / 12 * n / d, rel=1e-8)


def test_isotropic_identity(rng):
    X = rng.standard_normal((60, 3))
    c = 2.5
    lam = np.linalg.eigvalsh(X.T @ X)[-1]
    assert analysis.preconditioned_condition_number(X, c * np.eye(3)) == pytest.approx(1 + lam / (4 * c), rel=1e-12)


def test_scalar_case():
    assert analysis.preconditioned_condition_number(np.array([[2.0]]), np.array([[1.0]])) == pytest.approx(2.0)


def test_identity_against_direct_hessian(rng):
    """The whitened Hessian of the likelihood peaks at the origin where A'' = 1/4."""
    n, d = 40, 3
    X = rng.standard_normal((n, d))
    A = rng.standard_normal((d, d))
    Q = A @ A.T + np.eye(d)
    w, V = np.linalg.eigh(Q)
    R = (V / np.sqrt(w)) @ V.T
    H0 = X.T @ (0.25 * X)
    direct = 1 + np.linalg.eigvalsh(R @ H0 @ R)[-1]
    assert analysis.preconditioned_condition_number(X, Q) == pytest.approx(direct, rel=1e-8)
    for _ in range(20):
        th = rng.standard_normal(d)
        s = expit(X @ th)
        assert 1 + np.linalg.eigvalsh(R @ (X.T * (s * (1 - s))) @ X @ R)[-1] <= direct * (1 + 1e-12)


def test_condition_errors(rng):
    X = rng.standard_normal((10, 2))
    with pytest.raises(SingularQ):
        analysis.preconditioned_condition_number(X, np.diag([1.0, 0.0]))
    with pytest.raises(UnboundedCurvature):
        analysis.preconditioned_condition_number(X, np.eye(2), GlmFamily.poisson())


def test_isotropic_band_values():
    lo, hi = analysis.isotropic_condition_band(200, 10, 10.0)
    assert lo == pytest.approx(1 + (math.sqrt(200) - 2 * math.sqrt(10)) ** 2 / 160)
    assert hi == pytest.approx(1 + (2 * math.sqrt(200) + math.sqrt(10)) ** 2 / 40)


def test_curvature_constant_exceeds_one_sixth():
    assert analysis.curvature_coefficient(1.0) > 1 / 6
    _, b1, w2, b2 = analysis.gaussian_design_constants()
    assert b1 == pytest.approx(math.erf(2 / math.sqrt(2)), rel=1e-15)
    assert w2 == pytest.approx(4 / 9)


def test_linear_curvature_is_design_eigenvalue(rng):
    X = rng.standard_normal((30, 4))
    prof = analysis.local_min_curvature(GlmFamily.linear(), X, rng.standard_normal(4), 2.0, 16, rng)
    assert prof.empirical_min_eig == pytest.approx(np.linalg.eigvalsh(X.T @ X)[0], rel=1e-10)


def test_min_eig_power_iteration(rng):
    d = 80
    A = rng.standard_normal((200, d))
    M = A.T @ A
    assert analysis._min_eig(M, iters=2000) == pytest.approx(np.linalg.eigvalsh(M)[0], rel=0.05)


def test_smoothness_linear_and_clipped(rng):
    X = rng.standard_normal((50, 3))
    emp, th = analysis.smoothness_bound(GlmFamily.linear(), X, 1.0, 3.0)
    assert emp == pytest.approx(np.linalg.eigvalsh(X.T @ X)[-1])
    assert emp <= th
    emp2, _ = analysis.smoothness_bound(GlmFamily.poisson(2.0), X, 1.0, 3.0)
    assert emp2 == pytest.approx(math.e**2 * emp)
    with pytest.raises(UnboundedCurvature):
        analysis.smoothness_bound(GlmFamily.poisson(), X, 1.0, 3.0)


def test_smoothness_event_frequency():
    n, d = 400, 10
    hits = 0
    for seed in range(50):
        X = np.random.default_rng(seed).standard_normal((n, d))
        emp, th = analysis.smoothness_bound(GlmFamily.logistic(), X, 1.0, float(d))
        hits += emp <= th
    assert hits >= 50 * (1 - math.exp(-n / 2)) - 1e-9


def test_score_noise_free(rng):
    X = rng.standard_normal((20, 3))
    th = rng.standard_normal(3)
    fam = GlmFamily.logistic()
    assert analysis.score_norm(fam, th, X, fam.mean(X @ th)) == pytest.approx(0.0, abs=1e-12)


def test_linear_score_second_moment(rng):
    n, d, sigma = 50, 3, 1.3
    X = rng.standard_normal((n, d))
    fam = GlmFamily.linear(sigma)
    sq = [analysis.score_norm(fam, np.zeros(d), X, sigma * rng.standard_normal(n)) ** 2 for _ in range(200)]
    assert np.mean(sq) == pytest.approx(sigma**2 * np.trace(X.T @ X), rel=0.2)


def test_score_threshold_fields():
    thr = analysis.score_threshold(GlmFamily.logistic(), 0.1, 1000, 10, 1.0)
    assert thr["a"] == pytest.approx(6.4) and thr["y_star"] == 2.0
    assert thr["vacuous"] == (thr["prob_bound"] >= 1)


def test_tail_bound_formula():
    assert analysis.tail_mass_bound(9, 1, 1, 0) == pytest.approx(4 * math.exp(-27 / 8))
    for c, r, d in [(16, 2, 2), (36, 3, 1)]:
        assert analysis.tail_mass_bound(c, r, d, 0) == pytest.approx(2 ** (d + 1) * math.exp(-3 * c * r * r / 8))
    a = analysis.tail_mass_bound(16, 1, 1)
    b = analysis.tail_mass_bound(16, 2, 1)
    assert math.log(b / 4) == pytest.approx(4 * math.log(a / 4))
    with pytest.raises(PreconditionViolated):
        analysis.tail_mass_bound(4, 1, 1)


def test_oracle_gaussian():
    val = analysis.tail_mass_oracle(lambda x: 0.5 * x * x, 3.0, d=1)
    assert val == pytest.approx(2 * analysis.normal_cdf(-3.0), rel=1e-7)
    assert val == pytest.approx(2.6998e-3, rel=1e-4)
    assert analysis.tail_mass_oracle(lambda x: 0.5 * x * x, 0.0, d=1) == 1.0


def test_oracle_two_dimensional():
    # |x| of a standard 2-D Gaussian is Rayleigh: P(|x| > r) = exp(-r^2/2)
    val = analysis.tail_mass_oracle(lambda p: 0.5 * (p[0] ** 2 + p[1] ** 2), 1.5, d=2)
    assert val == pytest.approx(math.exp(-1.125), rel=1e-6)
    rad = analysis.tail_mass_oracle(lambda s: 0.5 * s * s, 1.5, d=2, radial=True)
    assert rad == pytest.approx(math.exp(-1.125), rel=1e-8)


def test_oracle_dominated_example():
    f = analysis.radial_potential(9.0, 1.0)
    assert analysis.tail_mass_oracle(f, 1.0, d=1) <= analysis.tail_mass_bound(9, 1, 1, 0)


TAIL_GRID = [(c, r, d, i) for c in (9.0, 16.0, 36.0) for r in (1.0, 2.0, 3.0) for d in (1, 2) for i in (0, 2)
             if r * math.sqrt(c / d) >= 3]


@pytest.mark.parametrize("c,r,d,i", TAIL_GRID)
def test_tail_dominance_grid(c, r, d, i):
    oracle = analysis.tail_mass_oracle(analysis.radial_potential(c, r), r, d, i, radial=True)
    assert oracle <= analysis.tail_mass_bound(c, r, d, i)


def _pairs():
    """20 potentials U = v + convex extra, with v the comparison potential of profile c 1[0, r0]."""
    out = []
    extras = [lambda x: 0.0 * x, lambda x: 0.3 * x * x, lambda x: np.logaddexp(x, -x) - math.log(2.0), lambda x: 0.1 * x**4,
              lambda x: np.abs(x) ** 1.5]
    for c, r0 in [(1.0, 1.0), (4.0, 0.5), (2.0, 2.0), (9.0, 1.0)]:
        for e in extras:
            out.append((c, r0, e))
    return out


@pytest.mark.parametrize("c,r0,extra", _pairs())
def test_stochastic_dominance_pairs(c, r0, extra):
    v = analysis.radial_potential(c, r0)

    def U(x):
        return float(v(x)) + float(extra(np.abs(x)))

    for r in (0.5, 1.0, 2.0, 3.0):
        assert analysis.tail_mass_oracle(U, r, d=1) <= analysis.tail_mass_oracle(v, r, d=1) * (1 + 1e-7)


def test_poisson_radius_zero_theta():
    for eps in (0.5, 1e-3, 1e-6):
        assert analysis.poisson_tail_level(eps, 0.0, 1.0) == pytest.approx(max(math.e**2, math.log(2 / eps)))
    assert analysis.poisson_tail_level(2 / math.e**2, 0.0, 1.0) == pytest.approx(math.e**2)


def test_poisson_radius_monotone():
    th = np.array([0.3, 0.1])
    base = analysis.poisson_radius(0.1, 0.1, 100, th, 1.0).r_star
    assert analysis.poisson_radius(0.1, 0.1, 200, th, 1.0).r_star >= base
    assert analysis.poisson_radius(0.05, 0.1, 100, th, 1.0).r_star >= base
    assert analysis.poisson_radius(0.1, 0.05, 100, th, 1.0).r_star >= base
    pr = analysis.poisson_radius(0.1, 0.1, 100, th, 1.0, lam_min=1.0, trace=2.0)
    assert pr.L_bar is not None and pr.L_bar > 0
    with pytest.raises(ValueError):
        analysis.poisson_radius(1.5, 0.1, 100, th, 1.0)


def test_gibbs_escape_probability_range():
    p = analysis.gibbs_escape_probability(10, 5.0, 2, 1.0, 10.0, 0.1)
    assert 0.0 <= p <= 1.0
    assert analysis.gibbs_escape_probability(20, 5.0, 2, 1.0, 10.0, 0.1) >= p
    with pytest.raises(PreconditionViolated):
        analysis.gibbs_escape_probability(1, 0.01, 2, 1.0, 10.0, 1.0)
