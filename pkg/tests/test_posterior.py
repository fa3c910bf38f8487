import os

import numpy as np
import pytest

from glmcmc.errors import DimensionMismatch, StaleCache
from glmcmc.families import GlmFamily
from glmcmc.posterior import Posterior, load_dataset, save_dataset
from glmcmc.priors import Prior

from conftest import FAMILIES, make_posterior, priors

CASES = [(f, p) for f in FAMILIES for p in ["flat", "gaussian", "zellner", "student_t", "student_t_indep"]]


@pytest.mark.parametrize("fam,pri", CASES)
def test_grad_hess_fd(fam, pri, rng):
    d = 4
    post = make_posterior(FAMILIES[fam], priors(d)[pri], n=30, d=d)
    for _ in range(10):
        th = 0.5 * rng.standard_normal(d)
        h = 1e-5 * (1 + np.linalg.norm(th))
        E = np.eye(d)
        g = np.array([(post.potential(th + h * e) - post.potential(th - h * e)) / (2 * h) for e in E])
        np.testing.assert_allclose(post.grad(th), g, rtol=1e-6, atol=1e-6 * (1 + np.abs(g).max()))
        H = np.array([(post.grad(th + h * e) - post.grad(th - h * e)) / (2 * h) for e in E])
        np.testing.assert_allclose(post.hess(th), H, rtol=1e-4, atol=1e-4 * (1 + np.abs(H).max()))


@pytest.mark.parametrize("fam,pri", CASES)
def test_grad_batch(fam, pri, rng):
    post = make_posterior(FAMILIES[fam], priors(3)[pri], n=20, d=3)
    T = 0.4 * rng.standard_normal((5, 3))
    np.testing.assert_allclose(post.grad_batch(T), np.array([post.grad(t) for t in T]), rtol=1e-12, atol=1e-12)


def test_hand_gradient():
    post = Posterior(GlmFamily.logistic(), Prior.flat(), np.array([[1.0]]), np.array([1.0]))
    assert post.grad(np.zeros(1))[0] == pytest.approx(-0.5)


def test_linear_ridge_critical_point(rng):
    n, d, sig = 50, 4, 0.7
    X = rng.standard_normal((n, d))
    Y = rng.standard_normal(n)
    Q = np.diag([1.0, 2.0, 3.0, 4.0])
    post = Posterior(GlmFamily.linear(sig), Prior.gaussian(Q), X, Y)
    th = np.linalg.solve(Q + X.T @ X / sig**2, X.T @ Y / sig**2)
    np.testing.assert_allclose(post.grad(th), 0.0, atol=1e-10)


@pytest.mark.parametrize("fam", list(FAMILIES))
def test_likelihood_convexity(fam, rng):
    post = make_posterior(FAMILIES[fam], Prior.flat(), n=30, d=3)
    for _ in range(200):
        th = rng.standard_normal(3)
        v = rng.standard_normal(3)
        assert v @ post.likelihood_hess(th) @ v >= -1e-12


def test_dimension_mismatch():
    post = make_posterior(GlmFamily.logistic(), Prior.flat(), n=10, d=2)
    with pytest.raises(DimensionMismatch):
        post.potential(np.zeros(3))
    with pytest.raises(DimensionMismatch):
        Posterior(GlmFamily.logistic(), Prior.flat(), np.zeros((3, 2)), np.zeros(4))


@pytest.mark.parametrize("fam,pri", CASES)
def test_conditional_slice_matches_potential(fam, pri, rng):
    d = 3
    post = make_posterior(FAMILIES[fam], priors(d)[pri], n=25, d=d)
    th = 0.3 * rng.standard_normal(d)
    proj = post.projections(th)
    for i in range(d):
        slc = post.conditional_slice(i, th, proj, check=True)
        ts = np.array([-0.7, 0.1, 0.9])
        full = []
        for t in ts:
            x = th.copy()
            x[i] = t
            full.append(post.potential(x))
        vals = slc.values(ts)
        diff = np.array(full) - vals
        np.testing.assert_allclose(diff - diff[0], 0.0, atol=1e-9 * (1 + np.abs(full).max()))
        assert slc(ts[1]) == pytest.approx(vals[1], rel=1e-13, abs=1e-12)
        v, d1, d2 = slc.derivatives(0.2)
        h = 1e-5
        assert d1 == pytest.approx((slc(0.2 + h) - slc(0.2 - h)) / (2 * h), rel=1e-6, abs=1e-6)
        assert d2 == pytest.approx((slc.derivatives(0.2 + h)[1] - slc.derivatives(0.2 - h)[1]) / (2 * h),
                                   rel=1e-4, abs=1e-4)


def test_slice_difference_depends_on_column_only(rng):
    post = make_posterior(GlmFamily.logistic(), Prior.flat(), n=20, d=3)
    th = rng.standard_normal(3)
    slc = post.conditional_slice(1, th, post.projections(th))
    np.testing.assert_array_equal(slc.xcol, post.X[:, 1])


def test_gaussian_slice_params(rng):
    n, d = 40, 3
    X = rng.standard_normal((n, d))
    Y = rng.standard_normal(n)
    post = Posterior(GlmFamily.linear(), Prior.gaussian(np.diag([1.0, 2.0, 3.0])), X, Y)
    th = rng.standard_normal(d)
    slc = post.conditional_slice(0, th, post.projections(th))
    assert slc.is_gaussian
    mean, prec = slc.gaussian_params()
    H = post.hess(th)
    assert prec == pytest.approx(H[0, 0])
    # the conditional mean zeroes the coordinate derivative
    assert slc.derivatives(mean)[1] == pytest.approx(0.0, abs=1e-9)


def test_clipped_slice_is_not_exponential(rng):
    post = make_posterior(GlmFamily.poisson(1.0), Prior.flat(), n=20, d=2)
    th = np.zeros(2)
    slc = post.conditional_slice(0, th, post.projections(th))
    ts = np.array([50.0, 100.0, 150.0, 200.0])
    v = slc.values(ts)
    # second differences are constant for a quadratic tail
    d2 = np.diff(v, 2)
    np.testing.assert_allclose(d2[0], d2[1], rtol=1e-6)


def test_stale_cache(rng):
    post = make_posterior(GlmFamily.logistic(), Prior.flat(), n=10, d=2)
    th = rng.standard_normal(2)
    with pytest.raises(StaleCache):
        post.conditional_slice(0, th, post.projections(th) + 1.0, check=True)


def test_update_coordinate_cache(rng):
    """The cache tracks X theta through a full sweep; slices agree with a fresh recomputation."""
    post = make_posterior(GlmFamily.logistic(), priors(4)["zellner"], n=30, d=4)
    th = rng.standard_normal(4)
    proj = post.projections(th)
    for i in range(4):
        post.update_coordinate(th, proj, i, float(rng.standard_normal()))
        fresh = post.conditional_slice(i, th, post.projections(th))
        cached = post.conditional_slice(i, th, proj)
        ts = np.linspace(-1, 1, 5)
        np.testing.assert_allclose(cached.values(ts), fresh.values(ts), rtol=1e-12)
    np.testing.assert_allclose(proj, post.X @ th, rtol=1e-12, atol=1e-12)


def test_dataset_round_trip(tmp_path, rng):
    X = rng.standard_normal((7, 3))
    Y = rng.standard_normal(7)
    p = tmp_path / "d.csv"
    save_dataset(p, X, Y)
    assert open(p).readline().strip() == "y,x1,x2,x3"
    X2, Y2 = load_dataset(p)
    np.testing.assert_array_equal(X, X2)
    np.testing.assert_array_equal(Y, Y2)


def test_dataset_bad_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,x1,x2\n1,2\n")
    with pytest.raises(DimensionMismatch):
        load_dataset(p)
    p.write_text("y,z1\n1,2\n")
    with pytest.raises(DimensionMismatch):
        load_dataset(p)
