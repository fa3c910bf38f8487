import numpy as np
import pytest

from glmcmc.families import GlmFamily
from glmcmc.mapsolve import MapResult, check_map_radius, find_map
from glmcmc.posterior import Posterior
from glmcmc.priors import Prior

from conftest import make_posterior


def test_linear_ridge_solution(rng):
    n, d = 80, 5
    X = rng.standard_normal((n, d))
    Y = X @ rng.standard_normal(d) + rng.standard_normal(n)
    Q = 2.0 * np.eye(d)
    post = Posterior(GlmFamily.linear(), Prior.gaussian(Q), X, Y)
    res = find_map(post)
    ridge = np.linalg.solve(Q + X.T @ X, X.T @ Y)
    assert res.converged
    np.testing.assert_allclose(res.theta_map, ridge, atol=1e-8)


def test_already_critical(rng):
    post = make_posterior(GlmFamily.logistic(), Prior.isotropic(1.0, 3), n=50, d=3)
    first = find_map(post)
    again = find_map(post, theta_init=first.theta_map)
    assert again.iterations <= 1 and again.converged


@pytest.mark.parametrize("fam", [GlmFamily.logistic(), GlmFamily.poisson(), GlmFamily.poisson(1.0)])
def test_converged_and_monotone(fam):
    post = make_posterior(fam, Prior.isotropic(0.5, 4), n=60, d=4)
    res = find_map(post)
    assert res.converged
    assert np.all(np.diff(res.history) <= 1e-12)
    assert np.linalg.norm(post.grad(res.theta_map)) <= 1e-8 * 60 * (1 + np.linalg.norm(post.grad(np.zeros(4))))


def test_distance_to_truth(rng):
    post = make_posterior(GlmFamily.logistic(), Prior.flat(), n=400, d=2, theta_star=[0.5, -0.5])
    res = find_map(post, theta_star=[0.5, -0.5])
    assert res.distance_to_truth == pytest.approx(np.linalg.norm(res.theta_map - [0.5, -0.5]))


def test_not_converged_returns_best():
    post = make_posterior(GlmFamily.logistic(), Prior.flat(), n=60, d=3)
    res = find_map(post, max_iter=1, tol=1e-300)
    assert not res.converged and res.iterations == 1


def test_invalid_tol():
    post = make_posterior(GlmFamily.logistic(), Prior.flat(), n=10, d=2)
    with pytest.raises(ValueError):
        find_map(post, tol=0.0)


def test_check_map_radius():
    th = np.array([1.0, 2.0])
    assert check_map_radius(th, th, 4.0)
    assert not check_map_radius(th + np.array([1.0, 0.0]), th, 4.0)  # 2 * lam^{-1/2}
    res = MapResult(th, 0.0, 0, True)
    assert check_map_radius(res, th, 1.0)


def test_clipped_poisson_uses_quadratic_branch():
    """With a large clip radius violation the potential stays finite along the Newton path."""
    post = make_posterior(GlmFamily.poisson(2.0), Prior.isotropic(1.0, 2), n=50, d=2, theta_star=[2.0, 2.0])
    res = find_map(post, theta_init=np.array([30.0, 30.0]))
    assert res.converged and np.all(np.isfinite(res.history))
