"""Posterior mode by damped Newton iteration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

log = logging.getLogger(__name__)

ARMIJO = 1e-4
MAX_HALVINGS = 50


@dataclass
class MapResult:
    theta_map: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    distance_to_truth: float = math.nan
    history: list = field(default_factory=list, repr=False)


def default_tol(n: int, lam_max: float) -> float:
    return 1e-8 * n * lam_max


def _direction(post, theta, g):
    """Newton direction, or steepest descent if the Hessian is not positive definite."""
    H = post.hess(theta)
    try:
        return -cho_solve(cho_factor(H), g), True
    except (LinAlgError, ValueError):
        return -g, False


def find_map(post, theta_init=None, tol: float | None = None, max_iter: int = 100,
             theta_star=None, lam_max: float | None = None) -> MapResult:
    """Damped Newton with Armijo backtracking on the potential.

    Stops when ``|grad U| <= tol * (1 + |grad U(theta_init)|)``.  ``tol``
    defaults to ``1e-8 * n * lam_max``; if ``lam_max`` is not given it is
    estimated by the top eigenvalue of ``X'X / n``.
    """
    theta = np.zeros(post.d) if theta_init is None else np.array(theta_init, dtype=float)
    if tol is None:
        if lam_max is None:
            lam_max = float(np.linalg.eigvalsh(post.X.T @ post.X / post.n)[-1])
        tol = default_tol(post.n, lam_max)
    if not tol > 0:
        raise ValueError("tol must be positive")

    g = post.grad(theta)
    u = post.potential(theta)
    threshold = tol * (1.0 + np.linalg.norm(g))
    history = [u]
    converged = bool(np.linalg.norm(g) <= threshold)
    it = 0
    while not converged and it < max_iter:
        p, newton = _direction(post, theta, g)
        slope = float(g @ p)
        if slope >= 0:
            p, newton, slope = -g, False, -float(g @ g)
        if not newton:
            log.debug("iteration %d: Hessian not positive definite, using gradient step", it)
        step = 1.0
        for _ in range(MAX_HALVINGS):
            cand = theta + step * p
            uc = post.potential(cand)
            if np.isfinite(uc) and uc <= u + ARMIJO * step * slope:
                break
            step *= 0.5
        else:
            log.warning("line search failed at iteration %d", it)
            break
        theta, u = cand, uc
        g = post.grad(theta)
        history.append(u)
        it += 1
        converged = bool(np.linalg.norm(g) <= threshold)

    dist = math.nan if theta_star is None else float(np.linalg.norm(theta - np.asarray(theta_star)))
    return MapResult(theta, float(np.linalg.norm(g)), it, converged, dist, history)


def check_map_radius(theta_map, theta_star, lam_max: float) -> bool:
    """Whether ``|theta_map - theta_star| <= lam_max ** -0.5``."""
    if isinstance(theta_map, MapResult):
        theta_map = theta_map.theta_map
    return bool(np.linalg.norm(np.asarray(theta_map) - np.asarray(theta_star)) <= lam_max**-0.5)
