"""Unadjusted HMC with Verlet (u=0) or randomized-midpoint (u=1) integration.

One inner step maps ``(q, p)`` to

    q' = q + h p - (h^2/2) g(q + u*s*p)
    p' = p - ((1+u)/2) h g(q + u*s*p) - ((1-u)/2) h g(q')

where ``g = grad U`` and ``s ~ Unif(0, h)``.  Arrays may carry a leading
chain axis; ``grad`` must then accept and return ``(m, d)`` stacks.
"""

from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from ..errors import NonFiniteGradient
from .gibbs import ChainState
from .theory import HmcParams


class GradCache:
    """Gradient counter with Verlet end-point reuse."""

    def __init__(self, grad):
        self._grad = grad
        self.calls = 0
        self.q = None
        self.g = None

    def __call__(self, q):
        g = np.asarray(self._grad(q), dtype=float)
        self.calls += 1
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient after {self.calls} evaluations")
        return g

    def at(self, q):
        """Gradient at ``q``, reused if it was the last end point."""
        if self.q is not None and self.q is q:
            return self.g
        g = self(q)
        self.remember(q, g)
        return g

    def remember(self, q, g):
        self.q, self.g = q, g

    def forget(self):
        self.q = self.g = None


def hmc_inner_step(q, p, grad, h: float, u: int, u_mid=0.0, scratch: GradCache | None = None):
    """One integrator step; returns ``(q', p')`` as new arrays.

    ``u_mid`` may be a scalar or one value per chain. With ``u=0`` it is
    ignored and, if ``scratch`` is given, the end-point gradient is kept for
    the next call.
    """
    scratch = GradCache(grad) if scratch is None else scratch
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if u == 1:
        s = np.asarray(u_mid, dtype=float)
        if s.ndim == 1 and q.ndim == 2:
            s = s[:, None]
        g = scratch(q + s * p)
        return q + h * p - 0.5 * h * h * g, p - h * g
    if u != 0:
        raise ValueError("u must be 0 or 1")
    g0 = scratch.at(q)
    q1 = q + h * p - 0.5 * h * h * g0
    g1 = scratch(q1)
    scratch.remember(q1, g1)
    return q1, p - 0.5 * h * (g0 + g1)


def hmc_trajectory(q, v, grad, params: HmcParams, mid_rng=None, scratch: GradCache | None = None,
                   u_mids=None):
    """Integrate ``T/h`` inner steps from ``(q, v)``; returns the final ``(q, p)``.

    Midpoints come from ``u_mids`` (shape ``(T/h,)`` or ``(T/h, m)``) when
    given, otherwise from ``mid_rng``.
    """
    scratch = GradCache(grad) if scratch is None else scratch
    q = np.asarray(q, dtype=float)
    p = np.asarray(v, dtype=float)
    shape = q.shape[:-1]
    for i in range(params.n_steps):
        s = 0.0
        if params.u == 1:
            s = u_mids[i] if u_mids is not None else params.h * mid_rng.random(shape)
        q, p = hmc_inner_step(q, p, grad, params.h, params.u, s, scratch)
    return q, p


def hmc_iterate(chain: ChainState, params: HmcParams, grad, scratch: GradCache | None = None) -> ChainState:
    """One outer iteration: fresh momentum, ``T/h`` inner steps, keep the position.

    ``chain.rng`` supplies the momentum and ``chain.aux_rng`` the midpoints.
    """
    scratch = GradCache(grad) if scratch is None else scratch
    v = chain.rng.standard_normal(chain.theta.shape)
    q, _ = hmc_trajectory(chain.theta, v, grad, params, chain.aux_rng, scratch)
    chain.theta = q
    chain.step_index += 1
    return chain


def hmc_coupled_iterate(x, y, params: HmcParams, grad, rng):
    """Synchronously coupled iteration: both chains share ``v`` and all midpoints."""
    x = np.asarray(x, dtype=float)
    v = rng.standard_normal(x.shape)
    mids = params.h * rng.random((params.n_steps,) + x.shape[:-1]) if params.u == 1 else None
    qx, _ = hmc_trajectory(x, v, grad, params, u_mids=mids)
    qy, _ = hmc_trajectory(np.asarray(y, dtype=float), v, grad, params, u_mids=mids)
    return qx, qy


def run_hmc(post, params: HmcParams, theta0, n_iter: int | None = None, seed: int = 0,
            chain_id: int = 0, thin: int = 1, grad=None):
    """Run ``m`` chains started from the rows of ``theta0`` in lockstep.

    Each chain block draws momenta and midpoints from the ``momentum`` and
    ``midpoint`` streams of ``(seed, chain_id)``.  Returns
    ``(trace, gradient_calls)`` with ``trace`` of shape ``(k, m, d)`` holding
    the start and every ``thin``-th iterate.
    """
    grad = post.grad_batch if grad is None else grad
    n_iter = params.N if n_iter is None else n_iter
    theta = np.atleast_2d(np.asarray(theta0, dtype=float)).copy()
    mom = rngmod.stream(seed, "momentum", chain_id)
    mid = rngmod.stream(seed, "midpoint", chain_id)
    scratch = GradCache(grad)
    trace = [theta.copy()]
    for k in range(1, n_iter + 1):
        v = mom.standard_normal(theta.shape)
        theta, _ = hmc_trajectory(theta, v, grad, params, mid, scratch)
        if k % thin == 0:
            trace.append(theta.copy())
    return np.array(trace), scratch.calls
