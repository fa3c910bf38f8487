"""Parameter schedules derived from the non-asymptotic mixing bounds.

All formulas are evaluated verbatim.  At desk scale the resulting iteration
counts are astronomically large; callers cap the number of iterations they
actually run and record both numbers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..families import LINEAR, LOGISTIC, GlmFamily

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TheoryConstants:
    """Scale-free smoothness ``L_sc``, curvature ratio ``C_bar`` and inputs."""

    L_sc: float
    C_bar: float
    C_star: float
    n: int
    d: int
    lam_max: float
    kappa_sigma: float
    kappa_loc: tuple = (math.nan, math.nan, math.nan)

    @property
    def L(self) -> float:
        """Global smoothness ``L_sc * lam_max * n``."""
        return self.L_sc * self.lam_max * self.n


def min_curvature_core(family: GlmFamily, C_star: float) -> float:
    """inf of A'' over the ball of radius ``2 sqrt(C*) + 4``."""
    r = 2.0 * math.sqrt(C_star) + 4.0
    if family.kind == LINEAR:
        return 1.0
    if family.kind == LOGISTIC:
        return family.min_curvature_on_ball(r)
    return math.exp(-r)


def theory_constants(family: GlmFamily, C_pi: float, n: int, d: int, lam_max: float,
                     kappa_sigma: float, C_star: float = 1.0) -> TheoryConstants:
    """``L_sc = (d/n) C_pi / lam_max + 9/phi`` and ``C_bar = 7 L_sc / inf A''``."""
    L_sc = (d / n) * C_pi / lam_max + 9.0 / family.dispersion
    C_bar = 7.0 * L_sc / min_curvature_core(family, C_star)
    return TheoryConstants(L_sc, C_bar, C_star, n, d, lam_max, kappa_sigma)


@dataclass(frozen=True)
class HmcParams:
    """Unadjusted HMC settings.

    ``n_steps = T/h`` is stored as an integer so the trajectory length is
    exact; ``ceiling_arg`` records the unrounded step-count expression.
    """

    N: int
    h: float
    n_steps: int
    u: int
    init_radius: float = 0.0
    ceiling_arg: float = math.nan

    def __post_init__(self):
        if self.u not in (0, 1):
            raise ValueError("u must be 0 (Verlet) or 1 (randomized midpoint)")
        if not self.h > 0 or self.n_steps < 1 or self.N < 0:
            raise ValueError("need h > 0, T/h >= 1 and N >= 0")

    @property
    def T(self) -> float:
        return self.n_steps * self.h

    def gradient_count(self, N: int | None = None) -> int:
        """Gradient evaluations for ``N`` iterations (default ``self.N``).

        One per inner step for the midpoint scheme. Verlet carries each end
        gradient into the next step and the next iteration, so it adds a
        single evaluation at the very first point.
        """
        N = self.N if N is None else N
        return N * self.n_steps + (1 if self.u == 0 and N > 0 else 0)

    def satisfies_step_condition(self, L: float) -> bool:
        """``L (T + h)^2 <= 1/8``."""
        return L * (self.T + self.h) ** 2 <= 0.125 * (1.0 + 1e-12)


def hmc_params_from_theory(tc: TheoryConstants, eps: float, u: int = 1) -> HmcParams:
    """Iteration count, step size and integration time from the HMC schedule.

    ``N = ceil(21 C_bar kappa ln(178 n / eps))``,
    ``K = ceil(8 sqrt(2) (n/eps^2)^(1/3) (1 + 21 C_bar kappa)^(2/3))``,
    ``h = (8 L_sc lam n)^(-1/2) / K`` and ``T = (8 L_sc lam n)^(-1/2) - h``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    n, kap = tc.n, tc.kappa_sigma
    N = math.ceil(21.0 * tc.C_bar * kap * math.log(178.0 * n / eps))
    arg = 8.0 * math.sqrt(2.0) * (n / eps**2) ** (1.0 / 3.0) * (1.0 + 21.0 * tc.C_bar * kap) ** (2.0 / 3.0)
    K = math.ceil(arg)
    horizon = (8.0 * tc.L_sc * tc.lam_max * n) ** -0.5
    h = horizon / K
    steps = K - 1
    if steps < 1:
        log.warning("integration time is not positive at n=%d; clamping T = h", n)
        steps = 1
    radius = (tc.L_sc * tc.lam_max) ** -0.5
    return HmcParams(N=N, h=h, n_steps=steps, u=u, init_radius=radius, ceiling_arg=arg)


def with_inner_steps(params: HmcParams, K: int) -> HmcParams:
    """Same ``T + h`` split into ``K >= 2`` steps, so ``T/h = K - 1``."""
    if K < 2:
        raise ValueError("K must be at least 2")
    horizon = params.T + params.h
    return HmcParams(N=params.N, h=horizon / K, n_steps=K - 1, u=params.u,
                     init_radius=params.init_radius, ceiling_arg=params.ceiling_arg)


@dataclass(frozen=True)
class GibbsParams:
    N: int
    init_precision: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.init_precision > 0:
            raise ValueError("init_precision must be positive")


def gibbs_params_from_theory(tc: TheoryConstants, eps: float) -> GibbsParams:
    """``N = ceil(6 C_bar d kappa (ln(3/eps) + ln(5 C* L_sc n + 1 + d ln(6 d C_bar kappa))))``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    d, n, kap, Cb = tc.d, tc.n, tc.kappa_sigma, tc.C_bar
    inner = 5.0 * tc.C_star * tc.L_sc * n + 1.0 + d * math.log(6.0 * d * Cb * kap)
    N = math.ceil(6.0 * Cb * d * kap * (math.log(3.0 / eps) + math.log(inner)))
    return GibbsParams(N=N, init_precision=3.0 * tc.L_sc * tc.lam_max * n)


def poisson_gibbs_params(n: int, d: int, lam_max: float, kappa_sigma: float,
                         eps: float, delta: float, C: float = 1.0) -> GibbsParams:
    """Poisson schedule with calibration constant ``C``.

    ``N = ceil(C kappa d exp(C sqrt(ln(kappa d n / (delta eps)))))`` and the
    initialization precision ``C exp(C sqrt(ln(n N / (eps delta)))) n lam``.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    if C < 1:
        raise ValueError("C must be at least 1")
    N = math.ceil(C * kappa_sigma * d * math.exp(C * math.sqrt(math.log(kappa_sigma * d * n / (delta * eps)))))
    L_tilde = C * math.exp(C * math.sqrt(math.log(n * N / (eps * delta)))) * n * lam_max
    return GibbsParams(N=N, init_precision=L_tilde)


def _ball_probes(center, radius, probes, rng):
    d = center.size
    v = rng.standard_normal((probes, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = radius * rng.random(probes) ** (1.0 / d)
    pts = center + rad[:, None] * v
    return np.vstack([center, pts])


def empirical_curvature(post, center, radius: float, probes: int = 64, rng=None,
                        likelihood_only: bool = False) -> float:
    """Smallest Hessian eigenvalue over ``probes`` uniform points of a ball (plus its center).

    This is an upper bound on the true infimum over the ball.
    """
    rng = np.random.default_rng(rng)
    center = np.asarray(center, dtype=float)
    pts = _ball_probes(center, radius, probes, rng)
    hess = post.likelihood_hess if likelihood_only else post.hess
    return float(min(np.linalg.eigvalsh(hess(p))[0] for p in pts))


def local_condition_numbers(post, theta_map, tc: TheoryConstants, probes: int = 32,
                            rng=None, n_radial: int = 8):
    """Local condition numbers ``(kappa, kappa_0, kappa_bar)`` about ``theta_map``.

    ``L`` is ``L_sc lam n``; the curvature profiles are empirical (probe
    minima), ``m_0`` uses the likelihood Hessian only and ``m_bar(r)`` is
    the radial average of ``m(t r)`` by the midpoint rule on ``n_radial`` nodes.
    """
    rng = np.random.default_rng(rng)
    s = (tc.L_sc * tc.lam_max) ** -0.5
    L = tc.L
    m = empirical_curvature(post, theta_map, 8.0 * s / 3.0, probes, rng)
    m0 = empirical_curvature(post, theta_map, 4.0 * s / 3.0, probes, rng, likelihood_only=True)
    ts = (np.arange(n_radial) + 0.5) / n_radial
    mbar = float(np.mean([empirical_curvature(post, theta_map, t * 2.0 * s, probes, rng) for t in ts]))

    def ratio(x):
        return L / x if x > 0 else math.inf

    return ratio(m), ratio(m0), ratio(mbar)
