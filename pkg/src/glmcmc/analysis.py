"""Structural quantities of GLM posteriors and their theoretical bounds.

Condition numbers, local curvature, smoothness, score concentration, tail
mass of radially convex densities and the Poisson truncation radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .errors import PreconditionViolated, QuadratureDivergence, SingularQ, UnboundedCurvature
from .families import LINEAR, LOGISTIC, GlmFamily
from .priors import Prior


def normal_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


# condition numbers -----------------------------------------------------
def _inv_sqrt(Q):
    w, V = np.linalg.eigh(0.5 * (Q + Q.T))
    if w[0] <= 0 or w[0] <= 1e-14 * w[-1]:
        raise SingularQ(f"Q is not positive definite (smallest eigenvalue {w[0]:.3e})")
    return (V / np.sqrt(w)) @ V.T


def preconditioned_condition_number(X, Q, family: GlmFamily | None = None) -> float:
    """``1 + sup A'' * lam_max(Q^{-1/2} X'X Q^{-1/2})`` for the prior-whitened potential.

    ``Q`` may be a matrix or a :class:`Prior` (data-dependent kinds are
    assembled from ``X``).  The default family is logistic, whose ``A''``
    peaks at 1/4 at the origin.
    """
    X = np.asarray(X, dtype=float)
    if isinstance(Q, Prior):
        Q = Q.precision_matrix(X.shape[1], X)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    family = GlmFamily.logistic() if family is None else family
    top = family.curvature_bound()
    if not math.isfinite(top):
        raise UnboundedCurvature("the family has unbounded A''")
    R = _inv_sqrt(Q)
    M = R @ (X.T @ X) @ R
    return 1.0 + top * float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1])


def isotropic_condition_band(n: int, d: int, c: float) -> tuple[float, float]:
    """High-probability band for the logistic condition number with ``Q = c I`` and ``Sigma = I``."""
    lo = 1.0 + (math.sqrt(n) - 2.0 * math.sqrt(d)) ** 2 / (16.0 * c)
    hi = 1.0 + (2.0 * math.sqrt(n) + math.sqrt(d)) ** 2 / (4.0 * c)
    return lo, hi


# local curvature -------------------------------------------------------
W1_FACTOR = 4.0
W2_FACTOR = 4.0 / 9.0
C_BAR = 19.0 / 20.0


def gaussian_design_constants(lam_max: float = 1.0, lam_min: float = 1.0):
    """``(w1, beta1, w2, beta2)`` for Gaussian rows."""
    beta1 = float(normal_cdf(2.0) - normal_cdf(-2.0))
    beta2 = float(2.0 * normal_cdf(-2.0 / 3.0))
    return W1_FACTOR * lam_max, beta1, W2_FACTOR * lam_min, beta2


def curvature_coefficient(lam_min: float = 1.0) -> float:
    """``w2 (c1 beta1 + c2 beta2 - 1)`` with ``c1 = c2 = 19/20``; exceeds 1/6 when ``lam_min = 1``."""
    _, b1, w2, b2 = gaussian_design_constants(1.0, lam_min)
    return w2 * (C_BAR * b1 + C_BAR * b2 - 1.0)


@dataclass
class CurvatureProfile:
    center: np.ndarray
    radius: float
    empirical_min_eig: float
    theory_lower_bound: float
    probes: int

    @property
    def holds(self) -> bool:
        return self.empirical_min_eig >= self.theory_lower_bound


def ball_points(center, radius: float, probes: int, rng) -> np.ndarray:
    """``probes`` uniform points of the ball, preceded by its center."""
    center = np.asarray(center, dtype=float)
    d = center.size
    v = rng.standard_normal((probes, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = radius * rng.random(probes) ** (1.0 / d)
    return np.vstack([center, center + rad[:, None] * v])


def _min_eig(M, iters: int = 200) -> float:
    d = M.shape[0]
    if d <= 64:
        return float(np.linalg.eigvalsh(M)[0])
    # power iteration on the shifted matrix for the bottom of the spectrum
    rng = np.random.default_rng(0)
    v = rng.standard_normal(d)
    for _ in range(iters):
        v = M @ v
        v /= np.linalg.norm(v)
    top = float(v @ M @ v)
    S = top * np.eye(d) - M
    v = rng.standard_normal(d)
    for _ in range(iters):
        v = S @ v
        v /= np.linalg.norm(v)
    return top - float(v @ S @ v)


def local_min_curvature(family: GlmFamily, X, center, radius: float, probes: int = 64,
                        rng=None, lam_max: float = 1.0, lam_min: float = 1.0) -> CurvatureProfile:
    """Empirical and guaranteed lower curvature of the likelihood on a ball.

    The empirical value is the least eigenvalue of ``sum A''(theta'x_i) x_i x_i'``
    over uniform probe points (an upper bound on the infimum). The bound is
    ``w2 (c1 beta1 + c2 beta2 - 1) n inf_{|y| <= r_hat} A''(y)`` with
    ``r_hat = (|center| + radius) sqrt(w1)``.
    """
    rng = np.random.default_rng(rng)
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    center = np.asarray(center, dtype=float)
    emp = math.inf
    for theta in ball_points(center, radius, probes, rng):
        w = family.variance_fn(X @ theta)
        emp = min(emp, _min_eig((X.T * w) @ X))
    w1, b1, w2, b2 = gaussian_design_constants(lam_max, lam_min)
    r_hat = (float(np.linalg.norm(center)) + radius) * math.sqrt(w1)
    bound = (C_BAR * b1 + C_BAR * b2 - 1.0) * w2 * n * family.min_curvature_on_ball(r_hat)
    return CurvatureProfile(center, radius, emp, bound, probes)


def smoothness_bound(family: GlmFamily, X, lam_max: float, trace: float):
    """``(empirical, theory)`` for the likelihood smoothness.

    empirical is ``sup A'' * lam_max(X'X)`` and theory is
    ``sup A'' * (2 sqrt(n lam_max) + sqrt(tr Sigma))^2``.
    """
    C_A = family.curvature_bound()
    if not math.isfinite(C_A):
        raise UnboundedCurvature("unclipped Poisson has unbounded A''")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    emp = C_A * float(np.linalg.eigvalsh(X.T @ X)[-1])
    theory = C_A * (2.0 * math.sqrt(n * lam_max) + math.sqrt(trace)) ** 2
    return emp, theory


# score concentration ---------------------------------------------------
def score_norm(family: GlmFamily, theta_star, X, Y) -> float:
    """``|sum_i (Y_i - A'(theta*'X_i)) X_i|``."""
    X = np.asarray(X, dtype=float)
    r = np.asarray(Y, dtype=float) - family.mean(X @ np.asarray(theta_star, dtype=float))
    return float(np.linalg.norm(X.T @ r))


def truncation_level(family: GlmFamily, eps: float, theta_star=None, Sigma=None) -> float:
    """Level ``y*`` beyond which response residuals carry mass at most ``eps``."""
    if family.kind == LINEAR:
        s2 = family.dispersion
        return 2.0 * s2 * math.log(max(2.0, math.sqrt(2.0 * s2 / math.pi)) / eps)
    if family.kind == LOGISTIC:
        return 2.0
    th = np.asarray(theta_star, dtype=float)
    S = np.eye(th.size) if Sigma is None else np.asarray(Sigma, dtype=float)
    lam = float(np.linalg.eigvalsh(S)[-1])
    eps_star = eps**2 / (2.0 + 2.0 * math.exp(float(th @ S @ th))) ** 2
    return poisson_tail_level(eps_star, float(th @ th), lam)


def score_threshold(family: GlmFamily, eps: float, n: int, d: int, lam_max: float,
                    theta_star=None, Sigma=None) -> dict:
    """Threshold ``a = 64 eps sqrt(lam)``, exponent ``t*`` and the tail probability bound."""
    y = truncation_level(family, eps, theta_star, Sigma)
    a = 64.0 * eps * math.sqrt(lam_max)
    al = a / math.sqrt(lam_max)
    t_star = al * min(min(al, 15.0) / (30.0 * y * y), 0.25)
    expo = d * math.log(5.0) - n * t_star
    prob = n * eps + (math.exp(expo) if expo < 700 else math.inf)
    return {"a": a, "t_star": t_star, "y_star": y, "prob_bound": prob, "vacuous": prob >= 1.0}


# tail mass ---------------------------------------------------------------
def radial_potential(c: float, r: float):
    """Quadratic inside radius ``r``, continued linearly outside."""

    def f(rho):
        rho = np.abs(rho)
        return np.where(rho <= r, 0.5 * c * rho * rho, 0.5 * c * r * r + c * r * (rho - r))

    return f


def tail_mass_bound(c: float, r: float, d: int, i: int = 0, prior_ratio: float = 1.0) -> float:
    """``ratio * exp(-3 c r^2 / 8) * 2^(d+1) * (6 r (1 + i/d))^i``; needs ``r sqrt(c/d) >= 3``."""
    if r * math.sqrt(c / d) < 3.0 * (1.0 - 1e-12):
        raise PreconditionViolated(f"r sqrt(c/d) = {r * math.sqrt(c / d):.4g} < 3")
    return prior_ratio * math.exp(-3.0 * c * r * r / 8.0) * 2.0 ** (d + 1) * (6.0 * r * (1.0 + i / d)) ** i


def _quad(f, a, b, rtol):
    val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=500)
    if not np.isfinite(val) or err > max(rtol * abs(val) * 10.0, 1e-300):
        raise QuadratureDivergence(f"quadrature on [{a}, {b}] did not converge (err {err:.2e})")
    return val


def tail_mass_oracle(potential, r: float, d: int = 1, moment: int = 0, rtol: float = 1e-8,
                     radial: bool = False) -> float:
    """``int_{|x|>r} |x|^moment e^{-U} / int e^{-U}`` by adaptive quadrature.

    ``potential`` takes a point: a scalar for ``d=1``, an ``(x, y)`` pair for
    ``d=2``; with ``radial=True`` it takes the radius instead.  The
    potential is shifted by its value at the origin to keep exponents small.
    """
    if d not in (1, 2):
        raise ValueError("the quadrature oracle supports d in {1, 2}")
    if radial:
        u0 = float(potential(0.0))

        def dens(rho, k):
            return rho ** (d - 1 + k) * math.exp(-(float(potential(rho)) - u0))

        total = _quad(lambda s: dens(s, 0), 0.0, np.inf, rtol)
        if r <= 0 and moment == 0:
            return 1.0
        # split at r to keep the kink of piecewise potentials on a node
        tail = _quad(lambda s: dens(s, moment), r, np.inf, rtol)
        return tail / total

    if d == 1:
        u0 = float(potential(0.0))

        def g(x, k):
            return abs(x) ** k * math.exp(-(float(potential(x)) - u0))

        total = _quad(lambda x: g(x, 0), -np.inf, 0.0, rtol) + _quad(lambda x: g(x, 0), 0.0, np.inf, rtol)
        if r <= 0 and moment == 0:
            return 1.0
        tail = _quad(lambda x: g(x, moment), -np.inf, -r, rtol) + _quad(lambda x: g(x, moment), r, np.inf, rtol)
        return tail / total

    u0 = float(potential((0.0, 0.0)))

    def inner(rho, k):
        def h(phi):
            return math.exp(-(float(potential((rho * math.cos(phi), rho * math.sin(phi)))) - u0))
        return rho ** (1 + k) * _quad(h, 0.0, 2.0 * math.pi, rtol)

    total = _quad(lambda s: inner(s, 0), 0.0, np.inf, rtol)
    if r <= 0 and moment == 0:
        return 1.0
    tail = _quad(lambda s: inner(s, moment), r, np.inf, rtol)
    return tail / total


# Poisson radii -----------------------------------------------------------
def poisson_tail_level(eps: float, theta_sq: float, lam_max: float) -> float:
    """``max(e^2 exp(sqrt(2 |theta*|^2 lam ln(2/eps))), ln(2/eps))``."""
    l2 = math.log(2.0 / eps)
    return max(math.e**2 * math.exp(math.sqrt(2.0 * theta_sq * lam_max * l2)), l2)


@dataclass(frozen=True)
class PoissonRadius:
    r_star: float
    y_star: float
    R: float
    L_bar: float | None = None


def poisson_radius(eps: float, delta: float, n: int, theta_star, lam_max: float,
                   lam_min: float | None = None, trace: float | None = None,
                   C_pi: float = 0.0, k: int = 0) -> PoissonRadius:
    """Truncation radius ``r*(eps, delta)`` with its tail level, ``R`` and, if possible, ``L_bar``.

    ``y_star`` is the level at ``delta / (5 n)`` entering ``r*``. ``L_bar`` is
    evaluated when ``lam_min`` and ``trace`` are given, using
    ``r*(eps/(4+k), delta eps/4)``.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    th = np.asarray(theta_star, dtype=float)
    tsq = float(th @ th)
    r_star, y_star = _r_star(eps, delta, n, tsq, lam_max)
    R = math.sqrt(tsq) + 2.0 / math.sqrt(lam_max)
    L_bar = None
    if lam_min is not None and trace is not None:
        d = th.size
        r2, _ = _r_star(eps / (4.0 + k), delta * eps / 4.0, n, tsq, lam_max)
        L_bar = (2.0 * C_pi * d + (n / 7.0) * lam_min * math.exp(-2.0 * R * math.sqrt(2.0 * lam_max))
                 + math.exp(r2) * (2.0 * math.sqrt(n * lam_max) + math.sqrt(trace)) ** 2)
    return PoissonRadius(r_star, y_star, R, L_bar)


def _r_star(eps, delta, n, theta_sq, lam_max):
    y = poisson_tail_level(delta / (5.0 * n), theta_sq, lam_max)
    s = math.sqrt(theta_sq * lam_max) + 2.0
    r = max(4.0 * math.log(2.0 * y), s * math.sqrt(2.0 * math.log(15.0 * n / (eps * delta))),
            s * math.sqrt(8.0 * math.log(20.0 / delta)))
    return r, y


# Gibbs escape probability and radius ------------------------------------
def gibbs_escape_probability(k: int, r: float, d: int, m0: float, L_bar: float,
                             theta_inf: float, c_U: float = 1.0) -> float:
    """Probability bound that some coordinate leaves the cube within ``k`` steps."""
    shift = r / math.sqrt(d) - theta_inf - math.sqrt(2.0 / (L_bar * math.pi))
    if shift < 0 or not m0 > 0:
        raise PreconditionViolated("radius below the feasibility threshold or m0 <= 0")
    stay = 1.0 - 4.0 * c_U * math.exp(-0.375 * m0 * r * r / d)
    start = 1.0 - math.exp(-L_bar * shift * shift / 2.0)
    return 1.0 - max(stay, 0.0) ** k * start**d


def gibbs_radius(d: int, L_sc: float, lam_max: float, L: float, theta_inf: float) -> float:
    """``sqrt(d) ((L_sc lam d)^(-1/2) + (pi L)^(-1/2) + |theta|_inf)``."""
    return math.sqrt(d) * ((L_sc * lam_max * d) ** -0.5 + (math.pi * L) ** -0.5 + theta_inf)


# integrator checks ---------------------------------------------------------
def verlet_lipschitz_check(grad, L: float, h: float, x, v, y, w):
    """``(lhs, rhs)`` of the one-step Verlet Lipschitz estimate (needs ``L h^2 <= 1/8``)."""
    if L * h * h > 0.125 * (1.0 + 1e-12):
        raise PreconditionViolated("L h^2 must be at most 1/8")
    from .samplers.hmc import hmc_inner_step

    qx, px = hmc_inner_step(x, v, grad, h, 0)
    qy, py = hmc_inner_step(y, w, grad, h, 0)
    x, v, y, w = (np.asarray(a, dtype=float) for a in (x, v, y, w))
    lhs = float(np.sum((qx - qy) ** 2) + np.sum((px - py) ** 2) / L)
    rhs = (1.0 + 3.0 * math.sqrt(L) * h) * float(np.sum((x - y) ** 2) + np.sum((v - w) ** 2) / L)
    return lhs, rhs
