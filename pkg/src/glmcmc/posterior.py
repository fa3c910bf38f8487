"""Posterior potential U = -log prior - log likelihood for a canonical GLM."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, StaleCache
from .families import LINEAR, GlmFamily
from .priors import Prior, slice_potential


class Posterior:
    """Posterior of a GLM with canonical link, up to its normalizing constant.

    The potential is ``-log pi(theta) + sum_i (A(x_i' theta) - y_i x_i' theta) / phi``.
    The ``c(y)`` base term and all other theta-independent constants are dropped.

    Instances are read-only after construction; per-chain state such as the
    cached projections ``X theta`` lives with the chain.
    """

    def __init__(self, family: GlmFamily, prior: Prior, X, Y):
        X = np.ascontiguousarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != Y.size:
            raise DimensionMismatch(f"X {X.shape} and Y {Y.shape} disagree")
        self.family = family
        self.prior = prior
        self.X = X
        self.Y = Y
        self.n, self.d = X.shape
        self._inv_phi = 1.0 / family.dispersion
        # column-major copy so X[:, i] is contiguous for slice updates
        self._Xcols = np.asfortranarray(X)
        self._yx = X.T @ Y

    @property
    def design(self):
        return self.X if self.prior.data_dependent else None

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.d,):
            raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({self.d},)")
        return theta

    def projections(self, theta) -> np.ndarray:
        return self.X @ self._check(theta)

    # full-vector evaluations ------------------------------------------
    def potential(self, theta, proj=None) -> float:
        theta = self._check(theta)
        z = self.X @ theta if proj is None else proj
        a = self.family.log_partition(z)
        lik = self._inv_phi * (float(np.sum(a)) - float(self.Y @ z))
        return lik - self.prior.log_density(theta, self.design, proj=z)

    def grad(self, theta, proj=None) -> np.ndarray:
        theta = self._check(theta)
        z = self.X @ theta if proj is None else proj
        resid = self.family.mean(z) - self.Y
        g = self._inv_phi * (self.X.T @ resid)
        return g - self.prior.grad_log_density(theta, self.design, proj=z)

    def hess(self, theta) -> np.ndarray:
        theta = self._check(theta)
        z = self.X @ theta
        w = self.family.variance_fn(z)
        H = self._inv_phi * (self.X.T * w) @ self.X
        H -= self.prior.hess_log_density(theta, self.design)
        return 0.5 * (H + H.T)

    def grad_batch(self, thetas) -> np.ndarray:
        """Gradients for a stack of parameter vectors, shape (m, d)."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        Z = thetas @ self.X.T
        R = self.family.mean(Z) - self.Y
        G = self._inv_phi * (R @ self.X)
        pk = self.prior.kind
        if pk == "flat":
            return G
        if pk == "gaussian":
            return G + thetas @ self.prior.Q.T
        if pk == "zellner":
            return G + self.prior._scale(self.X) * (Z @ self.X)
        return G - np.array([self.prior.grad_log_density(t, self.design) for t in thetas])

    def likelihood_hess(self, theta) -> np.ndarray:
        """Hessian of the likelihood part only: sum_i A''(x_i' theta) x_i x_i' / phi."""
        z = self.X @ self._check(theta)
        w = self.family.variance_fn(z)
        return self._inv_phi * (self.X.T * w) @ self.X

    # coordinate conditionals ------------------------------------------
    def conditional_slice(self, i: int, theta, proj, check: bool = False) -> "ConditionalSlice":
        """Potential of coordinate ``i`` with the others held at ``theta``.

        ``proj`` must equal ``X @ theta``; with ``check=True`` this is verified
        (O(nd)) and :class:`StaleCache` raised on mismatch.
        """
        theta = self._check(theta)
        if check and not np.allclose(proj, self.X @ theta, rtol=1e-10, atol=1e-10):
            raise StaleCache("cached projections do not match theta")
        xcol = self._Xcols[:, i]
        base = proj - theta[i] * xcol
        a, b, c, power = self.prior.slice_form(i, theta, self.design, base, xcol)
        return ConditionalSlice(
            family=self.family,
            inv_phi=self._inv_phi,
            base=base,
            xcol=xcol,
            yx=float(self._yx[i]),
            prior_coef=(a, b, c, power),
            nu=self.prior.nu,
            log_concave=self.prior.log_concave,
            center=float(theta[i]),
        )

    def update_coordinate(self, theta, proj, i: int, value: float) -> None:
        """Set ``theta[i] = value`` in place and refresh ``proj`` with n multiply-adds."""
        delta = value - theta[i]
        proj += delta * self._Xcols[:, i]
        theta[i] = value


@dataclass
class ConditionalSlice:
    """``t -> U(theta_1, .., t, .., theta_d)`` up to an additive constant.

    Each evaluation costs O(n) using the projections of the other coordinates.
    """

    family: GlmFamily
    inv_phi: float
    base: np.ndarray
    xcol: np.ndarray
    yx: float
    prior_coef: tuple
    nu: float
    log_concave: bool
    center: float

    @property
    def is_gaussian(self) -> bool:
        """True when the slice is exactly quadratic in t."""
        return self.family.kind == LINEAR and self.prior_coef[3] is None

    def gaussian_params(self):
        """(mean, precision) of the slice when :attr:`is_gaussian`."""
        a, b, _, _ = self.prior_coef
        # U(t) = inv_phi*(|base + t x|^2/2 - t yx) + (a t^2 + 2 b t)/2
        prec = self.inv_phi * float(self.xcol @ self.xcol) + a
        lin = self.inv_phi * (float(self.base @ self.xcol) - self.yx) + b
        return -lin / prec, prec

    def __call__(self, t: float) -> float:
        z = self.base + t * self.xcol
        A = self.family.log_partition(z)
        a, b, c, power = self.prior_coef
        pv = slice_potential(a, b, c, power, self.nu, t)[0]
        return float(self.inv_phi * (np.sum(A) - t * self.yx) + pv)

    def values(self, ts) -> np.ndarray:
        """Vectorized potential at an array of points, O(n) per point."""
        ts = np.asarray(ts, dtype=float)
        Z = self.base[None, :] + ts.ravel()[:, None] * self.xcol[None, :]
        A = self.family.log_partition(Z)
        a, b, c, power = self.prior_coef
        pv = slice_potential(a, b, c, power, self.nu, ts.ravel())[0]
        out = self.inv_phi * (A.sum(axis=1) - ts.ravel() * self.yx) + pv
        return out.reshape(ts.shape)

    def derivatives(self, t: float):
        """Value, first and second derivative at ``t``."""
        z = self.base + t * self.xcol
        A, dA, d2A = self.family.evaluate(z)
        x = self.xcol
        a, b, c, power = self.prior_coef
        pv, pd, pd2 = slice_potential(a, b, c, power, self.nu, t)
        v = self.inv_phi * (np.sum(A) - t * self.yx) + pv
        d1 = self.inv_phi * (float(dA @ x) - self.yx) + pd
        d2 = self.inv_phi * float(d2A @ (x * x)) + pd2
        return float(v), float(d1), float(d2)


# dataset files ---------------------------------------------------------
def save_dataset(path, X, Y) -> None:
    """Write ``y,x1,...,xd`` CSV."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y"] + [f"x{j + 1}" for j in range(X.shape[1])])
        for yi, row in zip(Y, X):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in row])


def load_dataset(path):
    """Read a ``y,x1,...,xd`` CSV; returns ``(X, Y)``."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DimensionMismatch(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    expected = ["y"] + [f"x{j + 1}" for j in range(d)]
    if d < 1 or header != expected:
        raise DimensionMismatch(f"{path}: header must be y,x1,...,xd")
    body = rows[1:]
    for k, r in enumerate(body, start=2):
        if len(r) != d + 1:
            raise DimensionMismatch(f"{path}:{k}: expected {d + 1} columns, got {len(r)}")
    data = np.array(body, dtype=float).reshape(len(body), d + 1)
    return data[:, 1:], data[:, 0]
