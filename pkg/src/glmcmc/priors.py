"""Prior families with mode at the origin.

Every supported prior is a function of a single quadratic form
``s(theta) = theta' Q theta`` (or, for the independent Student-t, of
``Q_i theta_i**2`` coordinate by coordinate).  Data-dependent kinds use
``Q = scale * X'X`` and never form that matrix when only ``X theta`` is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MissingDesign

FLAT = "flat"
GAUSSIAN = "gaussian"
ZELLNER = "zellner"
STUDENT_T = "student_t"
STUDENT_T_INDEP = "student_t_indep"
KINDS = (FLAT, GAUSSIAN, ZELLNER, STUDENT_T, STUDENT_T_INDEP)


def zellner_scale(n: int, d: int) -> float:
    """Default Zellner precision multiplier 3d / (n pi^2)."""
    return 3.0 * d / (n * math.pi**2)


@dataclass(frozen=True, eq=False)
class Prior:
    """Unnormalized prior density.

    Parameters
    ----------
    kind : str
        One of ``flat``, ``gaussian``, ``zellner``, ``student_t``,
        ``student_t_indep``.
    Q : ndarray, optional
        Precision-like matrix for ``gaussian`` and ``student_t``. When
        ``student_t`` has no ``Q``, it uses ``scale * X'X``.
    scale : float, optional
        Multiplier of ``X'X`` for data-dependent priors. ``zellner`` defaults
        to ``3d/(n pi^2)``.
    nu : float
        Degrees of freedom for the Student-t kinds.
    q : ndarray, optional
        Per-coordinate precisions for ``student_t_indep``.
    rho_pi : float
        Probability that the curvature bound fails. Metadata only.
    """

    kind: str
    Q: np.ndarray | None = None
    scale: float | None = None
    nu: float = 1.0
    q: np.ndarray | None = None
    rho_pi: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == GAUSSIAN and self.Q is None:
            raise ValueError("gaussian prior needs Q")
        if self.kind == STUDENT_T_INDEP and self.q is None:
            raise ValueError("independent Student-t prior needs q")
        if self.kind in (STUDENT_T, STUDENT_T_INDEP) and not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.Q is not None:
            object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
        if self.q is not None:
            object.__setattr__(self, "q", np.asarray(self.q, dtype=float).ravel())

    # constructors -----------------------------------------------------
    @classmethod
    def flat(cls):
        return cls(FLAT)

    @classmethod
    def gaussian(cls, Q):
        return cls(GAUSSIAN, Q=Q)

    @classmethod
    def isotropic(cls, precision: float, d: int):
        return cls(GAUSSIAN, Q=precision * np.eye(d))

    @classmethod
    def zellner(cls, scale: float | None = None):
        return cls(ZELLNER, scale=scale, rho_pi=math.nan)

    @classmethod
    def student_t(cls, nu: float, Q=None, scale: float | None = None):
        if Q is None and scale is None:
            raise ValueError("student_t needs Q or a data scale")
        return cls(STUDENT_T, Q=Q, scale=scale, nu=nu)

    @classmethod
    def student_t_indep(cls, nu: float, q):
        return cls(STUDENT_T_INDEP, q=q, nu=nu)

    # structure --------------------------------------------------------
    @property
    def data_dependent(self) -> bool:
        return self.kind == ZELLNER or (self.kind == STUDENT_T and self.Q is None)

    @property
    def log_concave(self) -> bool:
        return self.kind in (FLAT, GAUSSIAN, ZELLNER)

    def _scale(self, X) -> float:
        if self.scale is not None:
            return float(self.scale)
        n, d = X.shape
        return zellner_scale(n, d)

    def _check_design(self, X):
        if self.data_dependent and X is None:
            raise MissingDesign(f"{self.kind} prior requires the design matrix")

    def precision_matrix(self, d: int, X=None) -> np.ndarray:
        """Dense Q (zero for flat, diag(q) for independent Student-t)."""
        self._check_design(X)
        if self.kind == FLAT:
            return np.zeros((d, d))
        if self.kind == STUDENT_T_INDEP:
            return np.diag(self.q)
        if self.data_dependent:
            return self._scale(X) * (X.T @ X)
        return self.Q

    def curvature_constant(self, d: int, X=None) -> float:
        """C_pi with sup |D^2 ln pi| <= C_pi * d."""
        if self.kind == FLAT:
            return 0.0
        if self.kind == STUDENT_T_INDEP:
            return (1.0 + 1.0 / self.nu) * float(np.max(self.q))
        lam = float(np.linalg.eigvalsh(self.precision_matrix(d, X))[-1])
        if self.kind == STUDENT_T:
            lam *= (self.nu + d) / self.nu
        return lam / d

    # evaluation -------------------------------------------------------
    def _quad(self, theta, X, proj=None):
        """theta' Q theta and Q theta."""
        if self.data_dependent:
            s = self._scale(X)
            z = X @ theta if proj is None else proj
            return s * float(z @ z), s * (X.T @ z)
        Qt = self.Q @ theta
        return float(theta @ Qt), Qt

    def log_density(self, theta, X=None, proj=None) -> float:
        theta = np.asarray(theta, dtype=float)
        self._check_design(X)
        if self.kind == FLAT:
            return 0.0
        if self.kind == STUDENT_T_INDEP:
            return float(-0.5 * (self.nu + 1) * np.sum(np.log1p(self.q * theta**2 / self.nu)))
        qf, _ = self._quad(theta, X, proj)
        if self.kind == STUDENT_T:
            return -0.5 * (self.nu + theta.size) * math.log1p(qf / self.nu)
        return -0.5 * qf

    def grad_log_density(self, theta, X=None, proj=None) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        self._check_design(X)
        if self.kind == FLAT:
            return np.zeros_like(theta)
        if self.kind == STUDENT_T_INDEP:
            return -(self.nu + 1) * self.q * theta / (self.nu + self.q * theta**2)
        qf, Qt = self._quad(theta, X, proj)
        if self.kind == STUDENT_T:
            return -(self.nu + theta.size) * Qt / (self.nu + qf)
        return -Qt

    def hess_log_density(self, theta, X=None) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        d = theta.size
        Q = self.precision_matrix(d, X)
        if self.kind == FLAT:
            return Q
        if self.kind == STUDENT_T_INDEP:
            qt2 = self.q * theta**2
            return np.diag(-(self.nu + 1) * self.q * (self.nu - qt2) / (self.nu + qt2) ** 2)
        if self.kind == STUDENT_T:
            Qt = Q @ theta
            den = self.nu + float(theta @ Qt)
            return -(self.nu + d) * (Q / den - 2.0 * np.outer(Qt, Qt) / den**2)
        return -Q

    # coordinate slices ------------------------------------------------
    def slice_form(self, i, theta, X=None, base=None, xcol=None):
        """Coefficients of the prior potential along coordinate ``i``.

        Returns ``(a, b, c, power)`` such that, as a function of
        ``t = theta_i``, the quadratic form is ``a t^2 + 2 b t + c`` and the
        prior potential is ``q/2`` (``power`` is None) or
        ``(power/2) log(1 + q/nu)``.  ``base`` is ``X theta`` with column i
        removed and ``xcol`` is ``X[:, i]``; both are O(n) to use.
        """
        if self.kind == FLAT:
            return 0.0, 0.0, 0.0, None
        if self.kind == STUDENT_T_INDEP:
            return float(self.q[i]), 0.0, 0.0, self.nu + 1
        d = len(theta)
        if self.data_dependent:
            self._check_design(X)
            s = self._scale(X)
            a, b, c = s * float(xcol @ xcol), s * float(base @ xcol), s * float(base @ base)
        else:
            Q = self.Q
            row = Q[i]
            b = float(row @ theta) - row[i] * theta[i]
            a = float(Q[i, i])
            # the additive constant only matters inside the Student-t log
            c = 0.0
            if self.kind == STUDENT_T:
                c = float(theta @ Q @ theta) - 2.0 * theta[i] * b - a * theta[i] ** 2
        power = self.nu + d if self.kind == STUDENT_T else None
        return a, b, c, power

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "nu": self.nu, "scale": self.scale}
        if self.Q is not None:
            out["Q"] = self.Q.tolist()
        if self.q is not None:
            out["q"] = self.q.tolist()
        return out


def prior_log_density(prior: Prior, theta, design=None) -> float:
    """Unnormalized log prior at ``theta``; ``design`` is required iff data-dependent."""
    theta = np.asarray(theta, dtype=float)
    if prior.Q is not None and prior.Q.shape != (theta.size, theta.size):
        raise DimensionMismatch("Q does not match theta")
    return prior.log_density(theta, design)


def slice_potential(a, b, c, power, nu, t):
    """Prior potential, first and second derivative along a coordinate slice."""
    q = a * t * t + 2.0 * b * t + c
    dq = 2.0 * (a * t + b)
    if power is None:
        return 0.5 * q, 0.5 * dq, a + 0.0 * t
    den = nu + q
    v = 0.5 * power * np.log1p(q / nu)
    dv = 0.5 * power * dq / den
    d2v = 0.5 * power * (2.0 * a / den - dq * dq / den**2)
    return v, dv, d2v
