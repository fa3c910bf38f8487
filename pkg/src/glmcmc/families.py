"""Canonical-link GLM families: log-partition A and its first two derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

LINEAR = "linear"
LOGISTIC = "logistic"
POISSON = "poisson"
KINDS = (LINEAR, LOGISTIC, POISSON)


@dataclass(frozen=True)
class GlmFamily:
    """Exponential-family likelihood ``exp((y z - A(z)) / dispersion)``.

    Parameters
    ----------
    kind : {"linear", "logistic", "poisson"}
    dispersion : float
        ``sigma**2`` for linear regression, 1 otherwise.
    clip_radius : float
        Poisson only. For ``z >= clip_radius`` the exponential is replaced by
        its second-order Taylor extension, which keeps ``A''`` bounded by
        ``exp(clip_radius)``. ``inf`` recovers the plain Poisson family.
    """

    kind: str
    dispersion: float = 1.0
    clip_radius: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family {self.kind!r}")
        if not self.dispersion > 0:
            raise ValueError("dispersion must be positive")
        if self.kind != POISSON and math.isfinite(self.clip_radius):
            raise ValueError("clip_radius only applies to the Poisson family")
        if not self.clip_radius > 0:
            raise ValueError("clip_radius must be positive")

    @classmethod
    def linear(cls, sigma: float = 1.0) -> "GlmFamily":
        return cls(LINEAR, dispersion=sigma**2)

    @classmethod
    def logistic(cls) -> "GlmFamily":
        return cls(LOGISTIC)

    @classmethod
    def poisson(cls, clip_radius: float = math.inf) -> "GlmFamily":
        return cls(POISSON, clip_radius=clip_radius)

    @property
    def clipped(self) -> bool:
        return self.kind == POISSON and math.isfinite(self.clip_radius)

    def log_partition(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == LOGISTIC:
            return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
        if self.kind == POISSON and not self.clipped:
            return np.exp(z)
        return self.evaluate(z)[0]

    def derivatives(self, z):
        """``(A'(z), A''(z))`` without evaluating A itself."""
        z = np.asarray(z, dtype=float)
        if self.kind == LOGISTIC:
            s = expit(z)
            # s(-z) instead of 1 - s keeps the relative accuracy in the tails
            return s, np.minimum(s * expit(-z), 0.25)
        return self.evaluate(z)[1:]

    def mean(self, z):
        """A'(z), the conditional mean of Y given the linear predictor."""
        return self.evaluate(z)[1]

    def variance_fn(self, z):
        return self.evaluate(z)[2]

    def evaluate(self, z):
        """Return ``(A(z), A'(z), A''(z))``, elementwise for array input."""
        z = np.asarray(z, dtype=float)
        if self.kind == LINEAR:
            return 0.5 * z * z, z.copy(), np.ones_like(z)
        if self.kind == LOGISTIC:
            e = np.exp(-np.abs(z))
            r = 1.0 / (1.0 + e)
            a = np.maximum(z, 0.0) + np.log1p(e)
            s = np.where(z >= 0.0, r, e * r)
            # the clamp removes one-ulp overshoot of 1/4 near z = 0
            return a, s, np.minimum(e * r * r, 0.25)
        if not self.clipped:
            e = np.exp(z)
            return e, e, e
        rh = self.clip_radius
        e = np.exp(np.minimum(z, rh))
        w = z - rh
        hi = w >= 0.0
        er = math.exp(rh)
        a = np.where(hi, er * (1.0 + w + 0.5 * w * w), e)
        da = np.where(hi, er * (1.0 + w), e)
        d2a = np.where(hi, er, e)
        return a, da, d2a

    def curvature_bound(self) -> float:
        """sup_z A''(z), scaled by the inverse dispersion; inf for plain Poisson."""
        if self.kind == LINEAR:
            return 1.0 / self.dispersion
        if self.kind == LOGISTIC:
            return 0.25
        return math.exp(self.clip_radius) if self.clipped else math.inf

    def min_curvature_on_ball(self, radius: float) -> float:
        """inf of A'' over [-radius, radius]."""
        if self.kind == LINEAR:
            return 1.0
        return float(self.evaluate(np.array([radius if self.kind == LOGISTIC else -radius]))[2][0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dispersion": self.dispersion, "clip_radius": self.clip_radius}

    @classmethod
    def from_dict(cls, d: dict) -> "GlmFamily":
        return cls(d["kind"], float(d.get("dispersion", 1.0)), float(d.get("clip_radius", math.inf)))


def family_eval(family: GlmFamily, z):
    """Evaluate ``(A, A', A'')`` of ``family`` at ``z``. Scalars in, scalars out."""
    a, da, d2a = family.evaluate(z)
    if np.ndim(z) == 0:
        return float(a), float(da), float(d2a)
    return a, da, d2a
