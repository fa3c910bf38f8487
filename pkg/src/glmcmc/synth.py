"""Synthetic GLM data: Gaussian design and canonical-family responses."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import rng as rngmod
from .families import LINEAR, LOGISTIC, GlmFamily
from .posterior import save_dataset

log = logging.getLogger(__name__)

POISSON_RATE_CAP = 1e12


@dataclass(frozen=True)
class SigmaStats:
    lam_max: float
    lam_min: float
    trace: float

    @property
    def kappa(self) -> float:
        return self.lam_max / self.lam_min

    @classmethod
    def from_cholesky(cls, L) -> "SigmaStats":
        S = L @ L.T
        ev = np.linalg.eigvalsh(S)
        return cls(float(ev[-1]), float(ev[0]), float(np.trace(S)))

    @classmethod
    def identity(cls, d: int, scale: float = 1.0) -> "SigmaStats":
        return cls(scale, scale, scale * d)


@dataclass(eq=False)
class SynthConfig:
    n: int
    d: int
    sigma_chol: np.ndarray
    theta_star: np.ndarray
    family: GlmFamily
    seed: int = 0
    stats: SigmaStats = field(init=False)

    def __post_init__(self):
        self.sigma_chol = np.asarray(self.sigma_chol, dtype=float)
        self.theta_star = np.asarray(self.theta_star, dtype=float).ravel()
        if self.sigma_chol.shape != (self.d, self.d):
            raise ValueError("sigma_chol must be d x d")
        if not np.allclose(self.sigma_chol, np.tril(self.sigma_chol)):
            raise ValueError("sigma_chol must be lower triangular")
        if self.theta_star.size != self.d:
            raise ValueError("theta_star must have length d")
        self.stats = SigmaStats.from_cholesky(self.sigma_chol)
        if not self.stats.lam_min > 0:
            raise ValueError("Sigma must be positive definite")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "seed": self.seed,
            "family": self.family.to_dict(),
            "sigma_chol": self.sigma_chol.tolist(),
            "theta_star": self.theta_star.tolist(),
            "lam_max": self.stats.lam_max,
            "lam_min": self.stats.lam_min,
            "kappa": self.stats.kappa,
        }


def sigma_cholesky(spec, d: int) -> np.ndarray:
    """Cholesky factor from ``"identity"``, a positive scale, or a path to a text matrix."""
    if spec is None or spec == "identity":
        return np.eye(d)
    if isinstance(spec, (int, float)):
        return np.sqrt(float(spec)) * np.eye(d)
    L = np.loadtxt(spec, ndmin=2)
    if L.shape != (d, d):
        raise ValueError(f"{spec}: expected a {d}x{d} Cholesky factor")
    return L


def true_parameter(spec, d: int, seed: int = 0, norm: float = 1.0) -> np.ndarray:
    """theta* from ``"zero"``, ``"unit"`` (uniform direction, given norm), or a file."""
    if spec is None or spec == "zero":
        return np.zeros(d)
    if spec in ("unit", "unit-norm"):
        v = rngmod.stream(seed, "data", chain=1).standard_normal(d)
        return norm * v / np.linalg.norm(v)
    t = np.loadtxt(spec).ravel()
    if t.size != d:
        raise ValueError(f"{spec}: expected {d} entries")
    return t


def sample_design(cfg: SynthConfig, rng=None) -> np.ndarray:
    """n i.i.d. rows from N(0, Sigma)."""
    g = rngmod.stream(cfg.seed, "design") if rng is None else rngmod.as_generator(rng)
    return g.standard_normal((cfg.n, cfg.d)) @ cfg.sigma_chol.T


def sample_responses(family: GlmFamily, theta_star, X, rng) -> np.ndarray:
    """Responses from the canonical family at linear predictor ``X theta_star``."""
    g = rngmod.as_generator(rng)
    eta = np.asarray(X, dtype=float) @ np.asarray(theta_star, dtype=float)
    if family.kind == LINEAR:
        return eta + np.sqrt(family.dispersion) * g.standard_normal(eta.size)
    if family.kind == LOGISTIC:
        return (g.random(eta.size) < expit(eta)).astype(float)
    rate = np.exp(eta)
    if np.any(rate > POISSON_RATE_CAP):
        log.warning("Poisson rate capped at %.0e for %d rows", POISSON_RATE_CAP, int(np.sum(rate > POISSON_RATE_CAP)))
        rate = np.minimum(rate, POISSON_RATE_CAP)
    return g.poisson(rate).astype(float)


def make_dataset(cfg: SynthConfig):
    """(X, Y) from dedicated design and response streams of ``cfg.seed``."""
    X = sample_design(cfg, rngmod.stream(cfg.seed, "design"))
    Y = sample_responses(cfg.family, cfg.theta_star, X, rngmod.stream(cfg.seed, "response"))
    return X, Y


def write_dataset(cfg: SynthConfig, csv_path, X=None, Y=None) -> None:
    """Dataset CSV plus ``<csv_path>.json`` sidecar holding ``cfg``."""
    if X is None:
        X, Y = make_dataset(cfg)
    save_dataset(csv_path, X, Y)
    with open(f"{csv_path}.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
