"""Sample-based distances, coupling contraction and effective sample size."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DimensionMismatch, EmptySamples
from .samplers.hmc import hmc_coupled_iterate
from .samplers.theory import HmcParams


# 1-D and sliced Wasserstein ------------------------------------------------
def w2_1d(x, y) -> float:
    """Exact W2 between two 1-D empirical measures (quantile coupling)."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise EmptySamples("both samples must be nonempty")
    if x.size == y.size:
        return float(np.sqrt(np.mean((x - y) ** 2)))
    # piecewise-constant quantile functions on the merged grid of levels
    levels = np.union1d(np.arange(1, x.size + 1) / x.size, np.arange(1, y.size + 1) / y.size)
    widths = np.diff(np.concatenate([[0.0], levels]))
    mids = levels - 0.5 * widths
    qx = x[np.minimum((mids * x.size).astype(int), x.size - 1)]
    qy = y[np.minimum((mids * y.size).astype(int), y.size - 1)]
    return float(np.sqrt(np.sum(widths * (qx - qy) ** 2)))


def random_directions(d: int, n_proj: int, rng) -> np.ndarray:
    v = np.random.default_rng(rng).standard_normal((n_proj, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sliced_w2(samples_a, samples_b, n_proj: int = 100, rng=None, directions=None) -> float:
    """Mean over random unit directions of the 1-D W2 between projected samples."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    a = a[:, None] if a.ndim == 1 else a
    b = b[:, None] if b.ndim == 1 else b
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"samples have dimensions {a.shape[1]} and {b.shape[1]}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptySamples("both sample sets must be nonempty")
    V = random_directions(a.shape[1], n_proj, rng) if directions is None else np.asarray(directions)
    pa, pb = a @ V.T, b @ V.T
    if a.shape[0] == b.shape[0]:
        pa.sort(axis=0)
        pb.sort(axis=0)
        return float(np.mean(np.sqrt(np.mean((pa - pb) ** 2, axis=0))))
    return float(np.mean([w2_1d(pa[:, k], pb[:, k]) for k in range(V.shape[0])]))


# marginal distances --------------------------------------------------------
def fd_edges(x, grid: int | None = None) -> np.ndarray:
    """Histogram edges with Freedman-Diaconis width, or ``grid`` equal bins."""
    x = np.asarray(x, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if grid is None:
        q75, q25 = np.percentile(x, [75, 25])
        width = 2.0 * (q75 - q25) * x.size ** (-1.0 / 3.0)
        grid = int(np.clip(math.ceil((hi - lo) / width), 1, 100_000)) if width > 0 else 1
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, grid + 1)


def marginal_tv(samples, cdf, grid: int | None = None) -> float:
    """Half the L1 distance between binned sample mass and reference bin mass.

    Reference mass outside the sample range counts fully.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySamples("no samples")
    edges = fd_edges(x, grid)
    counts, _ = np.histogram(x, bins=edges)
    F = np.asarray(cdf(edges), dtype=float)
    ref = np.diff(F)
    outside = F[0] + (1.0 - F[-1])
    return float(min(1.0, 0.5 * (np.abs(counts / x.size - ref).sum() + outside)))


def ks_stats(samples, reference) -> np.ndarray:
    """Per-coordinate Kolmogorov-Smirnov statistics.

    ``reference`` is either an array of reference samples (two-sample
    statistic) or a sequence of CDF callables, one per coordinate.
    """
    S = np.asarray(samples, dtype=float)
    S = S[:, None] if S.ndim == 1 else S
    if S.shape[0] == 0:
        raise EmptySamples("no samples")
    if callable(reference) or (isinstance(reference, (list, tuple)) and callable(reference[0])):
        cdfs = [reference] * S.shape[1] if callable(reference) else reference
        return np.array([stats.kstest(S[:, j], cdfs[j]).statistic for j in range(S.shape[1])])
    R = np.asarray(reference, dtype=float)
    R = R[:, None] if R.ndim == 1 else R
    if R.shape[1] != S.shape[1]:
        raise DimensionMismatch("samples and reference differ in dimension")
    return np.array([ks_2samp_stat(S[:, j], R[:, j]) for j in range(S.shape[1])])


def ks_2samp_stat(x, y) -> float:
    """Two-sample KS statistic (sup distance between empirical CDFs)."""
    x = np.sort(x)
    y = np.sort(y)
    allv = np.concatenate([x, y])
    fx = np.searchsorted(x, allv, side="right") / x.size
    fy = np.searchsorted(y, allv, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


# effective sample size -----------------------------------------------------
def autocorrelation(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n] / n
    return acov / acov[0]


def ess(series) -> float:
    """Effective sample size by the initial monotone positive sequence estimator."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise ValueError("ESS needs at least 10 values")
    if np.var(x) <= 1e-300 * max(1.0, float(np.mean(x * x))):
        return 1.0
    rho = autocorrelation(x)
    pairs = rho[: 2 * ((n - 1) // 2)].reshape(-1, 2).sum(axis=1)
    tau = -1.0
    prev = math.inf
    for g in pairs:
        if g <= 0:
            break
        g = min(g, prev)
        tau += 2.0 * g
        prev = g
    tau = max(tau, 1.0 / math.log10(max(n, 10)))
    return float(max(1.0, n / tau))


# coupling contraction ------------------------------------------------------
@dataclass
class ContractionStats:
    max_ratio: float
    mean_ratio: float
    ratios: np.ndarray
    theory: float = math.nan

    def violations(self, bound: float, rtol: float = 1e-12) -> int:
        return int(np.sum(self.ratios > bound * (1.0 + rtol)))


def contraction_factor(u: int) -> float:
    """33/80 for the randomized midpoint scheme, 1/16 for Verlet."""
    return 33.0 / 80.0 if u == 1 else 1.0 / 16.0


def coupled_contraction(grad, m: float, params: HmcParams, trials: int = 100, rng=None,
                        scale: float = 1.0, d: int = 2) -> ContractionStats:
    """Squared-distance ratios of ``trials`` synchronously coupled pairs after one iteration.

    Pairs start at independent ``N(0, scale^2 I_d)`` points; a pair that starts
    at zero distance contributes ratio 0. ``theory`` holds the contraction
    factor ``exp(-2 c m T^2)`` for the integrator in ``params``.
    """
    rng = np.random.default_rng(rng)
    ratios = np.empty(trials)
    for k in range(trials):
        x = scale * rng.standard_normal(d)
        y = scale * rng.standard_normal(d)
        x1, y1 = hmc_coupled_iterate(x, y, params, grad, rng)
        d0 = float(np.sum((x - y) ** 2))
        d1 = float(np.sum((x1 - y1) ** 2))
        ratios[k] = 0.0 if d0 == 0.0 else d1 / d0
    bound = math.exp(-2.0 * contraction_factor(params.u) * m * params.T**2)
    return ContractionStats(float(ratios.max()), float(ratios.mean()), ratios, bound)


# summary -----------------------------------------------------------------
@dataclass
class DistanceReport:
    sliced_w2: float
    marginal_tv: np.ndarray
    ks_stats: np.ndarray
    ess: np.ndarray

    def to_dict(self) -> dict:
        return {
            "sliced_w2": self.sliced_w2,
            "max_marginal_tv": float(np.max(self.marginal_tv)) if self.marginal_tv.size else math.nan,
            "max_ks": float(np.max(self.ks_stats)) if self.ks_stats.size else math.nan,
            "min_ess": float(np.min(self.ess)) if self.ess.size else math.nan,
        }


def empirical_cdf(reference):
    r = np.sort(np.asarray(reference, dtype=float))
    return lambda t: np.searchsorted(r, t, side="right") / r.size


def distance_report(samples, reference, trace=None, n_proj: int = 50, rng=None) -> DistanceReport:
    """Distances of ``samples`` (M, d) to reference samples; ESS from ``trace`` (k, d) if given."""
    S = np.atleast_2d(samples)
    R = np.atleast_2d(reference)
    tv = np.array([marginal_tv(S[:, j], empirical_cdf(R[:, j])) for j in range(S.shape[1])])
    ks = ks_stats(S, R)
    e = np.array([ess(trace[:, j]) for j in range(trace.shape[1])]) if trace is not None and len(trace) >= 10 else np.array([])
    return DistanceReport(sliced_w2(S, R, n_proj, rng), tv, ks, e)
