"""Random-scan Gibbs sampling with exact coordinate conditionals.

Each iteration picks a coordinate uniformly, draws it exactly from its
conditional given the others, and refreshes the cached projections ``X theta``
with ``n`` multiply-adds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..errors import ConditionalSamplerFailure
from ..families import LINEAR
from ..priors import FLAT, GAUSSIAN, ZELLNER
from .conditional import MAX_EXPANSIONS, MAX_REJECTIONS, CurvatureHint, sample_conditional_1d
from .theory import GibbsParams


@dataclass
class ChainState:
    """Mutable state of one chain.

    ``rng`` drives the primary choice (momentum or coordinate) and
    ``aux_rng`` the secondary one (midpoints or conditional draws).
    """

    theta: np.ndarray
    step_index: int = 0
    rng: np.random.Generator | None = None
    aux_rng: np.random.Generator | None = None
    proj: np.ndarray | None = None

    @classmethod
    def for_gibbs(cls, post, theta, seed: int, chain_id: int = 0) -> "ChainState":
        theta = np.array(theta, dtype=float)
        return cls(theta, 0, rngmod.stream(seed, "coordinate", chain_id),
                   rngmod.stream(seed, "conditional", chain_id), post.projections(theta))

    @classmethod
    def for_hmc(cls, theta, seed: int, chain_id: int = 0) -> "ChainState":
        return cls(np.array(theta, dtype=float), 0, rngmod.stream(seed, "momentum", chain_id),
                   rngmod.stream(seed, "midpoint", chain_id))


def feasible_init(theta_map, precision: float, rng, size: int | None = None) -> np.ndarray:
    """``theta_map + W`` with ``W ~ N(0, I / precision)``; ``size`` stacks several draws."""
    if not precision > 0:
        raise ValueError("precision must be positive")
    theta_map = np.asarray(theta_map, dtype=float)
    shape = theta_map.shape if size is None else (size,) + theta_map.shape
    if math.isinf(precision):
        return np.broadcast_to(theta_map, shape).copy()
    return theta_map + rngmod.as_generator(rng).standard_normal(shape) / math.sqrt(precision)


def gibbs_iterate(chain: ChainState, post, check: bool = False) -> ChainState:
    """One random-scan update of ``chain`` in place."""
    i = int(chain.rng.integers(post.d))
    slc = post.conditional_slice(i, chain.theta, chain.proj, check=check)
    t = sample_conditional_1d(slc, CurvatureHint(center=slc.center), chain.aux_rng)
    post.update_coordinate(chain.theta, chain.proj, i, t)
    chain.step_index += 1
    return chain


def run_gibbs(post, params: GibbsParams, theta_map, n_iter: int | None = None, seed: int = 0,
              chain_id: int = 0, thin: int = 1, theta0=None):
    """One chain from a feasible start; returns the ``(k, d)`` trace including the start."""
    n_iter = params.N if n_iter is None else n_iter
    if theta0 is None:
        theta0 = feasible_init(theta_map, params.init_precision, rngmod.stream(seed, "init", chain_id))
    chain = ChainState.for_gibbs(post, theta0, seed, chain_id)
    trace = [chain.theta.copy()]
    for k in range(1, n_iter + 1):
        gibbs_iterate(chain, post)
        if k % thin == 0:
            trace.append(chain.theta.copy())
    return np.array(trace)


# ensembles ---------------------------------------------------------------
def _log_seg_mass(lo, hi, slope, ha, hb):
    """Vectorized log-mass of ``exp(tangent)`` on ``[lo, hi]``; ``ha``/``hb`` are end values."""
    w = hi - lo
    sw = slope * w
    with np.errstate(all="ignore"):
        small = np.abs(sw) < 1e-12
        pos = slope > 0
        out = np.where(pos, hb + np.log(-np.expm1(-sw)) - np.log(np.abs(slope)),
                       ha + np.log(-np.expm1(sw)) - np.log(np.abs(slope)))
        out = np.where(small, ha + np.log(w), out)
        out = np.where(np.isneginf(lo), hb - np.log(np.abs(slope)), out)
        out = np.where(np.isposinf(hi), ha - np.log(np.abs(slope)), out)
        out = np.where(w > 0, out, -np.inf)
    return out


def _seg_draw(lo, hi, slope, u):
    w = hi - lo
    sw = slope * w
    with np.errstate(all="ignore"):
        pos = np.where(slope > 0, hi + np.log(np.exp(-sw) + u * (-np.expm1(-sw))) / slope,
                       lo + np.log1p(u * np.expm1(sw)) / slope)
        out = np.where(np.abs(sw) < 1e-12, lo + u * w, pos)
        out = np.where(np.isneginf(lo), hi + np.log(u) / slope, out)
        out = np.where(np.isposinf(hi), lo + np.log1p(-u) / slope, out)
    return out


class GibbsEnsemble:
    """``m`` independent random-scan chains advanced in lockstep.

    Every chain picks its own coordinate. Conditionals of log-concave
    posteriors are drawn by vectorized tangent-envelope rejection (three
    tangents at a Newton estimate of the mode and one local scale either
    side), quadratic ones in closed form; other priors fall back to the
    scalar sampler chain by chain.
    """

    def __init__(self, post, theta0, seed: int = 0, stream_id: int = 0):
        self.post = post
        self.theta = np.array(np.atleast_2d(theta0), dtype=float)
        self.m, self.d = self.theta.shape
        self.proj = self.theta @ post.X.T
        self.coord_rng = rngmod.stream(seed, "coordinate", stream_id)
        self.cond_rng = rngmod.stream(seed, "conditional", stream_id)
        self.step_index = 0
        pk = post.prior.kind
        self._vector = pk in (FLAT, GAUSSIAN, ZELLNER)
        self._XT = np.ascontiguousarray(post.X.T)
        if pk == ZELLNER:
            self._zs = post.prior._scale(post.X)
        self.rejections = 0

    # slice coefficients for all chains at once
    def _coefficients(self, idx):
        post = self.post
        rows = np.arange(self.m)
        xc = self._XT[idx]                                   # (m, n)
        ti = self.theta[rows, idx]
        base = self.proj - ti[:, None] * xc
        yx = post._yx[idx]
        pk = post.prior.kind
        if pk == FLAT:
            a = np.zeros(self.m)
            b = np.zeros(self.m)
        elif pk == GAUSSIAN:
            Q = post.prior.Q
            a = Q[idx, idx]
            b = np.einsum("ij,ij->i", Q[idx], self.theta) - a * ti
        else:
            a = self._zs * np.einsum("ij,ij->i", xc, xc)
            b = self._zs * np.einsum("ij,ij->i", base, xc)
        return xc, base, yx, a, b, ti

    def _eval(self, t, xc, base, yx, a, b, need: str = "vd", xc2=None):
        """Slice potential and derivatives at ``t`` (one value per row).

        ``need`` lists what to compute: ``v`` value, ``d`` first and second
        derivatives; skipped entries are returned as None.
        """
        fam = self.post.family
        ip = self.post._inv_phi
        z = base + t[:, None] * xc
        v = d1 = d2 = None
        with np.errstate(over="ignore", invalid="ignore"):
            if "v" in need:
                v = ip * (fam.log_partition(z).sum(axis=1) - t * yx) + 0.5 * a * t * t + b * t
            if "d" in need:
                dA, d2A = fam.derivatives(z)
                d1 = ip * (np.einsum("ij,ij->i", dA, xc) - yx) + a * t + b
                d2 = ip * np.einsum("ij,ij->i", d2A, xc2 if xc2 is not None else xc * xc) + a
        return v, d1, d2

    def step(self) -> None:
        post = self.post
        idx = self.coord_rng.integers(self.d, size=self.m)
        if not self._vector:
            for c in range(self.m):
                i = int(idx[c])
                slc = post.conditional_slice(i, self.theta[c], self.proj[c])
                t = sample_conditional_1d(slc, CurvatureHint(center=slc.center), self.cond_rng)
                post.update_coordinate(self.theta[c], self.proj[c], i, t)
            self.step_index += 1
            return
        xc, base, yx, a, b, ti = self._coefficients(idx)
        if post.family.kind == LINEAR:
            ip = post._inv_phi
            prec = ip * np.einsum("ij,ij->i", xc, xc) + a
            lin = ip * (np.einsum("ij,ij->i", base, xc) - yx) + b
            t = -lin / prec + self.cond_rng.standard_normal(self.m) / np.sqrt(prec)
        else:
            t = self._envelope_draw(ti, xc, base, yx, a, b)
        self.proj += (t - ti)[:, None] * xc
        self.theta[np.arange(self.m), idx] = t
        self.step_index += 1

    def _envelope_draw(self, t0, xc, base, yx, a, b):
        xc2 = xc * xc
        _, d1, d2 = self._eval(t0, xc, base, yx, a, b, "d", xc2)
        sd0 = 1.0 / np.sqrt(np.maximum(d2, 1e-300))
        c = t0 - np.clip(d1 / d2, -3.0 * sd0, 3.0 * sd0)
        vc, dc, d2c = self._eval(c, xc, base, yx, a, b, "vd", xc2)
        sd = 1.0 / np.sqrt(np.maximum(d2c, 1e-300))
        # outer abscissae must straddle the mode: U' < 0 on the left, > 0 on the right
        pts = []
        for sign in (-1.0, 1.0):
            k = np.ones(self.m)
            x = c + sign * sd
            vx, dx, _ = self._eval(x, xc, base, yx, a, b, "vd", xc2)
            bad = sign * dx <= 0
            it = 0
            while np.any(bad):
                it += 1
                if it > MAX_EXPANSIONS:
                    raise ConditionalSamplerFailure("could not bracket a conditional mode")
                k[bad] *= 2.0
                x[bad] = c[bad] + sign * k[bad] * sd[bad]
                sub = np.flatnonzero(bad)
                v2, d2_, _ = self._eval(x[sub], xc[sub], base[sub], yx[sub], a[sub], b[sub])
                vx[sub], dx[sub] = v2, d2_
                bad = sign * dx <= 0
            pts.append((x, vx, dx))
        (xl, vl, dl), (xr, vr, dr) = pts
        # tangents of the log-density h = -U, shifted so that h(c) = 0
        X = np.stack([xl, c, xr], axis=1)
        H = -np.stack([vl - vc, np.zeros(self.m), vr - vc], axis=1)
        S = -np.stack([dl, dc, dr], axis=1)
        Z = np.empty((self.m, 4))
        Z[:, 0], Z[:, 3] = -np.inf, np.inf
        for j in range(2):
            den = S[:, j] - S[:, j + 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                z = (H[:, j + 1] - H[:, j] - X[:, j + 1] * S[:, j + 1] + X[:, j] * S[:, j]) / den
            z = np.where(den > 1e-14 * np.maximum(np.abs(S[:, j]), 1.0), z, 0.5 * (X[:, j] + X[:, j + 1]))
            Z[:, j + 1] = np.clip(z, X[:, j], X[:, j + 1])
        lo, hi = Z[:, :3], Z[:, 1:]
        with np.errstate(invalid="ignore"):
            ha = np.where(np.isfinite(lo), H + S * (lo - X), -np.inf)
            hb = np.where(np.isfinite(hi), H + S * (hi - X), -np.inf)
        logm = _log_seg_mass(lo, hi, S, ha, hb)
        w = np.exp(logm - logm.max(axis=1, keepdims=True))
        cw = np.cumsum(w, axis=1)
        cw /= cw[:, -1:]

        out = np.empty(self.m)
        todo = np.arange(self.m)
        tries = 0
        rng = self.cond_rng
        while todo.size:
            tries += 1
            if tries > MAX_REJECTIONS:
                raise ConditionalSamplerFailure(f"more than {MAX_REJECTIONS} rejections")
            r = rng.random(todo.size)
            seg = np.minimum((r[:, None] > cw[todo]).sum(axis=1), 2)
            rows = todo
            s_lo, s_hi, s_sl = lo[rows, seg], hi[rows, seg], S[rows, seg]
            x = _seg_draw(s_lo, s_hi, s_sl, rng.random(todo.size))
            env = H[rows, seg] + s_sl * (x - X[rows, seg])
            v, _, _ = self._eval(x, xc[rows], base[rows], yx[rows], a[rows], b[rows], "v")
            with np.errstate(invalid="ignore"):
                ok = np.log(rng.random(todo.size)) <= -(v - vc[rows]) - env
            out[rows[ok]] = x[ok]
            self.rejections += int(np.sum(~ok))
            todo = rows[~ok]
        return out
