"""Exact draws from one-dimensional densities proportional to exp(-U).

Three routes, chosen from the slice structure:

* quadratic slices are sampled as Gaussians directly;
* log-concave slices use derivative-based adaptive rejection sampling;
* anything else uses inverse-CDF on a truncated interval, with the CDF built
  by adaptive Simpson quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import ConditionalSamplerFailure

MAX_REJECTIONS = 10_000
MAX_EXPANSIONS = 200
CDF_RTOL = 1e-10
TAIL_RTOL = 1e-12


@dataclass(frozen=True)
class CurvatureHint:
    m_loc: float | None = None
    L_loc: float | None = None
    center: float | None = None


def sample_conditional_1d(slc, hint: CurvatureHint | None = None, rng=None) -> float:
    """One exact draw from the density proportional to ``exp(-slc(t))``.

    ``slc`` must provide ``derivatives(t) -> (U, U', U'')``; the optional
    attributes ``is_gaussian``/``gaussian_params`` and ``log_concave`` select
    faster or more general routes.
    """
    rng = np.random.default_rng() if rng is None else rng
    if getattr(slc, "is_gaussian", False):
        mean, prec = slc.gaussian_params()
        return float(mean + rng.standard_normal() / math.sqrt(prec))
    center, scale = _center_scale(slc, hint)
    if getattr(slc, "log_concave", False):
        return ars_sample(slc.derivatives, center, scale, rng)
    return inverse_cdf_sample(slc, center, scale, rng)


def _center_scale(slc, hint):
    center = None if hint is None else hint.center
    if center is None:
        center = float(getattr(slc, "center", 0.0))
    L = None if hint is None else hint.L_loc
    if L is None or not L > 0:
        L = slc.derivatives(center)[2]
    scale = 1.0 / math.sqrt(L) if L > 0 and math.isfinite(L) else 1.0
    return center, scale


# adaptive rejection sampling ------------------------------------------
def _log_seg_mass(ua, ub, slope, a, b):
    """log of the integral of exp(tangent) over [a, b]; ua/ub are tangent values at a/b."""
    if math.isinf(a):
        return ub - math.log(slope)
    if math.isinf(b):
        return ua - math.log(-slope)
    w = b - a
    sw = slope * w
    if abs(sw) < 1e-12:
        return ua + math.log(w)
    if slope > 0:
        return ub + math.log(-math.expm1(-sw)) - math.log(slope)
    return ua + math.log(-math.expm1(sw)) - math.log(-slope)


def _seg_draw(a, b, slope, u):
    if math.isinf(a):
        return b + math.log(u) / slope
    if math.isinf(b):
        return a + math.log1p(-u) / slope
    w = b - a
    sw = slope * w
    if abs(sw) < 1e-12:
        return a + u * w
    if slope > 0:
        return b + math.log(math.exp(-sw) + u * (-math.expm1(-sw))) / slope
    return a + math.log1p(u * math.expm1(sw)) / slope


def ars_sample(derivs, center: float, scale: float, rng, max_rejections: int = MAX_REJECTIONS) -> float:
    """Adaptive rejection sampling (tangent envelope) for a log-concave density.

    ``derivs(t)`` returns ``(U, U', U'')`` of the potential ``U = -log f``.
    Initial abscissae are ``center +- scale``, pushed outward until they
    straddle the mode.
    """
    pts = {}

    def add(t):
        v, d1, _ = derivs(t)
        if not (math.isfinite(v) and math.isfinite(d1)):
            raise ConditionalSamplerFailure(f"non-finite slice at t={t!r}")
        pts[t] = (-v, -d1)
        return -d1

    left, right, step = center - scale, center + scale, scale
    add(center)
    k = 0
    while add(left) <= 0:
        step *= 2.0
        left = center - step
        k += 1
        if k > MAX_EXPANSIONS:
            raise ConditionalSamplerFailure("could not bracket the mode on the left")
    step, k = scale, 0
    while add(right) >= 0:
        step *= 2.0
        right = center + step
        k += 1
        if k > MAX_EXPANSIONS:
            raise ConditionalSamplerFailure("could not bracket the mode on the right")

    rejections = 0
    while True:
        xs = sorted(pts)
        hs = [pts[x][0] for x in xs]
        ds = [pts[x][1] for x in xs]
        hmax = max(hs)
        zs = [-math.inf]
        for j in range(len(xs) - 1):
            x0, x1, h0, h1, d0, d1 = xs[j], xs[j + 1], hs[j], hs[j + 1], ds[j], ds[j + 1]
            if d0 - d1 > 1e-14 * max(abs(d0), abs(d1), 1.0):
                z = (h1 - h0 - x1 * d1 + x0 * d0) / (d0 - d1)
                z = min(max(z, x0), x1)
            else:
                z = 0.5 * (x0 + x1)
            zs.append(z)
        zs.append(math.inf)
        logm = []
        for j, x in enumerate(xs):
            a, b = zs[j], zs[j + 1]
            ua = hs[j] - hmax + ds[j] * (a - x) if math.isfinite(a) else -math.inf
            ub = hs[j] - hmax + ds[j] * (b - x) if math.isfinite(b) else -math.inf
            if b <= a:
                logm.append(-math.inf)
            else:
                logm.append(_log_seg_mass(ua, ub, ds[j], a, b))
        logm = np.array(logm)
        w = np.exp(logm - logm.max())
        j = int(rng.choice(len(xs), p=w / w.sum()))
        x = _seg_draw(zs[j], zs[j + 1], ds[j], float(rng.random()))
        upper = hs[j] + ds[j] * (x - xs[j])
        v = derivs(x)[0]
        if math.isfinite(v) and math.log(rng.random()) <= -v - upper:
            return float(x)
        rejections += 1
        if rejections > max_rejections:
            raise ConditionalSamplerFailure(f"more than {max_rejections} rejections")
        if math.isfinite(v) and x not in pts:
            add(x)


# inverse CDF on a truncated interval ----------------------------------
def _simpson(fa, fm, fb, w):
    return w * (fa + 4.0 * fm + fb) / 6.0


def _truncation(values, center, scale):
    """Interval outside which the relative mass is below ``TAIL_RTOL``."""
    grid = center + scale * np.linspace(-8.0, 8.0, 161)
    u = values(grid)
    if not np.all(np.isfinite(u)):
        raise ConditionalSamplerFailure("non-finite slice near the center")
    mode = float(grid[int(np.argmin(u))])
    umin = float(u.min())
    mass_est = max(float(np.sum(np.exp(-(u - umin)))) * (grid[1] - grid[0]), 1e-300)
    ends = []
    for sign in (-1.0, 1.0):
        step = 8.0 * scale
        for _ in range(MAX_EXPANSIONS):
            t = mode + sign * step
            ut, ut2 = values(np.array([t, t + sign * 1e-3 * scale]))
            slope = (ut2 - ut) / (1e-3 * scale)
            if math.isfinite(ut) and slope > 0:
                # for a tail that keeps growing at least at this slope
                tail = math.exp(-(ut - umin)) / slope
                if tail < TAIL_RTOL * mass_est and ut - umin > 30.0:
                    ends.append(t)
                    break
            step *= 1.5
        else:
            raise ConditionalSamplerFailure("could not truncate the slice tails")
    return ends[0], ends[1], umin


def inverse_cdf_sample(slc, center: float, scale: float, rng) -> float:
    """Draw by inverting a quadrature CDF on the truncated support."""
    values = slc.values
    lo, hi, umin = _truncation(values, center, scale)

    def dens(t):
        return np.exp(-(values(np.asarray(t, dtype=float)) - umin))

    # breadth-first adaptive Simpson
    edges = np.linspace(lo, hi, 65)
    mids = 0.5 * (edges[:-1] + edges[1:])
    fe = dens(edges)
    fm = dens(mids)
    panels = [(edges[k], edges[k + 1], fe[k], fm[k], fe[k + 1]) for k in range(64)]
    total = sum(_simpson(p[2], p[3], p[4], p[1] - p[0]) for p in panels)
    width = hi - lo
    leaves = []
    for _ in range(60):
        if not panels:
            break
        lq = np.array([0.5 * (p[0] + p[1]) - 0.25 * (p[1] - p[0]) for p in panels])
        rq = np.array([0.5 * (p[0] + p[1]) + 0.25 * (p[1] - p[0]) for p in panels])
        fl = dens(lq)
        fr = dens(rq)
        nxt = []
        for p, f1, f3 in zip(panels, fl, fr):
            a, b, fa, fmid, fb = p
            m = 0.5 * (a + b)
            whole = _simpson(fa, fmid, fb, b - a)
            left = _simpson(fa, f1, fmid, m - a)
            right = _simpson(fmid, f3, fb, b - m)
            if abs(left + right - whole) <= 15.0 * CDF_RTOL * total * (b - a) / width:
                leaves.append((a, m, fa, f1, fmid, left + (left + right - whole) / 30.0))
                leaves.append((m, b, fmid, f3, fb, right + (left + right - whole) / 30.0))
            else:
                nxt.append((a, m, fa, f1, fmid))
                nxt.append((m, b, fmid, f3, fb))
        panels = nxt
    else:
        if panels:
            raise ConditionalSamplerFailure("adaptive quadrature did not converge")
    leaves.sort(key=lambda r: r[0])
    masses = np.array([r[5] for r in leaves])
    if not np.all(np.isfinite(masses)) or masses.sum() <= 0:
        raise ConditionalSamplerFailure("quadrature produced an invalid CDF")
    cum = np.cumsum(masses)
    target = float(rng.random()) * cum[-1]
    k = int(np.searchsorted(cum, target))
    k = min(k, len(leaves) - 1)
    a, b, fa, fm, fb, mass = leaves[k]
    rem = target - (cum[k] - mass)

    def partial(x):
        xm = 0.5 * (a + x)
        fx = float(dens(np.array([x, xm, 0.5 * (a + xm), 0.5 * (xm + x)]))[0])
        f = dens(np.array([xm, 0.5 * (a + xm), 0.5 * (xm + x)]))
        return _simpson(fa, f[1], f[0], xm - a) + _simpson(f[0], f[2], fx, x - xm) - rem

    if partial(b) <= 0:
        return float(b)
    return float(brentq(partial, a, b, xtol=1e-14 * max(1.0, abs(b)), rtol=1e-14))
