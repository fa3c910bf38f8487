import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glmcmc.families import GlmFamily, family_eval

finite = st.floats(-50.0, 50.0, allow_nan=False)


def test_logistic_at_zero():
    a, da, d2a = family_eval(GlmFamily.logistic(), 0.0)
    assert a == pytest.approx(math.log(2.0), abs=1e-15)
    assert da == pytest.approx(0.5, abs=1e-15)
    assert d2a == pytest.approx(0.25, abs=1e-15)


def test_linear_at_three():
    assert tuple(map(float, family_eval(GlmFamily.linear(), 3.0))) == (4.5, 3.0, 1.0)


def test_clipped_poisson_at_radius():
    e2 = math.exp(2.0)
    vals = family_eval(GlmFamily.poisson(2.0), 2.0)
    np.testing.assert_allclose(vals, (e2, e2, e2), rtol=1e-15)


def test_clipped_poisson_beyond_radius():
    e2 = math.exp(2.0)
    vals = family_eval(GlmFamily.poisson(2.0), 3.0)
    np.testing.assert_allclose(vals, (2.5 * e2, 2.0 * e2, e2), rtol=1e-15)


def test_unclipped_poisson():
    np.testing.assert_allclose(family_eval(GlmFamily.poisson(), 1.0), (math.e,) * 3, rtol=1e-15)


def test_logistic_no_overflow():
    a, da, d2a = GlmFamily.logistic().evaluate(np.array([-800.0, 800.0]))
    assert np.all(np.isfinite(a)) and a[1] == 800.0 and a[0] == 0.0
    np.testing.assert_allclose(da, [0.0, 1.0])
    assert np.all(d2a >= 0.0)


@pytest.mark.parametrize("r", [1.0, 2.0, 5.0])
def test_clip_continuity(r):
    fam = GlmFamily.poisson(r)
    z = np.array([np.nextafter(r, -np.inf), np.nextafter(r, np.inf)])
    for v in fam.evaluate(z):
        assert abs(v[1] - v[0]) < 1e-10 * max(1.0, abs(v[0]))


@pytest.mark.parametrize("fam", [GlmFamily.linear(2.0), GlmFamily.logistic(), GlmFamily.poisson(),
                                 GlmFamily.poisson(1.0)])
def test_derivatives_by_finite_differences(fam):
    z = np.linspace(-4.0, 4.0, 41) + 0.013
    h = 1e-6
    a, da, d2a = fam.evaluate(z)
    ap, dap, _ = fam.evaluate(z + h)
    am, dam, _ = fam.evaluate(z - h)
    np.testing.assert_allclose((ap - am) / (2 * h), da, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose((dap - dam) / (2 * h), d2a, rtol=1e-6, atol=1e-8)


@given(finite)
def test_logistic_curvature_range(z):
    _, s, v = GlmFamily.logistic().evaluate(np.array([z]))
    assert 0.0 <= v[0] <= 0.25
    assert 0.0 <= s[0] <= 1.0


@given(finite, st.sampled_from(["linear", "logistic", "poisson", "clipped"]))
def test_convexity(z, kind):
    fam = {"linear": GlmFamily.linear(), "logistic": GlmFamily.logistic(),
           "poisson": GlmFamily.poisson(), "clipped": GlmFamily.poisson(2.0)}[kind]
    assert fam.variance_fn(np.array([z]))[0] >= 0.0


@given(finite)
def test_fast_paths_agree(z):
    for fam in (GlmFamily.logistic(), GlmFamily.poisson(), GlmFamily.poisson(1.0)):
        arr = np.array([z])
        np.testing.assert_allclose(fam.log_partition(arr), fam.evaluate(arr)[0], rtol=1e-14)
        d1, d2 = fam.derivatives(arr)
        _, e1, e2 = fam.evaluate(arr)
        np.testing.assert_allclose(d1, e1, rtol=1e-12, atol=1e-300)
        np.testing.assert_allclose(d2, e2, rtol=1e-12, atol=1e-300)


def test_curvature_bounds():
    assert GlmFamily.logistic().curvature_bound() == 0.25
    assert GlmFamily.linear(2.0).curvature_bound() == 0.25
    assert GlmFamily.poisson(2.0).curvature_bound() == pytest.approx(math.exp(2.0))
    assert GlmFamily.poisson().curvature_bound() == math.inf


def test_invalid_construction():
    with pytest.raises(ValueError):
        GlmFamily("probit")
    with pytest.raises(ValueError):
        GlmFamily("logistic", clip_radius=1.0)
    with pytest.raises(ValueError):
        GlmFamily.poisson(-1.0)


def test_dict_round_trip():
    fam = GlmFamily.poisson(3.0)
    assert GlmFamily.from_dict(fam.to_dict()) == fam
