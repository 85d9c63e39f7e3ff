import math

import numpy as np
import pytest

from wafersmc.surfaces import (SampleOrderError, SlidingSurface, SurfaceFamily, SurfaceSpec,
                               nonlinear_feedback_rate, overshoot, settling_time,
                               surface_equilibrium, surface_response)


def test_lss_value():
    surf = SlidingSurface(SurfaceSpec("LSS", k1=0.0, k2=500.0), 1e-3)
    assert surf.step(0.01, 0.2, 0) == pytest.approx(0.2 + 5.0)


def test_pfss_fractional_term_of_constant_error():
    # sig(0.01)^0.5 = 0.1 held for 1 s: half-integral 0.1 / Gamma(1.5)
    spec = SurfaceSpec("PFSS", k1=8.0, k2=500.0, xi=0.5, a=0.5)
    surf = SlidingSurface(spec, 1e-3, window=2000)
    for k in range(1001):
        surf.advance(0.01, k)
    assert spec.k1 * surf.memory == pytest.approx(8.0 * 0.1 / math.gamma(1.5), rel=1e-2)
    assert surf.feedback(0.01) == pytest.approx(500.0 * 1e-4)


def test_fss_reduces_to_lss_without_memory():
    a = surface_response(SurfaceSpec("FSS", k1=0.0, k2=500.0, a=1.0), duration=0.05)
    b = surface_response(SurfaceSpec("LSS", k1=0.0, k2=500.0), duration=0.05)
    np.testing.assert_allclose(a.e, b.e, rtol=0, atol=1e-15)


def test_zero_forcing_stays_at_rest():
    for fam in SurfaceFamily:
        resp = surface_response(SurfaceSpec(fam, a=0.5 if fam == "PFSS" else 1.0), s_value=0.0,
                                duration=0.05)
        assert np.all(resp.e == 0.0)


def test_equilibria():
    assert surface_equilibrium(SurfaceSpec("LSS", k1=0.0, k2=500.0), 1.0) == pytest.approx(0.002)
    assert surface_equilibrium(SurfaceSpec("ISS"), 1.0) == 0.0
    assert surface_equilibrium(SurfaceSpec("PFSS"), 1.0) == 0.0


def test_lss_response_reaches_equilibrium():
    resp = surface_response(SurfaceSpec("LSS", k1=0.0, k2=500.0), duration=0.1)
    assert resp.e[-1] == pytest.approx(0.002, rel=1e-6)
    assert settling_time(resp) < 0.01
    assert overshoot(resp) == 0.0


def test_sample_order_enforced():
    surf = SlidingSurface(SurfaceSpec(), 1e-3)
    surf.step(0.0, 0.0, 3)
    with pytest.raises(SampleOrderError):
        surf.step(0.0, 0.0, 3)


def test_nonlinear_rate():
    assert nonlinear_feedback_rate(500.0, 0.5, 0.01, 2.0) == pytest.approx(1000.0 * 0.01 * 2.0)
    assert nonlinear_feedback_rate(500.0, 1.0, 0.01, 2.0) == 1000.0
    assert nonlinear_feedback_rate(500.0, 0.5, 0.0, 2.0) == 0.0


def test_memory_rate_is_fractional_derivative():
    h = 1e-3
    spec = SurfaceSpec("PFSS", k1=1.0, k2=1.0, xi=0.5, a=0.5)
    surf = SlidingSurface(spec, h, window=3000)
    for k in range(1001):
        surf.advance(1.0, k)
    # D^0.5 of a unit step at t = 1 is 1 / sqrt(pi)
    assert surf.memory_rate == pytest.approx(1 / math.sqrt(math.pi), rel=1e-2)


@pytest.mark.parametrize("kw", [{"family": "PFSS", "a": 1.0}, {"family": "FSS", "xi": 1.0},
                                {"k2": 0.0}, {"k1": -1.0}])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        SurfaceSpec(**kw)
