import math

import numpy as np
import pytest

from wafersmc.plant import (DisturbanceSpec, DivergenceError, Measurement, NoiseSpec, PlantParams,
                            initial_state, measure, plant_step)


def test_defaults_and_deltas():
    p = PlantParams()
    assert p.delta_K == pytest.approx(3.9124 - 4.0)
    assert p.delta_T_v == pytest.approx(0.092)


def test_from_physical_consistency():
    p = PlantParams.from_physical(m=2.0, K_v=2.0, Q=8.0, K_bar=4.0, T_v_bar=1.0)
    assert (p.K, p.T_v) == (4.0, 1.0)
    with pytest.raises(ValueError):
        PlantParams(K=3.0, T_v=1.0, m=2.0, K_v=2.0, Q=8.0)


@pytest.mark.parametrize("kw", [{"K": 0.0}, {"K_bar": -1.0}, {"T_v": -0.1}])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PlantParams(**kw)


def test_disturbance_channels():
    d = DisturbanceSpec(constant=0.1, ripple_amplitude=0.2, ripple_spatial_period=0.04,
                        friction_residual=0.05, step_amplitude=1.0, step_trigger_position=0.0)
    assert d.value(0.01, 1.0, False) == pytest.approx(0.1 + 0.2 - 0.05)
    assert d.value(0.0, -1.0, True) == pytest.approx(0.1 + 0.05 + 1.0)
    assert d.value(0.0, 0.0, False) == pytest.approx(0.1)


def test_ripple_needs_period():
    with pytest.raises(ValueError):
        DisturbanceSpec(ripple_amplitude=0.1)


def test_analytic_velocity():
    params = PlantParams(K=3.9124, T_v=1.092)
    state = initial_state(0.0, 0.2, DisturbanceSpec())
    u, h = 0.5, 1e-4
    for _ in range(2000):
        state = plant_step(state, params, DisturbanceSpec(), u, h)
    t = state.t
    v = math.exp(-params.T_v * t) * 0.2 + params.K * u / params.T_v * (1 - math.exp(-params.T_v * t))
    assert state.v == pytest.approx(v, rel=1e-6)


def test_divergence_detected():
    state = initial_state(0.0, 0.0, DisturbanceSpec())
    with pytest.raises(DivergenceError):
        plant_step(state, PlantParams(), DisturbanceSpec(), 1e9, 1e-3, v_limit=10.0)


def test_step_disturbance_latches():
    dist = DisturbanceSpec(step_amplitude=0.1, step_trigger_position=0.001)
    state = initial_state(0.0, 0.1, dist)
    assert not state.step_active
    for _ in range(200):
        state = plant_step(state, PlantParams(), dist, 0.0, 1e-4)
    assert state.p > 0.001 and state.step_active


def test_noiseless_measurement_is_exact():
    state = initial_state(0.123, 0.0, DisturbanceSpec())
    assert measure(state, Measurement(NoiseSpec(), 1e-4)) == 0.123


def test_noise_is_seeded():
    a = Measurement(NoiseSpec(power=1e-18, cutoff=1000.0, seed=5), 1e-4)
    b = Measurement(NoiseSpec(power=1e-18, cutoff=1000.0, seed=5), 1e-4)
    c = Measurement(NoiseSpec(power=1e-18, cutoff=1000.0, seed=6), 1e-4)
    xa = [a.noise_sample() for _ in range(5000)]
    assert xa == [b.noise_sample() for _ in range(5000)]
    assert xa != [c.noise_sample() for _ in range(5000)]


def test_noise_lowpass_reduces_variance():
    white = Measurement(NoiseSpec(power=1.0, seed=1), 1e-4)
    low = Measurement(NoiseSpec(power=1.0, cutoff=500.0, seed=1), 1e-4)
    xw = np.array([white.noise_sample() for _ in range(20000)])
    xl = np.array([low.noise_sample() for _ in range(20000)])
    assert xw.var() == pytest.approx(1.0, rel=0.05)
    beta = 1 - math.exp(-2 * math.pi * 500.0 * 1e-4)
    assert xl.var() == pytest.approx(beta / (2 - beta), rel=0.1)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(power=-1.0)
    with pytest.raises(ValueError):
        NoiseSpec(cutoff=0.0)
