import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wafersmc.trajectory import (InfeasibleProfile, Phase, PulseSpec, PulseTrain, ScanProfileSpec,
                                 acceleration_pulse_profile, build_profile, constant_profile,
                                 cumtrapz, generate_scan)


def _check_consistent(prof):
    np.testing.assert_allclose(prof.r_dot, cumtrapz(prof.r_ddot, prof.h), atol=1e-12)
    np.testing.assert_allclose(prof.r, cumtrapz(prof.r_dot, prof.h, prof.r[0]), atol=1e-13)


def test_case2_kinematics():
    prof = generate_scan(ScanProfileSpec(scan_length=0.05, scan_velocity=0.1, max_accel=10.0))
    assert prof.info["accel_time"] == pytest.approx(0.01)
    assert prof.r[-1] - prof.r[0] == pytest.approx(0.05, abs=1e-9)
    sp = prof.phase_mask(Phase.SP)
    np.testing.assert_array_equal(prof.r_dot[sp], 0.1)
    assert sp.sum() * prof.h == pytest.approx(0.49, abs=2e-4)
    _check_consistent(prof)


def test_case1_accel_time():
    prof = generate_scan(ScanProfileSpec(scan_velocity=0.1, max_accel=1.5))
    assert prof.info["accel_time"] == pytest.approx(0.1 / 1.5, abs=1e-4)
    assert np.max(np.abs(prof.r_ddot)) <= 1.5 + 1e-9


def test_phase_order_of_a_scan():
    prof = generate_scan(ScanProfileSpec())
    changes = [Phase(int(p)).name for i, p in enumerate(prof.phase)
               if i == 0 or p != prof.phase[i - 1]]
    assert changes == ["IP", "AD", "SP", "AD", "IP"]


def test_return_scan_comes_back():
    prof = generate_scan(ScanProfileSpec(return_scan=True, start_position=0.2))
    assert prof.r[-1] == pytest.approx(0.2, abs=1e-9)
    assert prof.r.max() == pytest.approx(0.25, abs=1e-9)


def test_scurve_respects_peak():
    prof = generate_scan(ScanProfileSpec(shape="scurve", accel_time=0.02, max_accel=10.0))
    assert np.max(np.abs(prof.r_ddot)) <= 10.0 + 1e-9
    assert prof.r[-1] == pytest.approx(0.05, abs=1e-6)
    _check_consistent(prof)


def test_infeasible_rejected():
    with pytest.raises(InfeasibleProfile):
        generate_scan(ScanProfileSpec(scan_length=0.001, scan_velocity=0.1, max_accel=1.0))
    with pytest.raises(InfeasibleProfile):
        generate_scan(ScanProfileSpec(scan_velocity=0.1, accel_time=0.001, max_accel=10.0))


def test_zero_length_profile_is_idle():
    prof = generate_scan(ScanProfileSpec(scan_length=0.0, scan_velocity=0.0))
    assert np.all(prof.phase == Phase.IP) and np.all(prof.r == 0.0)


def test_pulse_profile():
    prof = acceleration_pulse_profile([PulseSpec(0.1, 0.1, 1.0)], 0.5)
    assert prof.r_dot[-1] == pytest.approx(0.1, rel=1e-3)
    assert prof.r[-1] == pytest.approx(0.005 + 0.1 * 0.3, rel=1e-3)
    assert set(np.unique(prof.phase)) == {Phase.IP, Phase.AD, Phase.SP}


def test_overlapping_pulses_rejected():
    with pytest.raises(ValueError):
        acceleration_pulse_profile([PulseSpec(0.1, 0.2, 1.0), PulseSpec(0.2, 0.1, 1.0)], 1.0)


def test_constant_profile():
    prof = constant_profile(0.1, position=0.3)
    assert len(prof) == 1001 and np.all(prof.r == 0.3)


def test_pulse_train_builds_same_profile():
    spec = PulseTrain(pulses=({"start": 0.1, "duration": 0.05, "amplitude": 2.0},), duration=0.3)
    a = build_profile(spec)
    b = acceleration_pulse_profile([PulseSpec(0.1, 0.05, 2.0)], 0.3)
    np.testing.assert_array_equal(a.r, b.r)


def test_csv_columns():
    text = constant_profile(0.0002).to_csv()
    assert text.splitlines()[0] == "t,r,r_dot,r_ddot,phase"
    assert text.splitlines()[1].endswith(",IP")


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.2), st.floats(1.0, 20.0), st.floats(0.02, 0.1))
def test_scan_hits_length(v, a, length):
    spec = ScanProfileSpec(scan_length=length, scan_velocity=v, max_accel=a, idle_time=0.01,
                           hold_time=0.01)
    try:
        prof = generate_scan(spec)
    except InfeasibleProfile:
        return
    assert np.max(np.abs(prof.r_ddot)) <= a * (1 + 1e-9)
    assert abs(prof.r[-1] - length) <= v * prof.h
    _check_consistent(prof)
