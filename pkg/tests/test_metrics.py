import math

import numpy as np
import pytest

from wafersmc import metrics
from wafersmc.metrics import MetricsReport, PhaseStats
from wafersmc.trajectory import Phase

IP, AD, SP = Phase.IP, Phase.AD, Phase.SP


def test_hand_values():
    st = metrics.phase_metrics(np.array([3.0, -4.0]), np.array([SP, SP]))["SP"]
    assert st.rms == pytest.approx(math.sqrt(12.5), abs=1e-12)
    assert round(st.rms, 4) == 3.5355 and st.max == 4.0 and st.samples == 2


def test_absent_phase_is_none():
    out = metrics.phase_metrics(np.ones(3), np.array([IP, IP, SP]))
    assert out["AD"] is None and out["IP"].samples == 2


def test_length_mismatch():
    with pytest.raises(ValueError):
        metrics.phase_metrics(np.ones(3), np.array([IP, SP]))


def test_segments_half_open():
    ph = np.array([IP, SP, SP, AD, SP, SP, SP])
    assert metrics.phase_segments(ph) == [(1, 3), (4, 7)]
    assert metrics.phase_segments(np.array([SP, SP])) == [(0, 2)]
    assert metrics.phase_segments(np.array([IP])) == []


def test_held_fraction():
    e = np.array([5.0, 1.0, 0.5, 0.2])
    assert metrics.held_fraction(e, 2.0) == 0.75
    assert metrics.held_fraction(e, 10.0) == 1.0
    assert metrics.held_fraction(e, 0.1) == 0.0


def test_band_sweep_monotone():
    rng = np.random.default_rng(3)
    e = rng.normal(size=500) * np.exp(-np.linspace(0, 5, 500))
    ph = np.full(500, SP)
    ph[:50] = AD
    bands = metrics.default_band_grid(e, ph)
    ratios = metrics.band_sweep(e, ph, bands)
    assert np.all(np.diff(ratios) >= 0)
    assert ratios[-1] == 1.0


def test_valid_scan_decaying_trace():
    # |e| = 10, 9, ..., 1 over a 10-sample scan; band b is held for the last b samples
    e = np.arange(10, 0, -1, dtype=float)
    ph = np.full(10, SP)
    grid = np.arange(1, 11, dtype=float)
    assert metrics.valid_scan_metrics(e, ph, 0.95, band_grid=grid) == (10.0, 1.0)
    assert metrics.valid_scan_metrics(e, ph, 0.9, band_grid=grid) == (9.0, 0.9)
    e_s, ratio = metrics.valid_scan_metrics(e, ph, 0.5, band_grid=np.arange(1, 11, dtype=float))
    assert e_s == 5.0 and ratio == 0.5


def test_valid_scan_worst_segment():
    e = np.array([0.0, 1.0, 0.1, 0.1, 0.0, 0.1, 0.1, 0.1])
    ph = np.array([IP, SP, SP, SP, AD, SP, SP, SP])
    e_s, ratio = metrics.valid_scan_metrics(e, ph, 1.0, band_grid=[0.1, 1.0])
    assert e_s == 1.0
    e_s, ratio = metrics.valid_scan_metrics(e, ph, 0.6, band_grid=[0.1, 1.0])
    assert e_s == 0.1 and ratio == pytest.approx(2 / 3)


def test_valid_scan_without_scan_phase():
    assert metrics.valid_scan_metrics(np.ones(4), np.full(4, IP)) == (None, None)
    with pytest.raises(ValueError):
        metrics.valid_scan_metrics(np.ones(4), np.full(4, SP), ratio_target=0.0)


def test_table_gaps_and_order():
    full = MetricsReport("A", {"IP": PhaseStats(1.0, 2.0, 3), "AD": None,
                               "SP": PhaseStats(0.5, 0.75, 2)}, e_s=0.7, tp_over_ts=0.98)
    broken = MetricsReport("B", {}, aborted=True)
    csv_text, text = metrics.comparison_table([full, broken])
    lines = csv_text.splitlines()
    assert lines[0] == ",".join(metrics.TABLE_COLUMNS)
    assert lines[1] == "A,1.0000e+00,2.0000e+00,-,-,5.0000e-01,7.5000e-01,7.0000e-01,9.8000e-01,ok"
    assert lines[2] == "B,-,-,-,-,-,-,-,-,aborted"
    assert text.splitlines()[0].startswith("controller")


def test_format_value():
    assert metrics.format_value(None) == "-"
    assert metrics.format_value(float("nan")) == "-"
    assert metrics.format_value(1.5) == "1.5000e+00"


def test_acceleration_windows():
    a = np.array([0.0, 1.0, 10.0, -6.0, 0.0])
    hi, zero = metrics.acceleration_windows(a)
    assert hi.tolist() == [False, False, True, True, False]
    assert zero.tolist() == [True, False, False, False, True]
    hi, zero = metrics.acceleration_windows(np.zeros(3))
    assert not hi.any() and zero.all()


def test_decay_time_synthetic():
    t = np.arange(0, 1, 1e-3)
    e = np.where(t < 0.1, t * 10, np.exp(-(t - 0.1) / 0.05))
    # peak 1 at t = 0.1, falls to 0.1 after 0.05 ln 10
    assert metrics.decay_time(t, e, 0, t.size) == pytest.approx(0.1 + 0.05 * math.log(10), abs=2e-3)
    assert metrics.decay_time(t, np.ones_like(t), 0, t.size) == math.inf
    assert math.isnan(metrics.decay_time(t, e, 5, 5))


def test_envelope_correlation():
    x = np.zeros(1000)
    x[400:600] = 1.0
    assert metrics.envelope_correlation(x * 1e-6, x) == pytest.approx(1.0)
    assert metrics.envelope_correlation(np.ones(1000), x) == 0.0
