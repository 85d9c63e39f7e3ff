"""Acceptance criteria 1 to 10, one test each.

Each test records a single PASS/FAIL line (printed in the terminal summary)
with the measured quantities, so a failing criterion shows why it fails.
Tolerances and runtime limits are the pinned acceptance values.
"""

import math
import time

import mpmath
import numpy as np
from wafersmc import metrics, presets, studies
from wafersmc.controllers import (GainSchedule, PhiForm, check_p_constraints, compute_gains,
                                  error_bound_epsilon, phi1, phi2, theorem_gains)
from wafersmc.fraccalc import gl_apply
from wafersmc.plant import PlantParams
from wafersmc.simulator import run
from wafersmc.trajectory import Phase

RESULTS: dict[int, tuple[bool, str]] = {}


def _record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_01_fractional_operator():
    def body():
        y = gl_apply(-0.5, 1e-3, np.ones(1001))
        x = np.random.default_rng(0).standard_normal(1000)
        return y[-1], np.array_equal(gl_apply(0.0, 1e-3, x), x)
    (value, identity), dt = _timed(body)
    expected = float(1.0 / mpmath.gamma(1.5))
    rel = abs(value - expected) / expected
    _record(1, rel < 0.01 and identity and dt < 1.0,
            f"half-integral rel err {rel:.2e} (< 1e-2), order-0 identity {identity}, {dt:.3f} s (< 1 s)")


def test_criterion_02_phi_derivative_consistency():
    def body():
        worst = 0.0
        mags = np.geomspace(1e-3, 1e3, 61)
        for form, h3 in ((PhiForm.ALPHA, 0.0), (PhiForm.SQRT, 0.0), (PhiForm.SQRT_LINEAR, 43.0)):
            for mag in mags:
                for s in (mag, -mag):
                    with mpmath.workdps(30):
                        fd = float(mpmath.diff(lambda x: phi1(float(x), form, h3), s,
                                               h=mpmath.mpf(abs(s)) * mpmath.mpf("1e-6")))
                    ratio = phi2(s, form, h3) / phi1(s, form, h3)
                    worst = max(worst, abs(ratio - fd) / abs(fd))
        return worst
    worst, dt = _timed(body)
    _record(2, worst < 1e-6 and dt < 1.0,
            f"max rel diff {worst:.2e} (< 1e-6) over three forms, {dt:.3f} s (< 1 s)")


def test_criterion_03_theorem_gains():
    h = theorem_gains(2.0, -1.0, 1.0, 1.0, 1.0)
    rejected = 0
    for p in ((2.0, 1.0, 1.0), (2.0, 0.0, 1.0), (1.0, -1.0, 1.0), (0.5, -1.0, 1.0)):
        try:
            check_p_constraints(*p)
        except ValueError:
            rejected += 1
    try:
        GainSchedule.theorem(2.0, 0.5, 1.0, 0.1, 1.0, 0.1, 0.1, 1.0)
    except ValueError:
        rejected += 1
    _record(3, h == (6.0, 8.0) and rejected == 5,
            f"(h1, h2) = {h} (exact (6.0, 8.0)), {rejected}/5 constraint violations rejected")


def test_criterion_04_error_bound():
    eps = error_bound_epsilon(8.0, 500.0, 0.5, 1.0, 1.0)
    resid = abs(8.0 * eps ** 0.5 - 500.0 * eps ** 2 + 1.0)
    tol = 1e-9 * 500.0 * eps ** 2
    closed = error_bound_epsilon(0.0, 500.0, 0.5, 1.0, 1.0)
    closed_err = abs(closed - (1.0 / 500.0) ** 0.5) / (1.0 / 500.0) ** 0.5
    _record(4, resid < tol and 0.08 < eps < 0.085 and closed_err < 1e-10,
            f"eps = {eps:.10f} in (0.08, 0.085), |f| {resid:.1e} (< {tol:.1e}), "
            f"k1 = 0 closed form rel err {closed_err:.1e} (< 1e-10)")


def test_criterion_05_surface_ordering():
    res, dt = _timed(lambda: studies.surface_compare(k1=8.0, k2=500.0, xi=0.5, a=0.5))
    s = res.summary
    detail = (f"settling {_fmt(s['settling_time'])}; overshoot {_fmt(s['overshoot'])}; "
              f"distance at 1.45 s {_fmt(s['distance_at_probe'])}; {dt:.2f} s (< 10 s)")
    _record(5, res.passed and dt < 10.0, detail)


def test_criterion_06_acceleration_study():
    configs = presets.accel_study_configs()
    plant = next(iter(configs.values())).plant
    assert plant == PlantParams(K=3.9124, T_v=1.092, K_bar=4.0, T_v_bar=1.0)
    res, dt = _timed(lambda: studies.accel_study(configs))
    s = res.summary
    detail = (f"high-accel max {_fmt(s['high_accel_max'])}; zero-accel max {_fmt(s['zero_accel_max'])}; "
              f"overall max {_fmt(s['overall_max'])}; {dt:.2f} s (< 30 s)")
    _record(6, res.passed and not res.failures and dt < 30.0, detail)


def test_criterion_07_scan_study():
    res, dt = _timed(studies.scan_study)
    s = res.summary
    detail = (f"AD max {_fmt(s['ad_max'])}; post-disturbance max {_fmt(s['post_disturbance_max'])}; "
              f"decay {_fmt(s['decay_time'])}; {dt:.2f} s (< 60 s)")
    _record(7, res.passed and not res.failures and dt < 60.0, detail)


def test_criterion_08_theorem_containment():
    config = presets.theorem_config()
    assert config.plant.K == config.plant.K_bar and config.plant.T_v == config.plant.T_v_bar
    res = studies.theorem_study(config)
    c = res.summary["containment"]
    detail = (f"first entry k = {c['first_entry']}, max|s| after {c['max_after']:.3e} "
              f"vs gamma + slack {config.controller.gains.gamma + c['slack']:.3e}; "
              f"Lyapunov {res.summary['lyapunov']}")
    _record(8, res.passed and not res.failures, detail)


def test_criterion_09_metrics():
    st = metrics.phase_metrics(np.array([3.0, 4.0]), np.array([Phase.SP, Phase.SP]))["SP"]
    hand = round(st.rms, 4) == 3.5355 and st.max == 4.0
    rng = np.random.default_rng(1)
    e = rng.standard_normal(2000) * np.exp(-np.linspace(0, 4, 2000))
    ph = np.full(2000, Phase.SP)
    ratios = metrics.band_sweep(e, ph, metrics.default_band_grid(e, ph))
    monotone = bool(np.all(np.diff(ratios) >= 0))
    parts, ok = [f"hand {st.rms:.4f}/{st.max:g}", f"band sweep monotone {monotone}"], hand and monotone
    for case in (1, 2):
        res = studies.case_study(case)
        rms = res.summary["sp_rms"]
        ratio = res.summary["tp_over_ts"]["PFVSTA"]
        best = min((v, n) for n, v in rms.items() if v is not None)[1]
        ok = ok and best == "PFVSTA" and ratio is not None and ratio >= 0.97
        parts.append(f"case {case}: SP RMS {_fmt(rms)} (min {best}), PFVSTA tp/ts {ratio:.4f} (>= 0.97)")
    _record(9, ok, "; ".join(parts))


def test_criterion_10_determinism():
    differing = []
    for name in presets.PRESETS:
        for label, cfg in presets.preset_configs(name).items():
            if run(cfg).to_csv() != run(cfg).to_csv():
                differing.append(f"{name}/{label}")
    _record(10, not differing, "all preset runs byte-identical" if not differing
            else f"differing CSVs: {differing}")


def _fmt(d: dict) -> str:
    parts = []
    for k, v in d.items():
        parts.append(f"{k} {'-' if v is None else ('inf' if math.isinf(v) else f'{v:.3g}')}")
    return ", ".join(parts)
