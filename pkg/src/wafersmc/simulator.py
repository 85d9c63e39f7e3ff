"""Fixed-step closed-loop engine.

Each control tick samples the (noisy) position, forms the error and its
backward difference, evaluates the controller and holds its output while the
plant integrates over the tick. Runs are deterministic given the config.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__, kernels
from .controllers import (Controller, ControllerError, ControllerFamily, ControllerSpec,
                          lyapunov_value, phi1)
from .plant import (DisturbanceSpec, DivergenceError, Measurement, NoiseSpec, PlantParams,
                    initial_state, plant_step)
from .trajectory import Phase, PulseTrain, ScanProfileSpec, TrajectoryProfile, build_profile

CHANNELS = ("t", "r", "p", "e", "v", "u", "s", "h1", "h2", "V", "phase")


@dataclass(frozen=True)
class SimConfig:
    controller: ControllerSpec
    trajectory: Any  # TrajectoryProfile, ScanProfileSpec or PulseTrain
    plant: PlantParams = field(default_factory=PlantParams)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    control_rate: float = 10_000.0
    plant_substeps: int = 10
    duration: float | None = None
    accel_source: str = "reference"
    accel_filter_hz: float = 200.0
    e_dot_filter_hz: float | None = None
    memory_window: int | None = None
    lyapunov_P: tuple[float, float, float] | None = None
    v_limit: float = 100.0
    initial_position_offset: float = 0.0
    initial_velocity_offset: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not self.control_rate > 0:
            raise ValueError("control_rate must be positive")
        if self.plant_substeps < 1:
            raise ValueError("plant_substeps must be >= 1")
        if self.accel_source not in ("reference", "measured"):
            raise ValueError("accel_source must be 'reference' or 'measured'")

    @property
    def h(self) -> float:
        return 1.0 / self.control_rate

    def build_trajectory(self) -> TrajectoryProfile:
        spec = self.trajectory
        if isinstance(spec, (ScanProfileSpec, PulseTrain)) and spec.sample_rate != self.control_rate:
            spec = dataclasses.replace(spec, sample_rate=self.control_rate)
        prof = build_profile(spec)
        if not math.isclose(prof.h, self.h, rel_tol=1e-12):
            raise ValueError(f"trajectory step {prof.h} does not match control period {self.h}")
        if self.duration is not None:
            n = int(round(self.duration / self.h)) + 1
            if n > len(prof):
                raise ValueError("duration exceeds the trajectory")
            prof = TrajectoryProfile(prof.t[:n], prof.r[:n], prof.r_dot[:n], prof.r_ddot[:n],
                                     prof.phase[:n], prof.h, prof.info)
        return prof

    def with_value(self, path: str, value) -> "SimConfig":
        return _replace_path(self, path.split("."), value)


def _replace_path(obj, parts, value):
    if not parts:
        return value
    head, rest = parts[0], parts[1:]
    return dataclasses.replace(obj, **{head: _replace_path(getattr(obj, head), rest, value)})


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if isinstance(obj, TrajectoryProfile):
            digest = hashlib.sha256()
            for arr in (obj.t, obj.r, obj.r_dot, obj.r_ddot, obj.phase):
                digest.update(np.ascontiguousarray(arr).tobytes())
            return {"profile_sha256": digest.hexdigest()}
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), (str, int)):
        return obj.value
    return obj


def config_fingerprint(config: SimConfig) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    t: np.ndarray
    r: np.ndarray
    p: np.ndarray
    e: np.ndarray
    v: np.ndarray
    u: np.ndarray
    s: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    V: np.ndarray
    phase: np.ndarray
    z: np.ndarray
    r_ddot: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def label(self) -> str:
        return self.meta.get("label", "")

    @property
    def aborted(self) -> bool:
        return self.meta.get("abort_index") is not None

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CHANNELS)
        cols = [getattr(self, c) for c in CHANNELS[:-1]]
        for i in range(len(self)):
            row = [repr(float(c[i])) for c in cols]
            row.append(Phase(int(self.phase[i])).name)
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            atomic_write(path, text)
        return text

    def save_npz(self, path) -> None:
        arrays = {name: getattr(self, name) for name in CHANNELS + ("z", "r_ddot")}
        arrays["meta"] = np.array(json.dumps(self.meta, sort_keys=True))
        np.savez_compressed(path, **arrays)

    @classmethod
    def load_npz(cls, path) -> "RunRecord":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            return cls(**{n: data[n] for n in CHANNELS + ("z", "r_ddot")}, meta=meta)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _lowpass_beta(cutoff: float | None, h: float) -> float:
    if cutoff is None or cutoff >= 0.5 / h:
        return 1.0
    return 1.0 - math.exp(-2.0 * math.pi * cutoff * h)


def run(config: SimConfig) -> RunRecord:
    """Simulate one closed-loop run.

    Plant divergence or a non-finite control value ends the run early; the
    record is then truncated and ``meta['abort_index']`` is set.
    """
    wall0 = time.perf_counter()
    prof = config.build_trajectory()
    h = config.h
    n = len(prof)
    spec = config.controller
    ctrl = Controller(spec, h, config.memory_window)
    sensor = Measurement(config.noise, h)
    state = initial_state(float(prof.r[0]) + config.initial_position_offset,
                          float(prof.r_dot[0]) + config.initial_velocity_offset,
                          config.disturbance)

    out = {name: np.zeros(n) for name in ("p", "e", "v", "u", "s", "h1", "h2", "z")}
    P = config.lyapunov_P
    if P is None and spec.gains is not None and spec.gains.mode.value == "theorem":
        P = (spec.gains.p1, spec.gains.p2, spec.gains.p4)
    V = np.zeros(n)

    beta_ed = _lowpass_beta(config.e_dot_filter_hz, h)
    beta_acc = _lowpass_beta(config.accel_filter_hz, h)
    measured_acc = config.accel_source == "measured"
    form = spec.form if spec.family is not ControllerFamily.VGPID else None
    h3 = spec.gains.h3 if spec.gains is not None else 0.0

    r, r_dot, r_ddot, phase = prof.r, prof.r_dot, prof.r_ddot, prof.phase
    e_prev = None
    e_dot = 0.0
    v_prev = None
    acc_est = 0.0
    abort_index = None
    abort_reason = None
    for k in range(n):
        y = sensor.measure(state)
        e_meas = y - r[k]
        if e_prev is not None:
            e_dot += beta_ed * ((e_meas - e_prev) / h - e_dot)
        e_prev = e_meas
        v_est = e_dot + r_dot[k]
        if measured_acc:
            if v_prev is not None:
                acc_est += beta_acc * ((v_est - v_prev) / h - acc_est)
            v_prev = v_est
            v_dot = acc_est
        else:
            v_dot = r_ddot[k]
        z_before = ctrl.z
        try:
            u = ctrl.step(e_meas, e_dot, v_est, v_dot, r_ddot[k], phase[k], k)
        except ControllerError as exc:
            abort_index, abort_reason = k, str(exc)
            break
        out["p"][k] = state.p
        out["e"][k] = state.p - r[k]
        out["v"][k] = state.v
        out["u"][k] = u
        out["s"][k] = ctrl.s
        out["h1"][k] = ctrl.h1
        out["h2"][k] = ctrl.h2
        out["z"][k] = -spec.K_bar * z_before
        if P is not None and form is not None:
            V[k] = lyapunov_value(phi1(ctrl.s, form, h3), out["z"][k], *P)
        if k == n - 1:
            break
        try:
            state = plant_step(state, config.plant, config.disturbance, u, h,
                               config.plant_substeps, config.v_limit)
        except DivergenceError as exc:
            abort_index, abort_reason = k + 1, str(exc)
            break

    m = n if abort_index is None else abort_index
    meta = {
        "label": config.label or spec.family.value,
        "family": spec.family.value,
        "config_hash": config_fingerprint(config),
        "version": __version__,
        "backend": kernels.BACKEND,
        "control_rate": config.control_rate,
        "plant_substeps": config.plant_substeps,
        "accel_source": config.accel_source,
        "noise_power": config.noise.power,
        "noise_cutoff": config.noise.cutoff if math.isfinite(config.noise.cutoff) else "inf",
        "profile": {k: v for k, v in prof.info.items() if k != "pulses"},
        "form": form.value if form is not None else None,
        "h3": h3,
        "lyapunov_P": list(P) if P is not None else None,
        "abort_index": abort_index,
        "abort_reason": abort_reason,
        "wall_time": time.perf_counter() - wall0,
    }
    return RunRecord(t=prof.t[:m].copy(), r=r[:m].copy(), p=out["p"][:m], e=out["e"][:m],
                     v=out["v"][:m], u=out["u"][:m], s=out["s"][:m], h1=out["h1"][:m],
                     h2=out["h2"][:m], V=V[:m], phase=phase[:m].astype(np.int8), z=out["z"][:m],
                     r_ddot=r_ddot[:m].copy(), meta=meta)


@dataclass
class LyapunovStats:
    qualifying: int
    decreasing: int
    V_min: float
    V_max: float

    @property
    def fraction(self) -> float | None:
        """Share of qualifying samples with ``V`` decreasing, or ``None``."""
        return self.decreasing / self.qualifying if self.qualifying else None

    def __str__(self) -> str:
        if not self.qualifying:
            return "no qualifying samples"
        return (f"{self.decreasing}/{self.qualifying} samples with |s| > gamma have dV < 0 "
                f"({100 * self.fraction:.2f}%); V in [{self.V_min:.3g}, {self.V_max:.3g}]")


def lyapunov_probe(record: RunRecord, p1: float, p2: float, p4: float, gamma: float,
                   start: int = 0, stop: int | None = None, form=None, h3: float | None = None
                   ) -> LyapunovStats:
    """Evaluate ``V = Theta' P Theta`` with ``Theta = [Phi1(s), z]`` per sample.

    Counts samples in ``[start, stop)`` with ``|s| > gamma`` and reports how
    many of them are followed by a decrease of ``V``.
    """
    form = form or record.meta.get("form")
    if form is None:
        raise ValueError("record has no super-twisting state")
    h3 = record.meta.get("h3", 0.0) if h3 is None else h3
    s = record.s[start:stop]
    z = record.z[start:stop]
    V = np.array([lyapunov_value(phi1(si, form, h3), zi, p1, p2, p4) for si, zi in zip(s, z)])
    if V.size == 0:
        return LyapunovStats(0, 0, math.nan, math.nan)
    q = np.abs(s[:-1]) > gamma
    dV = np.diff(V)
    return LyapunovStats(int(q.sum()), int((dV[q] < 0).sum()), float(V.min()), float(V.max()))


@dataclass
class SweepFailure:
    params: dict
    error: str


def _run_variant(args):
    config, params = args
    try:
        return run(config)
    except Exception as exc:  # noqa: BLE001 - failures are reported, not fatal
        return SweepFailure(params, f"{type(exc).__name__}: {exc}")


def sweep(base: SimConfig, axis: Mapping[str, Sequence] | None = None,
          workers: int = 1) -> list:
    """Run the cartesian product of ``axis`` values over ``base``.

    Keys are dotted attribute paths into :class:`SimConfig` (for example
    ``"controller"`` or ``"trajectory.max_accel"``). Results come back in
    parameter order; a variant that fails yields a :class:`SweepFailure`.
    """
    axis = dict(axis or {})
    names = list(axis)
    jobs = []
    for combo in itertools.product(*(axis[k] for k in names)):
        params = dict(zip(names, combo))
        try:
            cfg = base
            for key, value in params.items():
                cfg = cfg.with_value(key, value)
            jobs.append((cfg, params))
        except Exception as exc:  # noqa: BLE001
            jobs.append((None, {**params, "_error": f"{type(exc).__name__}: {exc}"}))
    results: list = [None] * len(jobs)
    todo = [(i, job) for i, job in enumerate(jobs) if job[0] is not None]
    for i, (cfg, params) in enumerate(jobs):
        if cfg is None:
            results[i] = SweepFailure({k: v for k, v in params.items() if k != "_error"}, params["_error"])
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (i, _), res in zip(todo, pool.map(_run_variant, [job for _, job in todo])):
                results[i] = res
    else:
        for i, job in todo:
            results[i] = _run_variant(job)
    return results


def records_only(results: Iterable) -> list[RunRecord]:
    return [r for r in results if isinstance(r, RunRecord)]
