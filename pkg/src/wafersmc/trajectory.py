"""Phase-labelled scanning references.

Profiles are assembled from segments whose boundaries sit on the sample
grid. Acceleration is linear inside each segment; where it jumps, the
boundary sample carries the mean of the two one-sided values. Velocity and
position are then the cumulative trapezoid integrals of the samples, so the
three arrays are discretely consistent by construction.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class Phase(enum.IntEnum):
    IP = 0  # idle / hold
    AD = 1  # acceleration or deceleration
    SP = 2  # constant-velocity scan


class InfeasibleProfile(ValueError):
    pass


@dataclass(frozen=True)
class ScanProfileSpec:
    """One scan move: idle, accelerate, scan, decelerate, hold.

    ``scan_length`` is the total displacement of the move including the
    acceleration and deceleration distance. With ``accel_time=None`` the
    ramp time is ``scan_velocity / max_accel``. ``shape='scurve'`` uses a
    jerk-limited (trapezoidal acceleration) ramp that fits ``accel_time``
    while peaking at ``max_accel``. ``return_scan`` appends the mirror move
    back to the start followed by another hold.
    """

    scan_length: float = 0.05
    scan_velocity: float = 0.1
    idle_time: float = 0.2
    accel_time: float | None = None
    max_accel: float = 10.0
    hold_time: float = 0.1
    sample_rate: float = 10_000.0
    start_position: float = 0.0
    shape: str = "trapezoidal"
    return_scan: bool = False

    def __post_init__(self):
        for name in ("scan_length", "scan_velocity", "idle_time", "max_accel", "hold_time"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative")
        if self.accel_time is not None and (not math.isfinite(self.accel_time) or self.accel_time < 0):
            raise ValueError("accel_time must be finite and non-negative")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.shape not in ("trapezoidal", "scurve"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")


@dataclass(frozen=True)
class PulseSpec:
    """Acceleration pulse; ``ramp > 0`` gives a trapezoidal pulse."""

    start: float
    duration: float
    amplitude: float
    ramp: float = 0.0


@dataclass
class TrajectoryProfile:
    t: np.ndarray
    r: np.ndarray
    r_dot: np.ndarray
    r_ddot: np.ndarray
    phase: np.ndarray
    h: float
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def phase_mask(self, phase: Phase) -> np.ndarray:
        return self.phase == int(phase)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "r", "r_dot", "r_ddot", "phase"])
        for i in range(len(self)):
            w.writerow([repr(float(self.t[i])), repr(float(self.r[i])), repr(float(self.r_dot[i])),
                        repr(float(self.r_ddot[i])), Phase(int(self.phase[i])).name])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def cumtrapz(y: np.ndarray, h: float, initial: float = 0.0) -> np.ndarray:
    out = np.empty_like(y, dtype=float)
    out[0] = initial
    if y.shape[0] > 1:
        out[1:] = initial + np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return out


# (samples, accel at segment start, accel at segment end, phase)
_Segment = tuple[int, float, float, Phase]


def _assemble(segments: Sequence[_Segment], h: float, r0: float) -> tuple:
    n_total = sum(seg[0] for seg in segments)
    acc = np.zeros(n_total + 1)
    labels = np.full(n_total + 1, int(Phase.IP), dtype=np.int8)
    k = 0
    prev_end = 0.0
    for n, a0, a1, ph in segments:
        if n == 0:
            continue
        frac = np.arange(n + 1) / n
        acc[k:k + n + 1] = a0 + (a1 - a0) * frac
        acc[k] = 0.5 * (prev_end + a0)
        labels[k:k + n + 1] = int(ph)
        prev_end = a1
        k += n
    acc[k] = 0.5 * prev_end
    # A boundary sample belongs to the later segment unless it still accelerates.
    labels[acc != 0.0] = int(Phase.AD)
    vel = cumtrapz(acc, h)
    return acc, vel, labels


def _ramp_segments(v: float, n_ramp: int, n_jerk: int, phase: Phase, h: float) -> list[_Segment]:
    """Segments that change velocity by ``v`` over ``n_ramp`` samples."""
    if n_ramp == 0 or v == 0.0:
        return []
    if n_jerk == 0:
        a = v / (n_ramp * h)
        return [(n_ramp, a, a, phase)]
    a = v / ((n_ramp - n_jerk) * h)
    return [(n_jerk, 0.0, a, phase), (n_ramp - 2 * n_jerk, a, a, phase), (n_jerk, a, 0.0, phase)]


def generate_scan(spec: ScanProfileSpec) -> TrajectoryProfile:
    """Build the idle/accel/scan/decel/hold reference for ``spec``."""
    h = 1.0 / spec.sample_rate
    v = spec.scan_velocity
    n_idle = int(round(spec.idle_time / h))
    n_hold = int(round(spec.hold_time / h))

    if v == 0.0 or spec.scan_length == 0.0:
        if v != spec.scan_length and (v == 0.0) != (spec.scan_length == 0.0):
            raise InfeasibleProfile("scan_length and scan_velocity must both be zero or both positive")
        segments: list[_Segment] = [(n_idle + n_hold, 0.0, 0.0, Phase.IP)]
        info = {"accel": 0.0, "accel_time": 0.0, "scan_time": 0.0, "shape": spec.shape}
        return _finish(segments, h, spec.start_position, v, info)

    if spec.max_accel <= 0:
        raise InfeasibleProfile("max_accel must be positive for a moving profile")
    accel_time = spec.accel_time if spec.accel_time is not None else v / spec.max_accel
    n_acc = int(round(accel_time / h))
    if n_acc < 1:
        raise InfeasibleProfile(f"accel_time {accel_time} s is shorter than one sample")
    t_acc = n_acc * h
    if v > spec.max_accel * t_acc * (1 + 1e-9):
        raise InfeasibleProfile(
            f"cannot reach {v} m/s within {t_acc} s at {spec.max_accel} m/s^2 "
            f"(needs at least {v / spec.max_accel:.6g} s)")

    n_jerk = 0
    if spec.shape == "scurve":
        n_flat_min = int(math.ceil(v / (spec.max_accel * h) - 1e-9))
        n_jerk = min(n_acc - n_flat_min, n_acc // 2)
        n_jerk = max(n_jerk, 0)

    d_ramps = v * t_acc  # accel + decel distance for symmetric ramps
    d_scan = spec.scan_length - d_ramps
    if d_scan < -1e-12:
        raise InfeasibleProfile(
            f"scan_length {spec.scan_length} m is shorter than the ramp distance {d_ramps:.6g} m")
    n_scan = int(round(max(d_scan, 0.0) / (v * h)))

    def move(sign: float) -> list[_Segment]:
        segs = _ramp_segments(sign * v, n_acc, n_jerk, Phase.AD, h)
        segs.append((n_scan, 0.0, 0.0, Phase.SP))
        segs += _ramp_segments(-sign * v, n_acc, n_jerk, Phase.AD, h)
        return segs

    segments = [(n_idle, 0.0, 0.0, Phase.IP)]
    segments += move(1.0)
    segments.append((n_hold, 0.0, 0.0, Phase.IP))
    if spec.return_scan:
        segments += move(-1.0)
        segments.append((n_hold, 0.0, 0.0, Phase.IP))
    peak = max(abs(s[1]) for s in segments)
    info = {"accel": peak, "accel_time": t_acc, "scan_time": n_scan * h,
            "jerk_time": n_jerk * h, "shape": spec.shape}
    return _finish(segments, h, spec.start_position, v, info)


def _finish(segments, h, r0, v, info) -> TrajectoryProfile:
    acc, vel, labels = _assemble(segments, h, r0)
    sp = labels == int(Phase.SP)
    # Scan samples carry the commanded velocity exactly; the correction is
    # at round-off level so the trapezoid relations still hold.
    vel[sp] = np.sign(vel[sp]) * v
    pos = cumtrapz(vel, h, initial=r0)
    t = np.arange(acc.shape[0]) * h
    return TrajectoryProfile(t=t, r=pos, r_dot=vel, r_ddot=acc, phase=labels, h=h, info=info)


def acceleration_pulse_profile(pulses: Sequence[PulseSpec], duration: float,
                               sample_rate: float = 10_000.0,
                               start_position: float = 0.0) -> TrajectoryProfile:
    """Reference from a train of acceleration pulses, integrated twice.

    Samples with non-zero acceleration are labelled AD, moving samples with
    zero acceleration SP and the rest IP.
    """
    if not sample_rate > 0 or not duration >= 0:
        raise ValueError("need sample_rate > 0 and duration >= 0")
    h = 1.0 / sample_rate
    n_total = int(round(duration / h))
    segments: list[_Segment] = []
    k = 0
    for pulse in sorted(pulses, key=lambda p: p.start):
        for name in ("start", "duration", "amplitude", "ramp"):
            if not math.isfinite(getattr(pulse, name)):
                raise ValueError(f"pulse {name} must be finite")
        if pulse.duration < 0 or pulse.ramp < 0 or 2 * pulse.ramp > pulse.duration + 1e-12:
            raise ValueError(f"invalid pulse {pulse}")
        k0 = int(round(pulse.start / h))
        n = int(round(pulse.duration / h))
        nr = int(round(pulse.ramp / h))
        if k0 < k:
            raise ValueError("pulses overlap")
        segments.append((k0 - k, 0.0, 0.0, Phase.IP))
        a = pulse.amplitude
        if nr:
            segments += [(nr, 0.0, a, Phase.AD), (n - 2 * nr, a, a, Phase.AD), (nr, a, 0.0, Phase.AD)]
        else:
            segments.append((n, a, a, Phase.AD))
        k = k0 + n
    if k > n_total:
        raise ValueError("pulses extend past the profile duration")
    segments.append((n_total - k, 0.0, 0.0, Phase.IP))
    acc, vel, labels = _assemble(segments, h, start_position)
    pos = cumtrapz(vel, h, initial=start_position)
    moving = (labels != int(Phase.AD)) & (np.abs(vel) > 1e-12)
    labels[moving] = int(Phase.SP)
    t = np.arange(acc.shape[0]) * h
    return TrajectoryProfile(t=t, r=pos, r_dot=vel, r_ddot=acc, phase=labels, h=h,
                             info={"pulses": [vars(p) for p in pulses]})


def constant_profile(duration: float, sample_rate: float = 10_000.0,
                     position: float = 0.0) -> TrajectoryProfile:
    """Stationary reference, labelled IP throughout."""
    return acceleration_pulse_profile([], duration, sample_rate, position)


@dataclass(frozen=True)
class PulseTrain:
    """Declarative form of :func:`acceleration_pulse_profile`."""

    pulses: tuple[PulseSpec, ...] = ()
    duration: float = 1.0
    sample_rate: float = 10_000.0
    start_position: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(
            p if isinstance(p, PulseSpec) else PulseSpec(**p) for p in self.pulses))

    def build(self) -> TrajectoryProfile:
        return acceleration_pulse_profile(self.pulses, self.duration, self.sample_rate,
                                          self.start_position)


def build_profile(spec) -> TrajectoryProfile:
    """Turn a profile description (or a ready profile) into arrays."""
    if isinstance(spec, TrajectoryProfile):
        return spec
    if isinstance(spec, ScanProfileSpec):
        return generate_scan(spec)
    if isinstance(spec, PulseTrain):
        return spec.build()
    raise TypeError(f"cannot build a trajectory from {type(spec).__name__}")
