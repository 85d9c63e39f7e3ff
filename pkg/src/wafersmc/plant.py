"""Single-axis wafer-stage model.

The stage obeys ``p' = v`` and ``v' = -T_v v + K u + d(p, v)``, where the
lumped disturbance ``d`` collects friction residue, position-periodic force
ripple, a constant bias and an optional latched step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels


class DivergenceError(RuntimeError):
    """Raised when the plant state leaves its admissible envelope."""


@dataclass(frozen=True)
class PlantParams:
    """True and nominal stage parameters.

    ``K`` is the composite input gain (force-per-volt over mass) and ``T_v``
    the viscous coefficient over mass. Controllers only see ``K_bar`` and
    ``T_v_bar``.
    """

    K: float = 3.9124
    T_v: float = 1.092
    K_bar: float = 4.0
    T_v_bar: float = 1.0
    m: float | None = None
    K_v: float | None = None
    Q: float | None = None

    def __post_init__(self):
        if not self.K > 0 or not self.K_bar > 0:
            raise ValueError("K and K_bar must be positive")
        if self.T_v < 0 or self.T_v_bar < 0:
            raise ValueError("T_v and T_v_bar must be non-negative")
        if self.m is not None:
            if self.Q is None or self.K_v is None or self.m <= 0:
                raise ValueError("physical parameters need m > 0, Q and K_v together")
            if self.K != self.Q / self.m or self.T_v != self.K_v / self.m:
                raise ValueError("K must equal Q/m and T_v must equal K_v/m")

    @classmethod
    def from_physical(cls, m: float, K_v: float, Q: float, K_bar: float, T_v_bar: float):
        return cls(K=Q / m, T_v=K_v / m, K_bar=K_bar, T_v_bar=T_v_bar, m=m, K_v=K_v, Q=Q)

    @property
    def delta_K(self) -> float:
        return self.K - self.K_bar

    @property
    def delta_T_v(self) -> float:
        return self.T_v - self.T_v_bar


@dataclass(frozen=True)
class DisturbanceSpec:
    """Lumped disturbance channels, all in m/s^2.

    ``friction_residual`` acts as a Coulomb-like term opposing motion,
    ripple is ``ripple_amplitude * sin(2 pi p / ripple_spatial_period)`` and
    the step adds ``step_amplitude`` from the moment the stage first reaches
    ``step_trigger_position``.
    """

    constant: float = 0.0
    ripple_amplitude: float = 0.0
    ripple_spatial_period: float = 0.0
    friction_residual: float = 0.0
    step_amplitude: float = 0.0
    step_trigger_position: float = 0.0

    def __post_init__(self):
        for name in ("constant", "ripple_amplitude", "ripple_spatial_period",
                     "friction_residual", "step_amplitude", "step_trigger_position"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.ripple_amplitude != 0.0 and self.ripple_spatial_period <= 0.0:
            raise ValueError("ripple needs a positive spatial period")

    def value(self, p: float, v: float, step_active: bool) -> float:
        d = self.constant
        if self.ripple_amplitude != 0.0:
            d += self.ripple_amplitude * math.sin(2.0 * math.pi * p / self.ripple_spatial_period)
        if self.friction_residual != 0.0 and v != 0.0:
            d -= math.copysign(self.friction_residual, v)
        if step_active:
            d += self.step_amplitude
        return d


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited white measurement noise.

    ``power`` is the per-sample variance of the white source (m^2). It is
    passed through a one-pole low-pass at ``cutoff`` Hz; a cutoff at or above
    the Nyquist rate disables the filter.
    """

    power: float = 0.0
    cutoff: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("noise power must be non-negative")
        if self.cutoff <= 0:
            raise ValueError("noise cutoff must be positive")


@dataclass
class PlantState:
    p: float = 0.0
    v: float = 0.0
    t: float = 0.0
    step_active: bool = False
    step_side: float = field(default=1.0, repr=False)


def initial_state(p0: float, v0: float, dist: DisturbanceSpec) -> PlantState:
    """Rest state with the step-disturbance latch armed relative to ``p0``."""
    side = math.copysign(1.0, p0 - dist.step_trigger_position)
    active = dist.step_amplitude != 0.0 and p0 == dist.step_trigger_position
    return PlantState(p=p0, v=v0, t=0.0, step_active=active, step_side=side)


def plant_step(state: PlantState, params: PlantParams, dist: DisturbanceSpec,
               u: float, h: float, substeps: int = 10,
               v_limit: float = 1e3) -> PlantState:
    """Advance the stage by ``h`` seconds under a zero-order-held input.

    Classical RK4 at ``h / substeps``. Raises :class:`DivergenceError` when the
    state turns non-finite or ``|v|`` exceeds ``v_limit``.
    """
    if h <= 0 or substeps < 1:
        raise ValueError("need h > 0 and substeps >= 1")
    p, v, active = kernels.rk4_advance(
        state.p, state.v, float(u), params.K, params.T_v, dist.constant,
        dist.ripple_amplitude, dist.ripple_spatial_period, dist.friction_residual,
        dist.step_amplitude, dist.step_trigger_position, state.step_side,
        state.step_active, h, int(substeps))
    if not (math.isfinite(p) and math.isfinite(v)) or abs(v) > v_limit:
        raise DivergenceError(f"plant diverged at t={state.t + h:.6g}s (p={p!r}, v={v!r})")
    return replace(state, p=p, v=v, t=state.t + h, step_active=active)


class Measurement:
    """Seeded position sensor with band-limited additive noise."""

    def __init__(self, noise: NoiseSpec, h: float):
        self.noise = noise
        self.h = h
        self._rng = np.random.default_rng(noise.seed)
        self._sigma = math.sqrt(noise.power)
        nyquist = 0.5 / h
        if noise.cutoff >= nyquist:
            self._beta = 1.0
        else:
            self._beta = 1.0 - math.exp(-2.0 * math.pi * noise.cutoff * h)
        self._state = 0.0
        self._block = np.empty(0)
        self._i = 0

    def _white(self) -> float:
        if self._i == self._block.shape[0]:
            self._block = self._rng.standard_normal(4096)
            self._i = 0
        w = self._block[self._i]
        self._i += 1
        return w

    def noise_sample(self) -> float:
        if self._sigma == 0.0:
            return 0.0
        w = self._sigma * self._white()
        self._state += self._beta * (w - self._state)
        return self._state

    def measure(self, state: PlantState) -> float:
        return state.p + self.noise_sample()


def measure(state: PlantState, sensor: Measurement) -> float:
    return sensor.measure(state)
