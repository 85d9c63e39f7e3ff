"""Sliding surfaces: linear (LSS), integral (ISS), fractional (FSS) and the
practical fractional surface (PFSS).

For the PFSS::

    s = e' + k1 * D^(xi-1)[sig(e)^a] + k2 * sig(e)^(1/a)

The FSS is the same with ``a = 1``, the ISS replaces the fractional
integral by an ordinary integral of ``e`` and the LSS drops the memory
term altogether.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fraccalc import GLOperator, sig_pow


class SurfaceFamily(str, enum.Enum):
    LSS = "LSS"
    ISS = "ISS"
    FSS = "FSS"
    PFSS = "PFSS"


class SampleOrderError(RuntimeError):
    """A stateful surface was advanced out of sequence."""


@dataclass(frozen=True)
class SurfaceSpec:
    family: SurfaceFamily = SurfaceFamily.PFSS
    k1: float = 8.0
    k2: float = 500.0
    xi: float = 0.5
    a: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "family", SurfaceFamily(self.family))
        for name in ("k1", "k2", "xi", "a"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.k1 < 0:
            raise ValueError("k1 must be non-negative")
        if self.k2 <= 0:
            raise ValueError("k2 must be positive")
        if self.family in (SurfaceFamily.FSS, SurfaceFamily.PFSS) and not 0 < self.xi < 1:
            raise ValueError("fractional surfaces need xi in (0, 1)")
        if self.family is SurfaceFamily.PFSS and not 0 < self.a < 1:
            raise ValueError("PFSS needs a in (0, 1)")

    @property
    def exponent(self) -> float:
        """The ``a`` actually used (1 for every family except PFSS)."""
        return self.a if self.family is SurfaceFamily.PFSS else 1.0

    @property
    def has_memory(self) -> bool:
        return self.family is not SurfaceFamily.LSS and self.k1 > 0


class SlidingSurface:
    """Per-run surface state.

    Each control sample calls :meth:`step` exactly once, with a strictly
    increasing sample index, so the integral memory sees every error sample
    once.
    """

    def __init__(self, spec: SurfaceSpec, h: float, window: int | None = None):
        self.spec = spec
        self.h = h
        fam = spec.family
        self._gl = None
        if fam in (SurfaceFamily.FSS, SurfaceFamily.PFSS):
            self._gl = GLOperator(spec.xi - 1.0, h, window)
        self.reset()

    def reset(self) -> None:
        if self._gl is not None:
            self._gl.reset()
        self._integral = 0.0
        self.memory = 0.0
        self.memory_rate = 0.0
        self._last_index = -1
        self.s = 0.0

    def _memory_input(self, e: float) -> float:
        return sig_pow(e, self.spec.exponent) if self.spec.family is SurfaceFamily.PFSS else e

    def advance(self, e: float, index: int) -> float:
        """Push sample ``index`` of the error into the memory term.

        Returns the memory value ``D^(xi-1)[sig(e)^a]`` (or ``int e`` for the
        ISS) including this sample.
        """
        if index <= self._last_index:
            raise SampleOrderError(
                f"surface already advanced to sample {self._last_index}, got {index}")
        self._last_index = index
        previous = self.memory
        fam = self.spec.family
        if fam is SurfaceFamily.LSS:
            self.memory = 0.0
        elif fam is SurfaceFamily.ISS:
            self._integral += self.h * e
            self.memory = self._integral
        else:
            self.memory = self._gl.step(self._memory_input(e))
        self.memory_rate = (self.memory - previous) / self.h
        return self.memory

    def feedback(self, e: float) -> float:
        """The memoryless term ``k2 * sig(e)^(1/a)``."""
        a = self.spec.exponent
        if a == 1.0:
            return self.spec.k2 * e
        return self.spec.k2 * sig_pow(e, 1.0 / a)

    def value(self, e: float, e_dot: float) -> float:
        """Sliding variable from the current memory (no state change)."""
        return e_dot + self.spec.k1 * self.memory + self.feedback(e)

    def step(self, e: float, e_dot: float, index: int) -> float:
        self.advance(e, index)
        self.s = self.value(e, e_dot)
        return self.s

    def terms(self, e: float, e_dot: float) -> tuple[float, float]:
        """Pieces of ``s'`` used by the equivalent control.

        Returns ``(D^xi[sig(e)^a], (k2/a) |e|^((1-a)/a) e')`` for the latest
        sample. The first is the backward difference of the memory term,
        which equals the Grunwald-Letnikov derivative of order ``xi`` over
        the retained window.
        """
        return self.memory_rate, nonlinear_feedback_rate(self.spec.k2, self.spec.exponent, e, e_dot)


def nonlinear_feedback_rate(k2: float, a: float, e: float, e_dot: float) -> float:
    """Time derivative of ``k2 * sig(e)^(1/a)`` along ``e'``."""
    if a == 1.0:
        return k2 * e_dot
    if e == 0.0:
        return 0.0
    return k2 / a * abs(e) ** ((1.0 - a) / a) * e_dot


def sliding_value(surface: SlidingSurface, e: float, e_dot: float, index: int) -> float:
    return surface.step(e, e_dot, index)


def surface_terms(surface: SlidingSurface, e: float, e_dot: float) -> tuple[float, float]:
    return surface.terms(e, e_dot)


def surface_equilibrium(spec: SurfaceSpec, s_value: float) -> float:
    """Rest point of ``e`` when the sliding variable is held at ``s_value``.

    Surfaces with an integral or fractional-integral memory absorb any
    constant offset, so their error returns to zero; the LSS settles where
    ``k2 * e = s``.
    """
    if spec.has_memory:
        return 0.0
    return sig_pow(s_value / spec.k2, spec.exponent) if s_value else 0.0


@dataclass
class SurfaceResponse:
    family: SurfaceFamily
    t: np.ndarray
    e: np.ndarray
    equilibrium: float


def surface_response(spec: SurfaceSpec, s_value: float = 1.0, duration: float = 1.5,
                     h: float = 1e-4, e0: float = 0.0, window: int | None = None) -> SurfaceResponse:
    """Integrate ``e' = s - k1 M[e] - k2 sig(e)^(1/a)`` with ``s`` held fixed.

    Forward Euler on the control grid; ``M`` is the surface memory term with
    full memory unless ``window`` is given.
    """
    n = int(round(duration / h)) + 1
    if window is None:
        window = n
    surf = SlidingSurface(spec, h, window)
    e = np.empty(n)
    e[0] = e0
    for k in range(n - 1):
        memory = surf.advance(e[k], k)
        e_dot = s_value - spec.k1 * memory - surf.feedback(e[k])
        e[k + 1] = e[k] + h * e_dot
    return SurfaceResponse(spec.family, np.arange(n) * h, e, surface_equilibrium(spec, s_value))


def settling_time(resp: SurfaceResponse, band: float = 0.05) -> float:
    """First time after which ``|e - e_eq|`` stays within ``band * max|e|``.

    Returns ``inf`` if the response has not settled by the end of the run.
    """
    dev = np.abs(resp.e - resp.equilibrium)
    tol = band * max(np.max(np.abs(resp.e)), abs(resp.equilibrium))
    outside = np.nonzero(dev > tol)[0]
    if outside.size == 0:
        return float(resp.t[0])
    last = outside[-1]
    if last == resp.e.shape[0] - 1:
        return math.inf
    return float(resp.t[last + 1])


def overshoot(resp: SurfaceResponse, s_value: float = 1.0) -> float:
    """Largest excursion of ``e`` past its equilibrium in the forcing direction."""
    direction = math.copysign(1.0, s_value) if s_value else 1.0
    return float(max(0.0, np.max(direction * (resp.e - resp.equilibrium))))
