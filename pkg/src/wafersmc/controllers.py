"""Control laws for the wafer stage.

Super-twisting family (everything except VGPID)::

    u    = u_eq + u_sw
    u_eq = (r'' - k1 D^xi[sig(e)^a] - (k2/a)|e|^((1-a)/a) e' + T_v_bar v) / K_bar
    u_sw = -(h1 / K_bar) Phi1(s) - z,     z' = (h2 / K_bar) Phi2(s)

with ``Phi2 = Phi1' Phi1``. The families differ in the surface, the shape
of ``Phi1`` and how ``h1, h2`` are scheduled:

========  =======  ==========================  =========  ============
family    surface  Phi1                        gains      feedforward
========  =======  ==========================  =========  ============
CGSTA     LSS      |s|^(1/2) sgn s             constant   yes
VGSTA     LSS      |s|^(1/2) sgn s + h3 s      variable   yes
FCGSTA    FSS      |s|^(1/2) sgn s + h3 s      constant   yes
IFVSTA    PFSS     |s|^alpha(s) sgn s          variable   no
PFVSTA    PFSS     |s|^alpha(s) sgn s          variable   yes
========  =======  ==========================  =========  ============

VGPID is a PID whose proportional gain depends on the trajectory phase.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .surfaces import SlidingSurface, SurfaceFamily, SurfaceSpec
from .trajectory import Phase


class ControllerFamily(str, enum.Enum):
    CGSTA = "CGSTA"
    VGSTA = "VGSTA"
    VGPID = "VGPID"
    FCGSTA = "FCGSTA"
    IFVSTA = "IFVSTA"
    PFVSTA = "PFVSTA"

    @classmethod
    def parse(cls, name: str) -> "ControllerFamily":
        name = name.strip().upper()
        if name == "LVGSTA":
            name = "VGSTA"
        return cls(name)


class PhiForm(str, enum.Enum):
    ALPHA = "alpha"              # |s|^alpha(s) sgn(s)
    SQRT = "sqrt"                # |s|^(1/2) sgn(s)
    SQRT_LINEAR = "sqrt_linear"  # |s|^(1/2) sgn(s) + h3 s


FAMILY_FORM = {
    ControllerFamily.CGSTA: PhiForm.SQRT,
    ControllerFamily.VGSTA: PhiForm.SQRT_LINEAR,
    ControllerFamily.FCGSTA: PhiForm.SQRT_LINEAR,
    ControllerFamily.IFVSTA: PhiForm.ALPHA,
    ControllerFamily.PFVSTA: PhiForm.ALPHA,
}

FAMILY_SURFACE = {
    ControllerFamily.CGSTA: SurfaceFamily.LSS,
    ControllerFamily.VGSTA: SurfaceFamily.LSS,
    ControllerFamily.FCGSTA: SurfaceFamily.FSS,
    ControllerFamily.IFVSTA: SurfaceFamily.PFSS,
    ControllerFamily.PFVSTA: SurfaceFamily.PFSS,
}


class ControllerError(RuntimeError):
    pass


def _form(form) -> PhiForm:
    if isinstance(form, ControllerFamily):
        return FAMILY_FORM[form]
    try:
        return PhiForm(form)
    except ValueError:
        return FAMILY_FORM[ControllerFamily.parse(form)]


def alpha_exponent(s: float) -> float:
    """``(4|s| + 1) / (2(|s| + 1))``: 1/2 at the origin, tending to 2."""
    x = abs(s)
    if math.isinf(x):
        return 2.0
    return (4.0 * x + 1.0) / (2.0 * (x + 1.0))


def alpha_derivative(s: float) -> float:
    """d alpha / d|s|."""
    x = abs(s)
    return 1.5 / (x + 1.0) ** 2


def phi1(s: float, form=PhiForm.ALPHA, h3: float = 0.0) -> float:
    form = _form(form)
    if s == 0.0:
        return 0.0
    x = abs(s)
    if form is PhiForm.ALPHA:
        return math.copysign(x ** alpha_exponent(x), s)
    root = math.copysign(math.sqrt(x), s)
    if form is PhiForm.SQRT:
        return root
    return root + h3 * s


def phi1_prime(s: float, form=PhiForm.ALPHA, h3: float = 0.0) -> float:
    """Derivative of :func:`phi1` for ``s != 0`` (``inf`` at the origin)."""
    form = _form(form)
    x = abs(s)
    if x == 0.0:
        return math.inf
    if form is PhiForm.ALPHA:
        al = alpha_exponent(x)
        return x ** al * (al / x + alpha_derivative(x) * math.log(x))
    d = 0.5 / math.sqrt(x)
    return d + h3 if form is PhiForm.SQRT_LINEAR else d


def phi2(s: float, form=PhiForm.ALPHA, h3: float = 0.0) -> float:
    """``Phi1'(s) Phi1(s)``, zero at the origin by the ``sgn(0) = 0`` convention."""
    form = _form(form)
    if s == 0.0:
        return 0.0
    x = abs(s)
    if form is PhiForm.ALPHA:
        al = alpha_exponent(x)
        lx = math.log(x)
        # evaluated in log space so tiny |s| never forms 0 * (-inf)
        mag = al * math.exp((2.0 * al - 1.0) * lx) + alpha_derivative(x) * lx * math.exp(2.0 * al * lx)
        return math.copysign(mag, s)
    sg = math.copysign(1.0, s)
    if form is PhiForm.SQRT:
        return 0.5 * sg
    return 0.5 * sg + 1.5 * h3 * math.sqrt(x) * sg + h3 * h3 * s


class GainMode(str, enum.Enum):
    CONSTANT = "constant"
    AFFINE = "affine_in_accel"
    THEOREM = "theorem"


@dataclass(frozen=True)
class GainSchedule:
    """Switching gains ``h1, h2`` as functions of the acceleration.

    * constant: ``h1, h2`` fixed.
    * affine_in_accel: ``h1 = c1 |v'| + c0``, ``h2 = d1 |v'| + d0``.
    * theorem: ``h1, h2`` from ``p1, p2, p4`` and the disturbance bounds
      ``D1..D4`` for the convergence radius ``gamma``.

    ``h3`` is the linear weight inside ``Phi1`` for the forms that use it.
    """

    mode: GainMode = GainMode.CONSTANT
    h1: float = 0.0
    h2: float = 0.0
    h3: float = 0.0
    c1: float = 0.0
    c0: float = 0.0
    d1: float = 0.0
    d0: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    p4: float = 0.0
    D1: float = 0.0
    D2: float = 0.0
    D3: float = 0.0
    D4: float = 0.0
    gamma: float = 0.0
    form: PhiForm = PhiForm.ALPHA

    def __post_init__(self):
        object.__setattr__(self, "mode", GainMode(self.mode))
        object.__setattr__(self, "form", _form(self.form))
        if self.mode is GainMode.THEOREM:
            check_p_constraints(self.p1, self.p2, self.p4)
            if not self.gamma > 0:
                raise ValueError("theorem gains need gamma > 0")
            if min(self.D1, self.D2, self.D3, self.D4) < 0:
                raise ValueError("disturbance bounds D1..D4 must be non-negative")
        elif self.mode is GainMode.CONSTANT:
            if not (self.h1 > 0 and self.h2 > 0):
                raise ValueError("constant gains must be positive")
        else:
            if not (self.c0 > 0 and self.d0 > 0 and self.c1 >= 0 and self.d1 >= 0):
                raise ValueError("affine gains need c0, d0 > 0 and c1, d1 >= 0")

    @classmethod
    def constant(cls, h1, h2, h3=0.0, **kw):
        return cls(mode=GainMode.CONSTANT, h1=h1, h2=h2, h3=h3, **kw)

    @classmethod
    def affine(cls, c1, c0, d1, d0, h3=0.0, **kw):
        return cls(mode=GainMode.AFFINE, c1=c1, c0=c0, d1=d1, d0=d0, h3=h3, **kw)

    @classmethod
    def theorem(cls, p1, p2, p4, D1, D2, D3, D4, gamma, form=PhiForm.ALPHA, h3=0.0):
        return cls(mode=GainMode.THEOREM, p1=p1, p2=p2, p4=p4, D1=D1, D2=D2, D3=D3,
                   D4=D4, gamma=gamma, form=form, h3=h3)

    def delta1(self) -> float:
        return self.D1 + self.D2 / phi1(self.gamma, self.form, self.h3)

    def delta2(self, v_dot: float) -> float:
        return self.D3 * abs(v_dot) + self.D4


def check_p_constraints(p1: float, p2: float, p4: float) -> None:
    if not p1 > 0:
        raise ValueError(f"p1 must be positive (p1 > 0), got {p1}")
    if not p2 < 0:
        raise ValueError(f"p2 must be negative (p2 < 0), got {p2}")
    if not p1 * p4 - p2 * p2 > 0:
        raise ValueError(f"need p1*p4 - p2^2 > 0, got {p1 * p4 - p2 * p2}")


def theorem_gains(p1: float, p2: float, p4: float, delta1: float, delta2: float) -> tuple[float, float]:
    """Variable gains that make ``V = Theta' P Theta`` decrease outside ``|s| <= gamma``."""
    check_p_constraints(p1, p2, p4)
    denom = p2 ** 3 - p1 * p2 * p4
    bracket = ((-p2 * delta1 + p4 * delta2) ** 2 / 4.0 + p2 * p2 * p1 / p4
               + p2 * p2 * delta2 - p1 * p2 * delta1)
    h1 = p4 / denom * bracket
    h2 = (p1 - p2 * h1) / p4
    return h1, h2


def compute_gains(schedule: GainSchedule, v_dot: float) -> tuple[float, float]:
    if schedule.mode is GainMode.CONSTANT:
        return schedule.h1, schedule.h2
    if schedule.mode is GainMode.AFFINE:
        a = abs(v_dot)
        return schedule.c1 * a + schedule.c0, schedule.d1 * a + schedule.d0
    return theorem_gains(schedule.p1, schedule.p2, schedule.p4,
                         schedule.delta1(), schedule.delta2(v_dot))


@dataclass(frozen=True)
class PIDGains:
    Kp: float = 1.2e6
    Ki: float = 8e6
    Kd: float = 3e3
    dKp_ad: float = 0.5e6
    dKp_other: float = 0.2e6


@dataclass(frozen=True)
class ControllerSpec:
    family: ControllerFamily
    surface: SurfaceSpec | None = None
    gains: GainSchedule | None = None
    K_bar: float = 4.0
    T_v_bar: float = 1.0
    feedforward: bool | None = None
    pid: PIDGains = field(default_factory=PIDGains)
    z_limit: float | None = None

    def __post_init__(self):
        fam = ControllerFamily.parse(self.family) if isinstance(self.family, str) else self.family
        object.__setattr__(self, "family", fam)
        if not self.K_bar > 0:
            raise ValueError("K_bar must be positive")
        if fam is ControllerFamily.VGPID:
            return
        if self.surface is None or self.gains is None:
            raise ValueError(f"{fam.value} needs a surface and a gain schedule")
        want = FAMILY_SURFACE[fam]
        if self.surface.family is not want:
            raise ValueError(f"{fam.value} uses the {want.value} surface, got {self.surface.family.value}")
        if self.gains.form is not FAMILY_FORM[fam]:
            object.__setattr__(self, "gains", replace(self.gains, form=FAMILY_FORM[fam]))
        if self.feedforward is None:
            object.__setattr__(self, "feedforward", fam is not ControllerFamily.IFVSTA)

    @property
    def form(self) -> PhiForm:
        return FAMILY_FORM[self.family]


class Controller:
    """Stateful controller; call :meth:`step` once per control sample."""

    def __init__(self, spec: ControllerSpec, h: float, window: int | None = None):
        self.spec = spec
        self.h = h
        self.surface = None
        if spec.family is not ControllerFamily.VGPID:
            self.surface = SlidingSurface(spec.surface, h, window)
        self.reset()

    def reset(self) -> None:
        if self.surface is not None:
            self.surface.reset()
        self.z = 0.0
        self.integral = 0.0
        self.s = 0.0
        self.h1 = 0.0
        self.h2 = 0.0
        self.u_eq = 0.0
        self.u_sw = 0.0
        self._index = -1

    @property
    def z_theta(self) -> float:
        """Integral state in sliding-variable units (``-K_bar z``)."""
        return -self.spec.K_bar * self.z

    def step(self, e: float, e_dot: float, v: float, v_dot: float, r_ddot: float,
             phase: int = Phase.IP, index: int | None = None) -> float:
        if index is None:
            index = self._index + 1
        self._index = index
        spec = self.spec
        if spec.family is ControllerFamily.VGPID:
            return self._pid(e, e_dot, phase)

        s = self.surface.step(e, e_dot, index)
        frac_rate, nl_rate = self.surface.terms(e, e_dot)
        h1, h2 = compute_gains(spec.gains, v_dot)
        k1 = spec.surface.k1 if self.surface.spec.has_memory else 0.0
        ff = r_ddot if spec.feedforward else 0.0
        u_eq = (ff - k1 * frac_rate - nl_rate + spec.T_v_bar * v) / spec.K_bar
        form, h3 = spec.form, spec.gains.h3
        u_sw = -(h1 / spec.K_bar) * phi1(s, form, h3) - self.z
        u = u_eq + u_sw
        if not math.isfinite(u):
            for name, val in (("s", s), ("fractional term", frac_rate), ("feedback term", nl_rate),
                              ("h1", h1), ("h2", h2), ("z", self.z), ("u_eq", u_eq), ("u_sw", u_sw)):
                if not math.isfinite(val):
                    raise ControllerError(f"non-finite {name} at sample {index}")
            raise ControllerError(f"non-finite control at sample {index}")
        self.z += self.h * (h2 / spec.K_bar) * phi2(s, form, h3)
        if spec.z_limit is not None:
            self.z = min(max(self.z, -spec.z_limit), spec.z_limit)
        self.s, self.h1, self.h2, self.u_eq, self.u_sw = s, h1, h2, u_eq, u_sw
        return u

    def _pid(self, e: float, e_dot: float, phase: int) -> float:
        g = self.spec.pid
        kp = g.Kp + (g.dKp_ad if int(phase) == Phase.AD else g.dKp_other)
        u = -(kp * e + g.Ki * self.integral + g.Kd * e_dot)
        if not math.isfinite(u):
            raise ControllerError("non-finite PID output")
        self.integral += self.h * e
        self.u_eq, self.u_sw = u, 0.0
        return u


def control_step(controller: Controller, e, e_dot, v, v_dot_est, r_ddot, phase, index=None) -> float:
    return controller.step(e, e_dot, v, v_dot_est, r_ddot, phase, index)


def lyapunov_value(phi1_s: float, z: float, p1: float, p2: float, p4: float) -> float:
    """``[Phi1, z] P [Phi1, z]'`` for ``P = [[p1, p2], [p2, p4]]``."""
    return p1 * phi1_s * phi1_s + 2.0 * p2 * phi1_s * z + p4 * z * z


def error_bound_epsilon(k1: float, k2: float, a: float, kappa: float, gamma: float,
                        rtol: float = 1e-15) -> float:
    """Positive root of ``k1 kappa x^a - k2 x^(1/a) + gamma``.

    This is the radius the tracking error settles into once ``|s| <= gamma``.
    With ``a = 1`` the function is linear and has no positive root unless
    ``k2 > k1 kappa``; ``inf`` is returned in that case.
    """
    for name, val in (("k1", k1), ("k2", k2), ("a", a), ("kappa", kappa), ("gamma", gamma)):
        if not math.isfinite(val):
            raise ValueError(f"{name} must be finite")
    if k2 <= 0:
        raise ValueError("k2 must be positive")
    if k1 < 0 or kappa < 0 or gamma < 0:
        raise ValueError("k1, kappa and gamma must be non-negative")
    if not 0 < a <= 1:
        raise ValueError("a must lie in (0, 1]")
    if gamma == 0 and (k1 == 0 or kappa == 0):
        return 0.0
    if a == 1.0:
        slope = k2 - k1 * kappa
        if slope <= 0:
            return math.inf
        return gamma / slope

    def f(x):
        return k1 * kappa * x ** a - k2 * x ** (1.0 / a) + gamma

    if gamma == 0:
        # k1 kappa x^a = k2 x^(1/a) away from the trivial root at 0
        return (k1 * kappa / k2) ** (a / (1.0 - a * a))
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
