"""Discrete fractional-order operators and the signed-power primitive.

Fractional derivatives and integrals are approximated with the
Grunwald-Letnikov sum under the short-memory principle::

    D^q f(t_n) ~= h^(-q) * sum_{j=0}^{min(n, L-1)} w_j f(t_n - j h)

with ``w_0 = 1`` and ``w_j = w_{j-1} (1 - (q + 1) / j)``. Positive ``q`` is a
derivative, negative ``q`` an integral of order ``-q``. Samples before the
first call are taken as zero.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def sig_pow(x: float, a: float) -> float:
    """Signed power ``sgn(x) * |x|**a``; exactly zero at ``x = 0``."""
    x = _check_finite("x", x)
    a = _check_finite("a", a)
    if a <= 0.0:
        raise ValueError(f"exponent must be positive, got {a}")
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** a, x)


def gamma_fn(x: float) -> float:
    """Gamma function on the positive half-line."""
    x = _check_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"gamma_fn is only defined here for x > 0, got {x}")
    return math.gamma(x)


def gl_coefficients(order: float, length: int) -> np.ndarray:
    """First ``length`` Grunwald-Letnikov binomial weights for ``order``."""
    if length < 1:
        raise ValueError("length must be >= 1")
    w = np.empty(length)
    w[0] = 1.0
    q1 = order + 1.0
    for j in range(1, length):
        w[j] = w[j - 1] * (1.0 - q1 / j)
    return w


def default_window(step: float, memory: float = 1.0) -> int:
    """Smallest window ``L`` with ``L * step >= memory``."""
    return max(1, int(math.ceil(memory / step - 1e-9)) + 1)


class GLOperator:
    """Streaming Grunwald-Letnikov operator with a fixed sample step.

    Parameters
    ----------
    order : float
        Operator order. ``0 < order <= 1`` differentiates, ``-1 <= order < 0``
        integrates, ``0`` is the identity.
    step : float
        Sample period ``h`` in seconds.
    window : int, optional
        Short-memory length ``L``. Defaults to covering one second.
    """

    def __init__(self, order: float, step: float, window: int | None = None):
        order = _check_finite("order", order)
        step = _check_finite("step", step)
        if not -1.0 <= order <= 1.0:
            raise ValueError(f"order must lie in [-1, 1], got {order}")
        if step <= 0.0:
            raise ValueError("step must be positive")
        if window is None:
            window = default_window(step)
        if window < 1:
            raise ValueError("window must be >= 1")
        self.order = order
        self.step_size = step
        self.window = int(window)
        self.coeffs = gl_coefficients(order, self.window)
        self._wrev = np.ascontiguousarray(self.coeffs[::-1])
        self._scale = step ** (-order)
        self._buf = np.zeros(2 * self.window)
        self._pos = 0
        self._count = 0

    def reset(self) -> None:
        self._buf[:] = 0.0
        self._pos = 0
        self._count = 0

    @property
    def count(self) -> int:
        """Number of samples pushed since the last reset."""
        return self._count

    @property
    def history(self) -> np.ndarray:
        """Retained samples, oldest first (at most ``window`` of them)."""
        m = min(self._count, self.window)
        return self._buf[self._pos - m:self._pos].copy()

    def push(self, sample: float) -> None:
        if self._pos == self._buf.shape[0]:
            keep = self.window - 1
            if keep:
                self._buf[:keep] = self._buf[self._pos - keep:self._pos]
            self._pos = keep
        self._buf[self._pos] = sample
        self._pos += 1
        self._count += 1

    def value(self) -> float:
        """Operator output for the history pushed so far."""
        m = min(self._count, self.window)
        return self._scale * kernels.gl_dot(self._wrev, self._buf, self._pos, m)

    def step(self, sample: float) -> float:
        """Append one sample and return the operator output at that time."""
        sample = _check_finite("sample", sample)
        self.push(sample)
        return self.value()

    def apply(self, signal) -> np.ndarray:
        """Run the operator over a whole signal from a fresh (zero) history."""
        x = np.asarray(signal, dtype=float)
        return self._scale * kernels.gl_filter(self.coeffs, x)


def gl_apply(order: float, step: float, signal, window: int | None = None) -> np.ndarray:
    """One-shot Grunwald-Letnikov operator over ``signal``."""
    x = np.asarray(signal, dtype=float)
    if window is None:
        window = max(x.shape[0], 1)
    return GLOperator(order, step, window).apply(x)
