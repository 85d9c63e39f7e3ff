"""Pure-Python implementations of the inner-loop kernels.

These are the reference versions. ``_kernels.pyx`` mirrors every function
here with the same signature; :mod:`wafersmc.kernels` picks one at import.
"""

import math

import numpy as np

BACKEND = "python"


def gl_dot(wrev, buf, pos, m):
    """Weighted sum of the newest ``m`` history samples.

    ``wrev`` holds the Grunwald-Letnikov weights in reverse order (oldest
    weight first) and ``buf[pos - m:pos]`` the matching samples, oldest first.
    """
    if m <= 0:
        return 0.0
    n = wrev.shape[0]
    return float(np.dot(wrev[n - m:], buf[pos - m:pos]))


def gl_filter(coeffs, x):
    """Apply truncated Grunwald-Letnikov weights to a whole signal.

    Returns ``y[n] = sum_{j < len(coeffs), j <= n} coeffs[j] * x[n - j]``
    without the step-size scaling.
    """
    x = np.asarray(x, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    n = x.shape[0]
    y = np.empty(n)
    wrev = coeffs[::-1].copy()
    L = coeffs.shape[0]
    for i in range(n):
        m = min(i + 1, L)
        y[i] = np.dot(wrev[L - m:], x[i + 1 - m:i + 1])
    return y


def _accel(p, v, u, K, Tv, d0, ripple_amp, ripple_k, coulomb, step):
    d = d0 + step
    if ripple_amp != 0.0:
        d += ripple_amp * math.sin(ripple_k * p)
    if coulomb != 0.0 and v != 0.0:
        d -= math.copysign(coulomb, v)
    return -Tv * v + K * u + d


def rk4_advance(p, v, u, K, Tv, d0, ripple_amp, ripple_period, coulomb,
                step_amp, step_trigger, step_side, step_active, h, substeps):
    """Integrate the stage over one control period with ``u`` held.

    Returns ``(p, v, step_active)``. The step disturbance latches on once
    ``(p - step_trigger) * step_side <= 0``.
    """
    dt = h / substeps
    ripple_k = 2.0 * math.pi / ripple_period if ripple_period > 0.0 else 0.0
    for _ in range(substeps):
        step = step_amp if step_active else 0.0
        a1 = _accel(p, v, u, K, Tv, d0, ripple_amp, ripple_k, coulomb, step)
        p2 = p + 0.5 * dt * v
        v2 = v + 0.5 * dt * a1
        a2 = _accel(p2, v2, u, K, Tv, d0, ripple_amp, ripple_k, coulomb, step)
        p3 = p + 0.5 * dt * v2
        v3 = v + 0.5 * dt * a2
        a3 = _accel(p3, v3, u, K, Tv, d0, ripple_amp, ripple_k, coulomb, step)
        p4 = p + dt * v3
        v4 = v + dt * a3
        a4 = _accel(p4, v4, u, K, Tv, d0, ripple_amp, ripple_k, coulomb, step)
        p = p + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if not step_active and step_amp != 0.0 and (p - step_trigger) * step_side <= 0.0:
            step_active = True
    return p, v, step_active
