# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner-loop kernels. Mirrors ``_kernels_py`` function by function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, M_PI

cnp.import_array()

BACKEND = "cython"


def gl_dot(double[::1] wrev, double[::1] buf, Py_ssize_t pos, Py_ssize_t m):
    cdef Py_ssize_t n = wrev.shape[0]
    cdef Py_ssize_t off = n - m
    cdef Py_ssize_t start = pos - m
    cdef Py_ssize_t i
    cdef double acc = 0.0
    if m <= 0:
        return 0.0
    for i in range(m):
        acc += wrev[off + i] * buf[start + i]
    return acc


def gl_filter(coeffs, x):
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t L = c.shape[0]
    out = np.empty(n)
    cdef double[::1] y = out
    cdef Py_ssize_t i, j, jmax
    cdef double acc
    for i in range(n):
        jmax = i if i < L - 1 else L - 1
        acc = 0.0
        for j in range(jmax + 1):
            acc += c[j] * xs[i - j]
        y[i] = acc
    return out


cdef inline double _accel(double p, double v, double u, double K, double Tv,
                          double d0, double ripple_amp, double ripple_k,
                          double coulomb, double step) nogil:
    cdef double d = d0 + step
    if ripple_amp != 0.0:
        d += ripple_amp * sin(ripple_k * p)
    if coulomb != 0.0:
        if v > 0.0:
            d -= coulomb
        elif v < 0.0:
            d += coulomb
    return -Tv * v + K * u + d


def rk4_advance(double p, double v, double u, double K, double Tv, double d0,
                double ripple_amp, double ripple_period, double coulomb,
                double step_amp, double step_trigger, double step_side,
                bint step_active, double h, int substeps):
    cdef double dt = h / substeps
    cdef double ripple_k = 2.0 * M_PI / ripple_period if ripple_period > 0.0 else 0.0
    cdef double step, a1, a2, a3, a4, p2, v2, p3, v3, p4, v4
    cdef int i
    for i in range(substeps):
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
    return p, v, bool(step_active)
