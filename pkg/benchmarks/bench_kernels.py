"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on
both backends with :mod:`timeit`, and a full closed-loop run is timed in a
subprocess per backend (the backend is fixed at import time).
"""

import argparse
import importlib
import os
import subprocess
import sys
import timeit

import numpy as np

from wafersmc import _kernels_py
from wafersmc.fraccalc import gl_coefficients

CLOSED_LOOP = (
    "import time; from wafersmc import presets, kernels; from wafersmc.simulator import run; "
    "cfg = presets.scan_study_configs()['PFVSTA']; t = time.perf_counter(); run(cfg); "
    "print(kernels.BACKEND, time.perf_counter() - t)"
)


def backends():
    out = [_kernels_py]
    try:
        out.append(importlib.import_module("wafersmc._kernels"))
    except ImportError:
        print("compiled extension not available; timing the Python backend only")
    return out


def time_kernels(mod, repeat: int) -> dict:
    coeffs = gl_coefficients(-0.5, 10_000)
    wrev = coeffs[::-1].copy()
    buf = np.random.default_rng(0).standard_normal(20_000)
    x = buf[:2_000]
    rk4_args = (0.0, 0.1, 0.5, 3.9124, 1.092, 0.0, 0.02, 0.025, 0.005,
                0.1, 0.23, -1.0, False, 1e-4, 10)
    cases = {
        "gl_dot (10k weights)": lambda: mod.gl_dot(wrev, buf, 15_000, 10_000),
        "gl_filter (2k samples, 10k weights)": lambda: mod.gl_filter(coeffs, x),
        "rk4_advance (10 substeps)": lambda: mod.rk4_advance(*rk4_args),
    }
    result = {}
    for name, fn in cases.items():
        number = 1 if "filter" in name else 200
        best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
        result[name] = best
    return result


def closed_loop(pure: bool) -> str:
    env = dict(os.environ, WAFERSMC_PURE_PYTHON="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", CLOSED_LOOP], env=env,
                         capture_output=True, text=True, check=True)
    backend, seconds = res.stdout.split()
    return f"{backend:8s}{float(seconds):10.3f} s"


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-closed-loop", action="store_true")
    args = parser.parse_args(argv)

    mods = backends()
    timings = {m.BACKEND: time_kernels(m, args.repeat) for m in mods}
    names = list(next(iter(timings.values())))
    header = f"{'kernel':40s}" + "".join(f"{b:>14s}" for b in timings)
    if len(mods) == 2:
        header += f"{'speed-up':>10s}"
    print(header)
    for name in names:
        row = f"{name:40s}" + "".join(f"{timings[b][name] * 1e6:11.2f} us" for b in timings)
        if len(mods) == 2:
            row += f"{timings['python'][name] / timings['cython'][name]:9.1f}x"
        print(row)
    if not args.skip_closed_loop:
        print("\nscan-study PFVSTA closed-loop run")
        print(closed_loop(pure=True))
        if len(mods) == 2:
            print(closed_loop(pure=False))


if __name__ == "__main__":
    main()
