import importlib

import pytest

from wafersmc import _kernels_py

BACKENDS = [_kernels_py]
try:
    BACKENDS.append(importlib.import_module("wafersmc._kernels"))
except ImportError:  # extension not built; the Python reference still runs
    pass


@pytest.fixture(params=BACKENDS, ids=lambda m: m.BACKEND)
def backend(request):
    return request.param


def pytest_report_header(config):
    from wafersmc import kernels
    return f"wafersmc kernels: {kernels.BACKEND} (available: {[b.BACKEND for b in BACKENDS]})"


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
