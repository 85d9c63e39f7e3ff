"""Phase-aware tracking metrics and comparison tables.

Per-phase figures are the RMS and the maximum of ``|e|`` over the samples of
each phase. The valid scanning error ``e_s`` is the smallest error band the
stage holds for (nearly) the whole scanning phase; ``t_p / t_s`` is the share
of scan time spent inside that band after the last escape from it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .trajectory import Phase

PHASE_NAMES = ("IP", "AD", "SP")
TABLE_COLUMNS = ("controller", "IP_rms", "IP_max", "AD_rms", "AD_max", "SP_rms", "SP_max",
                 "e_s", "tp_over_ts", "status")
GAP = "-"


@dataclass(frozen=True)
class PhaseStats:
    rms: float
    max: float
    samples: int


@dataclass
class MetricsReport:
    label: str
    phases: dict = field(default_factory=dict)
    e_s: float | None = None
    tp_over_ts: float | None = None
    aborted: bool = False
    meta: dict = field(default_factory=dict)

    def rms(self, phase: str) -> float | None:
        st = self.phases.get(phase)
        return None if st is None else st.rms

    def max(self, phase: str) -> float | None:
        st = self.phases.get(phase)
        return None if st is None else st.max

    def row(self) -> dict:
        out = {"controller": self.label}
        for name in PHASE_NAMES:
            out[f"{name}_rms"] = self.rms(name)
            out[f"{name}_max"] = self.max(name)
        out["e_s"] = self.e_s
        out["tp_over_ts"] = self.tp_over_ts
        out["status"] = "aborted" if self.aborted else "ok"
        return out


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x)))


def phase_metrics(e, phase) -> dict:
    """RMS and MAX of ``|e|`` per phase.

    Phases with no samples map to ``None`` so reports can show a gap instead
    of a misleading zero.
    """
    e = np.asarray(e, dtype=float)
    phase = np.asarray(phase)
    if e.shape != phase.shape:
        raise ValueError("e and phase must have the same length")
    out = {}
    for ph in Phase:
        sel = e[phase == ph]
        out[ph.name] = None if sel.size == 0 else PhaseStats(rms(sel), float(np.max(np.abs(sel))), sel.size)
    return out


def phase_segments(phase, which=Phase.SP) -> list[tuple[int, int]]:
    """Half-open index ranges ``[i0, i1)`` of the contiguous runs of ``which``."""
    mask = np.asarray(phase) == which
    if not mask.any():
        return []
    edges = np.diff(mask.astype(np.int8))
    starts = list(np.nonzero(edges == 1)[0] + 1)
    stops = list(np.nonzero(edges == -1)[0] + 1)
    if mask[0]:
        starts.insert(0, 0)
    if mask[-1]:
        stops.append(mask.size)
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


def held_fraction(err: np.ndarray, band: float) -> float:
    """Share of a segment after the last sample with ``|e| > band``."""
    out = np.nonzero(np.abs(err) > band)[0]
    if out.size == 0:
        return 1.0
    return (err.size - out[-1] - 1) / err.size


def band_sweep(e, phase, bands) -> np.ndarray:
    """Worst-segment ``t_p(b) / t_s`` for every band ``b``."""
    e = np.asarray(e, dtype=float)
    segs = phase_segments(phase)
    if not segs:
        return np.full(len(bands), np.nan)
    return np.array([min(held_fraction(e[a:b], band) for a, b in segs) for band in bands])


def default_band_grid(e, phase, points: int = 400) -> np.ndarray:
    """Log-spaced bands spanning the scanning-phase error, ending at its max."""
    e = np.asarray(e, dtype=float)
    sp = np.abs(e[np.asarray(phase) == Phase.SP])
    if sp.size == 0:
        return np.empty(0)
    top = float(sp.max())
    if top == 0.0:
        return np.array([0.0])
    positive = sp[sp > 0]
    low = max(float(positive.min()), top * 1e-6)
    return np.unique(np.append(np.geomspace(low, top, points), top))


def valid_scan_metrics(e, phase, ratio_target: float = 0.95,
                       band_grid: Sequence[float] | None = None) -> tuple[float | None, float | None]:
    """Valid scanning error ``e_s`` and ``t_p / t_s``.

    With several scanning segments each band is judged by its worst segment.
    If no band on the grid reaches ``ratio_target`` the largest scanning
    error is returned as ``e_s`` together with the best ratio seen. Returns
    ``(None, None)`` when the trace has no scanning phase.
    """
    if not 0 < ratio_target <= 1:
        raise ValueError("ratio_target must lie in (0, 1]")
    e = np.asarray(e, dtype=float)
    grid = default_band_grid(e, phase) if band_grid is None else np.sort(np.asarray(band_grid, float))
    if grid.size == 0 or not phase_segments(phase):
        return None, None
    if np.any(grid < 0):
        raise ValueError("bands must be non-negative")
    ratios = band_sweep(e, phase, grid)
    ok = np.nonzero(ratios >= ratio_target)[0]
    if ok.size:
        i = int(ok[0])
        return float(grid[i]), float(ratios[i])
    sp = np.abs(e[np.asarray(phase) == Phase.SP])
    return float(sp.max()), float(ratios.max())


def report(record, ratio_target: float = 0.95, band_grid=None) -> MetricsReport:
    e_s, ratio = valid_scan_metrics(record.e, record.phase, ratio_target, band_grid)
    return MetricsReport(label=record.label, phases=phase_metrics(record.e, record.phase),
                         e_s=e_s, tp_over_ts=ratio, aborted=record.aborted,
                         meta=dict(record.meta))


def format_value(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return GAP
    if isinstance(x, float):
        return f"{x:.4e}"
    return str(x)


def comparison_table(reports: Iterable[MetricsReport]) -> tuple[str, str]:
    """Return ``(csv_text, aligned_text)`` with a fixed column order.

    Missing values (an absent phase, no scanning segment, an aborted run)
    are written as ``-`` in both forms.
    """
    rows = [[format_value(r.row()[c]) for c in TABLE_COLUMNS] for r in reports]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    w.writerows(rows)
    widths = [max(len(c), *(len(row[i]) for row in rows)) if rows else len(c)
              for i, c in enumerate(TABLE_COLUMNS)]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(TABLE_COLUMNS, widths))]
    lines += ["  ".join(v.ljust(wd) for v, wd in zip(row, widths)) for row in rows]
    return buf.getvalue(), "\n".join(line.rstrip() for line in lines) + "\n"


# ---------------------------------------------------------------- study metrics

def acceleration_windows(r_ddot, high_fraction: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Masks of the high-``|r''|`` samples and of the zero-``r''`` samples.

    A sample is "high" when ``|r''|`` reaches ``high_fraction`` of its peak.
    """
    a = np.abs(np.asarray(r_ddot, dtype=float))
    peak = a.max() if a.size else 0.0
    if peak == 0.0:
        return np.zeros(a.shape, bool), np.ones(a.shape, bool)
    return a >= high_fraction * peak, a == 0.0


def windowed_max(e, mask) -> float | None:
    sel = np.abs(np.asarray(e, dtype=float)[mask])
    return float(sel.max()) if sel.size else None


def envelope_correlation(e, r_ddot, width: int = 101) -> float:
    """Pearson correlation of the moving-max envelopes of ``|e|`` and ``|r''|``."""
    def env(x):
        x = np.abs(np.asarray(x, dtype=float))
        pad = np.pad(x, (width // 2, width // 2), mode="edge")
        view = np.lib.stride_tricks.sliding_window_view(pad, width)
        return view.max(axis=1)
    a, b = env(e), env(r_ddot)
    if a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def post_event_window(record, trigger_position: float) -> tuple[int, int] | None:
    """Samples from the first crossing of ``trigger_position`` to the end of
    the scanning segment containing it. ``None`` if the stage never gets there.
    """
    p = np.asarray(record.p)
    side = np.sign(p[0] - trigger_position) or 1.0
    hit = np.nonzero((p - trigger_position) * side <= 0)[0]
    if hit.size == 0:
        return None
    k = int(hit[0])
    for a, b in phase_segments(record.phase):
        if a <= k < b:
            return k, b
    return k, len(p)


def decay_time(t, e, start: int, stop: int, fraction: float = 0.1) -> float:
    """Time from ``t[start]`` until ``|e|`` first falls to ``fraction`` of the
    window's peak after that peak. ``inf`` if it never does inside the window.
    """
    w = np.abs(np.asarray(e, dtype=float)[start:stop])
    if w.size == 0:
        return math.nan
    ip = int(np.argmax(w))
    below = np.nonzero(w[ip:] <= fraction * w[ip])[0]
    if below.size == 0:
        return math.inf
    return float(t[start + ip + below[0]] - t[start])
