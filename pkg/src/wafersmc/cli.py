"""Command-line entry point: ``wafersmc <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys

import numpy as np

from . import __version__, kernels, metrics, presets, studies
from .config import (ConfigError, ExperimentConfig, apply_overrides, effective_yaml,
                     load_config, parse_config)
from .controllers import (ControllerError, GainSchedule, PhiForm, compute_gains,
                          error_bound_epsilon)
from .simulator import SimConfig, SweepFailure, atomic_write, sweep

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG = 0, 1, 2


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _write_json(path, data) -> None:
    atomic_write(path, json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _stable_meta(meta: dict) -> dict:
    """Run metadata without wall-clock timing, so reruns write identical files."""
    return {k: v for k, v in meta.items() if k != "wall_time"}


def _out_dir(args, exp: ExperimentConfig) -> str | None:
    out = args.out or exp.out
    if out:
        os.makedirs(out, exist_ok=True)
    return out


def _experiment(args, kind: str) -> ExperimentConfig:
    exp = load_config(args.config, kind) if args.config else parse_config({}, kind)
    if exp.kind != kind and not (kind in ("case1", "case2") and exp.kind in ("case1", "case2")):
        raise ConfigError(f"config is for {exp.kind!r}, not {kind!r}")
    if getattr(args, "seed", None) is not None:
        exp.seed = args.seed
    if getattr(args, "controllers", None):
        exp.controllers = [c.strip() for c in args.controllers.split(",") if c.strip()]
    return exp


def _report_checks(result: studies.StudyResult) -> None:
    for name, ok in result.checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    for name, why in result.failures.items():
        print(f"[RUN FAILED] {name}: {why}")


def _finish(args, result: studies.StudyResult) -> int:
    _report_checks(result)
    if args.assert_checks and not result.passed:
        return EXIT_ASSERT
    return EXIT_OK


# ------------------------------------------------------------------ commands

def cmd_surface_compare(args) -> int:
    exp = _experiment(args, "surface-compare")
    result = studies.surface_compare(**exp.surface)
    out = _out_dir(args, exp)
    s = result.summary
    print(f"{'surface':8s}{'settling [s]':>14s}{'overshoot':>14s}{'|e-e_eq| at probe':>20s}")
    for n in result.records:
        print(f"{n:8s}{s['settling_time'][n]:14.4g}{s['overshoot'][n]:14.4g}"
              f"{s['distance_at_probe'][n]:20.4g}")
    if out:
        for n, resp in result.records.items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(("t", "e"))
            w.writerows((repr(float(t)), repr(float(e))) for t, e in zip(resp.t, resp.e))
            atomic_write(os.path.join(out, f"surface_{n}.csv"), buf.getvalue())
        _write_json(os.path.join(out, "summary.json"), {"summary": s, "checks": result.checks})
        atomic_write(os.path.join(out, "effective_config.yaml"), effective_yaml(exp))
    return _finish(args, result)


def _closed_loop(args, kind: str, preset: str, runner) -> int:
    exp = _experiment(args, kind)
    configs = apply_overrides(presets.preset_configs(preset), exp)
    result = runner(configs)
    out = _out_dir(args, exp)
    reports = [metrics.report(rec) for rec in result.records.values()]
    csv_text, table = metrics.comparison_table(reports)
    print(table, end="")
    if out:
        for name, rec in result.records.items():
            rec.to_csv(os.path.join(out, f"{name}.csv"))
        atomic_write(os.path.join(out, "comparison.csv"), csv_text)
        atomic_write(os.path.join(out, "comparison.txt"), table)
        summary = {k: v for k, v in result.summary.items() if k not in ("table", "table_csv")}
        _write_json(os.path.join(out, "summary.json"), {
            "summary": summary, "checks": result.checks, "failures": result.failures,
            "meta": {n: _stable_meta(r.meta) for n, r in result.records.items()}})
        atomic_write(os.path.join(out, "effective_config.yaml"), effective_yaml(exp, configs))
    return _finish(args, result)


def cmd_accel_study(args) -> int:
    return _closed_loop(args, "accel-study", "accel-study", studies.accel_study)


def cmd_scan_study(args) -> int:
    return _closed_loop(args, "scan-study", "scan-study", studies.scan_study)


def cmd_case(args) -> int:
    kind = f"case{args.case}"
    return _closed_loop(args, kind, kind, lambda cfgs: studies.case_study(args.case, cfgs))


def cmd_theorem(args) -> int:
    def runner(cfgs):
        (cfg,) = cfgs.values()
        return studies.theorem_study(cfg)
    return _closed_loop(args, "theorem", "theorem", runner)


def cmd_sweep(args) -> int:
    exp = _experiment(args, "sweep")
    spec = exp.sweep
    preset = spec.get("preset", "scan-study")
    base_set = presets.preset_configs(preset)
    base_set = apply_overrides(base_set, ExperimentConfig(
        kind=preset, seed=exp.seed, sim=exp.sim, plant=exp.plant, disturbance=exp.disturbance,
        noise=exp.noise, trajectory=exp.trajectory))
    base_name = spec.get("controller", "PFVSTA")
    if base_name not in base_set:
        raise ConfigError(f"preset {preset!r} has no controller {base_name!r}")
    base: SimConfig = base_set[base_name]
    axis = dict(spec.get("axis") or {})
    if "controller" in axis:
        names = axis["controller"]
        unknown = [n for n in names if n not in base_set]
        if unknown:
            raise ConfigError(f"unknown controller(s) {unknown} in sweep axis")
        axis["controller"] = [base_set[n].controller for n in names]
        labels = list(names)
    else:
        labels = None
    results = sweep(base, axis, workers=int(spec.get("workers", 1)))
    out = _out_dir(args, exp)
    rows = []
    keys = list(axis)
    combos = list(itertools.product(*(range(len(axis[k])) for k in keys)))
    failed = 0
    for i, (res, combo) in enumerate(zip(results, combos)):
        params = {}
        for k, j in zip(keys, combo):
            params[k] = labels[j] if k == "controller" and labels else axis[k][j]
        if isinstance(res, SweepFailure):
            failed += 1
            rows.append({**params, "run": i, "status": res.error})
            continue
        rep = metrics.report(res)
        rows.append({**params, "run": i, "status": "aborted" if res.aborted else "ok",
                     "SP_rms": rep.rms("SP"), "max_abs_e": float(np.max(np.abs(res.e)))})
        if out:
            res.to_csv(os.path.join(out, f"run_{i:03d}.csv"))
    cols = keys + ["run", "status", "SP_rms", "max_abs_e"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([row[c] if isinstance(row.get(c), str) else metrics.format_value(row.get(c))
                    for c in cols])
    print(buf.getvalue(), end="")
    if out:
        atomic_write(os.path.join(out, "sweep.csv"), buf.getvalue())
        atomic_write(os.path.join(out, "effective_config.yaml"), effective_yaml(exp, {"base": base}))
    if args.assert_checks and failed:
        return EXIT_ASSERT
    return EXIT_OK


def cmd_gains(args) -> int:
    exp = _experiment(args, "gains")
    g = dict(exp.gains)
    for key in ("p1", "p2", "p4", "D1", "D2", "D3", "D4", "gamma", "h3"):
        val = getattr(args, key)
        if val is not None:
            g[key] = val
    v_dots = args.v_dot if args.v_dot else g.pop("v_dot", [0.0, 1.5, 10.0])
    g.pop("v_dot", None)
    if isinstance(v_dots, (int, float)):
        v_dots = [v_dots]
    form = PhiForm(args.form or g.pop("form", "alpha"))
    if args.table1:
        rows = [("CGSTA", "1500", "10", "-"), ("VGSTA", "0.1|v'| + 50", "0.1|v'| + 10", "38"),
                ("IFVSTA", "0.1|v'| + 50", "0.1|v'| + 10", "-"),
                ("PFVSTA", "0.1|v'| + 50", "0.1|v'| + 10", "-")]
        print(f"{'controller':12s}{'h1':>16s}{'h2':>16s}{'h3':>6s}")
        for r in rows:
            print(f"{r[0]:12s}{r[1]:>16s}{r[2]:>16s}{r[3]:>6s}")
        return EXIT_OK
    required = ("p1", "p2", "p4", "D1", "D2", "D3", "D4", "gamma")
    missing = [k for k in required if k not in g]
    if missing:
        raise ConfigError(f"gains needs {', '.join(missing)}")
    try:
        sched = GainSchedule.theorem(**{k: float(g[k]) for k in required}, form=form,
                                     h3=float(g.get("h3", 0.0)))
        table = [(float(vd), *compute_gains(sched, float(vd))) for vd in v_dots]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"delta1 = {sched.delta1():.6g}")
    print(f"{'v_dot':>10s}{'h1':>16s}{'h2':>16s}")
    for vd, h1, h2 in table:
        print(f"{vd:10.4g}{h1:16.8g}{h2:16.8g}")
    out = _out_dir(args, exp)
    if out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("v_dot", "h1", "h2"))
        w.writerows((repr(a), repr(b), repr(c)) for a, b, c in table)
        atomic_write(os.path.join(out, "gains.csv"), buf.getvalue())
    return EXIT_OK


def cmd_bound(args) -> int:
    exp = _experiment(args, "bound")
    b = {"k1": 8.0, "k2": 500.0, "a": 0.5, "kappa": 1.0, "gamma": 1.0, **exp.bound}
    for key in ("k1", "k2", "a", "kappa", "gamma"):
        val = getattr(args, key)
        if val is not None:
            b[key] = val
    try:
        eps = error_bound_epsilon(float(b["k1"]), float(b["k2"]), float(b["a"]),
                                  float(b["kappa"]), float(b["gamma"]))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"epsilon = {eps:.12g}")
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wafersmc", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, controllers=True):
        p.add_argument("--config", help="YAML experiment file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="noise seed")
        if controllers:
            p.add_argument("--controllers", help="comma-separated subset of the preset's controllers")
        p.add_argument("--assert", dest="assert_checks", action="store_true",
                       help="exit with status 1 if any check fails")

    p = sub.add_parser("surface-compare", help="error dynamics on LSS/ISS/FSS/PFSS with s held fixed")
    common(p, controllers=False)
    p.set_defaults(func=cmd_surface_compare)

    p = sub.add_parser("accel-study", help="controllers under acceleration pulses")
    common(p)
    p.set_defaults(func=cmd_accel_study)

    p = sub.add_parser("scan-study", help="scan with a step disturbance")
    common(p)
    p.set_defaults(func=cmd_scan_study)

    p = sub.add_parser("case", help="scanning case 1 (1.5 m/s^2) or 2 (10 m/s^2)")
    p.add_argument("case", type=int, choices=(1, 2))
    common(p)
    p.set_defaults(func=cmd_case)

    p = sub.add_parser("theorem", help="theorem-mode gains: containment and Lyapunov decrease")
    common(p, controllers=False)
    p.set_defaults(func=cmd_theorem)

    p = sub.add_parser("sweep", help="parameter sweep described by the config's 'sweep' section")
    common(p, controllers=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gains", help="variable gains from the stability theorem")
    common(p, controllers=False)
    for key in ("p1", "p2", "p4", "D1", "D2", "D3", "D4", "gamma", "h3"):
        p.add_argument(f"--{key}", type=float)
    p.add_argument("--v-dot", dest="v_dot", type=float, nargs="+")
    p.add_argument("--form", choices=[f.value for f in PhiForm])
    p.add_argument("--table1", action="store_true", help="print the reference affine gains of the acceleration study")
    p.set_defaults(func=cmd_gains)

    p = sub.add_parser("bound", help="steady tracking-error bound epsilon")
    common(p, controllers=False)
    for key in ("k1", "k2", "a", "kappa", "gamma"):
        p.add_argument(f"--{key}", type=float)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ControllerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
