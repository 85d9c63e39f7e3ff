"""YAML experiment files.

A file names the experiment ``kind`` and may override any field of the
preset scenario. Unknown keys are rejected at every level so a typo fails
loudly instead of silently running the default.

Example::

    kind: case1
    seed: 3
    controllers: [LVGSTA, PFVSTA]
    noise: {power: 4.0e-18}
    disturbance: {ripple_amplitude: 0.05}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import yaml

from .plant import DisturbanceSpec, NoiseSpec, PlantParams
from .simulator import SimConfig, _jsonable
from .trajectory import PulseTrain, ScanProfileSpec

KINDS = ("surface-compare", "accel-study", "scan-study", "case1", "case2", "theorem",
         "sweep", "gains", "bound")
SURFACE_KEYS = ("k1", "k2", "xi", "a", "s_value", "duration", "step", "probe_time", "band")
GAINS_KEYS = ("p1", "p2", "p4", "D1", "D2", "D3", "D4", "gamma", "v_dot", "form", "h3")
BOUND_KEYS = ("k1", "k2", "a", "kappa", "gamma")
SWEEP_KEYS = ("preset", "controller", "axis", "workers")
SIM_KEYS = ("control_rate", "plant_substeps", "accel_source", "accel_filter_hz",
            "e_dot_filter_hz", "memory_window", "v_limit", "initial_position_offset",
            "initial_velocity_offset")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    seed: int | None = None
    out: str | None = None
    controllers: list[str] | None = None
    sim: dict = field(default_factory=dict)
    plant: dict = field(default_factory=dict)
    disturbance: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    trajectory: dict = field(default_factory=dict)
    surface: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    bound: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v not in (None, {}, [])}


def _check_keys(section: str, data: Any, allowed) -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be a mapping")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(map(str, unknown))}")
    return dict(data)


def _field_names(cls) -> tuple[str, ...]:
    return tuple(f.name for f in dataclasses.fields(cls))


def parse_config(data: dict, kind: str | None = None) -> ExperimentConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping at the top level")
    top = _check_keys("config", data, [f.name for f in dataclasses.fields(ExperimentConfig)])
    kind = top.get("kind", kind)
    if kind is None:
        raise ConfigError("config needs a 'kind'")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    seed = top.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ConfigError("seed must be an integer")
    controllers = top.get("controllers")
    if controllers is not None:
        if isinstance(controllers, str):
            controllers = [c.strip() for c in controllers.split(",") if c.strip()]
        if not isinstance(controllers, list) or not all(isinstance(c, str) for c in controllers):
            raise ConfigError("controllers must be a list of names")
    traj_fields = set(_field_names(ScanProfileSpec)) | set(_field_names(PulseTrain))
    return ExperimentConfig(
        kind=kind, seed=seed, out=top.get("out"), controllers=controllers,
        sim=_check_keys("sim", top.get("sim"), SIM_KEYS),
        plant=_check_keys("plant", top.get("plant"), _field_names(PlantParams)),
        disturbance=_check_keys("disturbance", top.get("disturbance"), _field_names(DisturbanceSpec)),
        noise=_check_keys("noise", top.get("noise"), _field_names(NoiseSpec)),
        trajectory=_check_keys("trajectory", top.get("trajectory"), traj_fields),
        surface=_check_keys("surface", top.get("surface"), SURFACE_KEYS),
        gains=_check_keys("gains", top.get("gains"), GAINS_KEYS),
        bound=_check_keys("bound", top.get("bound"), BOUND_KEYS),
        sweep=_check_keys("sweep", top.get("sweep"), SWEEP_KEYS),
    )


def load_config(path, kind: str | None = None) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data or {}, kind)


def _replace(obj, overrides: dict, what: str):
    if not overrides:
        return obj
    try:
        return dataclasses.replace(obj, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what} override: {exc}") from exc


def apply_overrides(configs: dict[str, SimConfig], exp: ExperimentConfig) -> dict[str, SimConfig]:
    """Apply the file's overrides (and seed, controller filter) to a preset."""
    if exp.controllers:
        missing = [c for c in exp.controllers if c not in configs]
        if missing:
            raise ConfigError(f"unknown controller(s) {missing}; preset has {sorted(configs)}")
        configs = {c: configs[c] for c in exp.controllers}
    out = {}
    for name, cfg in configs.items():
        traj = cfg.trajectory
        if exp.trajectory:
            allowed = set(_field_names(type(traj)))
            bad = sorted(set(exp.trajectory) - allowed)
            if bad:
                raise ConfigError(f"trajectory keys {bad} do not apply to {type(traj).__name__}")
            traj = _replace(traj, exp.trajectory, "trajectory")
        noise = _replace(cfg.noise, exp.noise, "noise")
        if exp.seed is not None:
            noise = dataclasses.replace(noise, seed=exp.seed)
        new = dataclasses.replace(
            cfg, trajectory=traj, noise=noise,
            plant=_replace(cfg.plant, exp.plant, "plant"),
            disturbance=_replace(cfg.disturbance, exp.disturbance, "disturbance"))
        out[name] = _replace(new, exp.sim, "sim")
    return out


def effective_yaml(exp: ExperimentConfig, configs: dict[str, SimConfig] | None = None) -> str:
    """The request plus the fully resolved per-run configs, as YAML."""
    doc = {"request": exp.to_dict()}
    if configs:
        doc["runs"] = {name: _jsonable(cfg) for name, cfg in configs.items()}
    return yaml.safe_dump(doc, sort_keys=True, default_flow_style=False)
