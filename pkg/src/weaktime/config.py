"""JSON experiment configuration with aggregated validation.

All quantities are in atomic units unless ``physics`` overrides hbar and
the mass.  Example::

    {
      "name": "reference",
      "physics": {"hbar": 1.0, "mass": 0.5},
      "state": {"gamma": 0.001, "x_center": -100.0, "p_incident": 0.25},
      "barrier": {"height": 1.0, "half_width": 1.0},
      "x": 100.0,
      "grid": {"window": 12, "panels": 40, "nodes_per_panel": 50,
               "time_samples": 8192, "eps_tail": 1e-6, "delta_x": 0.5}
    }
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError, WeakTimeError
from .model import CoherentState, PhysicalParams, SquareBarrier
from .scenario import GridControls, Scenario

OUTPUT_ENV = "WEAKTIME_OUTPUT_DIR"
# keys that do not change any computed number
_NON_PHYSICAL = {"output_dir"}
_NON_PHYSICAL_GRID = {"workers"}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    scenario: Scenario
    x: float
    output_dir: str | None = None
    sweep_gammas: tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        s = self.scenario
        d = {
            "name": self.name,
            "physics": asdict(s.params),
            "state": asdict(s.state),
            "barrier": asdict(s.barrier),
            "x": self.x,
            "grid": asdict(s.controls),
        }
        if self.output_dir is not None:
            d["output_dir"] = self.output_dir
        if self.sweep_gammas:
            d["sweep_gammas"] = list(self.sweep_gammas)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def config_hash(self) -> str:
        d = self.to_dict()
        for k in _NON_PHYSICAL:
            d.pop(k, None)
        for k in _NON_PHYSICAL_GRID:
            d["grid"].pop(k, None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_gamma(self, gamma: float) -> "ExperimentConfig":
        state = replace(self.scenario.state, gamma=gamma)
        return replace(self, name=f"{self.name}_gamma{gamma:g}", scenario=replace(self.scenario, state=state))

    def free_particle(self) -> "ExperimentConfig":
        barrier = replace(self.scenario.barrier, height=0.0)
        return replace(self, name=f"{self.name}_free", scenario=replace(self.scenario, barrier=barrier))

    def resolve_output_dir(self, override: str | None = None) -> Path:
        return Path(override or os.environ.get(OUTPUT_ENV) or self.output_dir or "out")


def _section(raw, key, cls, problems, required=True):
    data = raw.get(key, {} if not required else None)
    if data is None:
        problems.append(f"missing section '{key}'")
        return None
    if not isinstance(data, dict):
        problems.append(f"section '{key}' must be an object")
        return None
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        problems.append(f"unknown keys in '{key}': {', '.join(unknown)}")
    kwargs = {k: v for k, v in data.items() if k in names}
    for k, v in kwargs.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            problems.append(f"{key}.{k} must be a number, got {v!r}")
            return None
        if isinstance(v, float) and not math.isfinite(v):
            problems.append(f"{key}.{k} must be finite")
            return None
    # 12 and 12.0 must hash alike
    types = {f.name: f.type for f in fields(cls)}
    kwargs = {k: float(v) if types[k] in (float, "float") else v for k, v in kwargs.items()}
    if cls is GridControls:
        probe = object.__new__(GridControls)
        for f in fields(GridControls):
            object.__setattr__(probe, f.name, kwargs.get(f.name, f.default))
        sub = probe.problems()
        if sub:
            problems.extend(f"grid: {p}" for p in sub)
            return None
    try:
        return cls(**kwargs)
    except (WeakTimeError, TypeError) as exc:
        problems.append(f"{key}: {exc}")
        return None


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate ``raw`` and build a config; every problem is reported at once."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    problems: list[str] = []
    known = {"name", "physics", "state", "barrier", "x", "grid", "output_dir", "sweep_gammas"}
    unknown = sorted(set(raw) - known)
    if unknown:
        problems.append(f"unknown top-level keys: {', '.join(unknown)}")
    name = raw.get("name", "experiment")
    if not isinstance(name, str) or not name:
        problems.append("name must be a non-empty string")
    params = _section(raw, "physics", PhysicalParams, problems, required=False)
    state = _section(raw, "state", CoherentState, problems)
    barrier = _section(raw, "barrier", SquareBarrier, problems, required=False)
    controls = _section(raw, "grid", GridControls, problems, required=False)
    x = raw.get("x")
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        problems.append(f"x must be a finite number, got {x!r}")
        x = None
    elif barrier is not None and controls is not None and not barrier.is_free:
        limit = barrier.half_width + controls.margin
        if abs(x) <= limit:
            problems.append(f"x={x} lies within the barrier margin |x| <= {limit:g}")
        elif abs(x) <= limit + controls.delta_x / 2:
            problems.append(f"x +- delta_x/2 enters the barrier margin |x| <= {limit:g}")
    gammas = raw.get("sweep_gammas", [])
    if not isinstance(gammas, list) or not all(
        isinstance(g, (int, float)) and not isinstance(g, bool) and g > 0 for g in gammas
    ):
        problems.append("sweep_gammas must be a list of positive numbers")
        gammas = []
    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        problems.append("output_dir must be a string")
    if problems:
        raise ConfigError(problems)
    scenario = Scenario(state, barrier, params, controls)
    return ExperimentConfig(name, scenario, float(x), out, tuple(float(g) for g in gammas))


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def reference_config(**grid) -> ExperimentConfig:
    """Tunnelling through a unit square barrier of width 2 at x = -x_i = 100."""
    return config_from_dict(
        {
            "name": "reference",
            "physics": {"hbar": 1.0, "mass": 0.5},
            "state": {"gamma": 0.001, "x_center": -100.0, "p_incident": 0.25},
            "barrier": {"height": 1.0, "half_width": 1.0},
            "x": 100.0,
            "grid": grid,
            "sweep_gammas": [0.001, 0.00025],
        }
    )
