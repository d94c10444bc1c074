"""Experiment configuration (YAML) and its translation into module configs."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, replace

import yaml

from .metrics import MetricsConfig
from .planner import MODES
from .sensor_sim import SensorModel


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerSettings:
    rho: float = 146000.0
    r: float = 0.017
    psi: float = 1.0
    tau: int = 100
    max_views: int = 200
    adjust_step: float = 30.0
    normal_k: int = 3
    projection_resolution_deg: float = 0.25


@dataclass(frozen=True)
class ExperimentConfig:
    scene: str
    scene_name: str = "scene"
    modes: tuple = MODES
    trials: int = 1
    seed_base: int = 0
    output_dir: str = "results"
    sensor: SensorModel = field(default_factory=lambda: SensorModel(69.4, 42.5, 848, 480, 0.01))
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seed_view: object = "random"  # "random" or {"position": [...], "orientation": [...]}
    base_dir: str = "."  # directory that relative scene paths resolve against

    def scene_path(self) -> str:
        if self.scene.startswith("builtin:") or os.path.isabs(self.scene):
            return self.scene
        return os.path.normpath(os.path.join(self.base_dir, self.scene))

    def validate(self) -> "ExperimentConfig":
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.modes:
            raise ConfigError("at least one mode is required")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}; choose from {list(MODES)}")
        p = self.scene_path()
        if not p.startswith("builtin:") and not os.path.isfile(p):
            raise ConfigError(f"scene file not found: {p}")
        if not self.planner.psi > self.planner.r > 0:
            raise ConfigError("planner needs psi > r > 0")
        if self.planner.rho <= 0 or self.planner.tau < 1 or self.planner.max_views < 1:
            raise ConfigError("planner needs rho > 0, tau >= 1, max_views >= 1")
        if self.seed_view != "random":
            sv = self.seed_view
            if not isinstance(sv, dict) or set(sv) != {"position", "orientation"}:
                raise ConfigError("seed_view must be 'random' or a mapping with position and orientation")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["modes"] = list(self.modes)
        if math.isinf(d["sensor"]["max_range"]):
            d["sensor"]["max_range"] = None
        return d

    def dump(self, path):
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)

    def with_overrides(self, trials=None, mode=None) -> "ExperimentConfig":
        cfg = self
        if trials is not None:
            cfg = replace(cfg, trials=int(trials))
        if mode is not None:
            cfg = replace(cfg, modes=(mode,))
        return cfg


def from_dict(data: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    data = dict(data)
    try:
        sensor = dict(data.pop("sensor", {}) or {})
        if sensor.get("max_range") is None:
            sensor["max_range"] = math.inf
        sensor = SensorModel(**{**asdict(SensorModel(69.4, 42.5, 848, 480, 0.01)), **sensor})
        planner = PlannerSettings(**(data.pop("planner", {}) or {}))
        metrics = MetricsConfig(**(data.pop("metrics", {}) or {}))
        modes = data.pop("modes", list(MODES))
        if isinstance(modes, str):
            modes = [modes]
        cfg = ExperimentConfig(sensor=sensor, planner=planner, metrics=metrics,
                               modes=tuple(modes), base_dir=base_dir, **data)
    except TypeError as exc:
        raise ConfigError(f"bad config key: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
