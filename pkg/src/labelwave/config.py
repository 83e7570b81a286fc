"""Experiment configuration: JSON schema, dataclass blocks, dotted overrides."""

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from labelwave.datasets import MixtureConfig
from labelwave.engine import TrainConfig
from labelwave.errors import ConfigError
from labelwave.noise import NoiseSpec
from labelwave.stopper import StopperConfig


def load_schema():
    return json.loads(resources.files("labelwave.configs").joinpath("schema.json").read_text("utf-8"))


def default_config_path():
    return resources.files("labelwave.configs").joinpath("default.json")


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "mixture"  # "mixture" | "csv"
    num_classes: int = 10
    dim: int = 20
    n_train: int = 5000
    n_test: int = 2000
    separation: float = 3.5
    cluster_std: float = 1.0
    seed: int = 0
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    label_column: str = "label"

    def mixture(self):
        return MixtureConfig(
            self.num_classes, self.dim, self.n_train, self.n_test,
            self.separation, self.cluster_std, self.seed,
        )


@dataclass(frozen=True)
class HarnessConfig:
    holdout_fraction: float = 0.0
    pc_subset: str = "all"  # "all" | "holdout" (matched-data protocol)
    kel_window: int = 8
    mode: str = "experiment"  # "experiment" runs to max_epochs, "live" honours the halt
    overrun: int = 0
    seeds: tuple = (1, 2, 3, 4, 5)
    sweep_rates: tuple = (0.2, 0.4, 0.6)
    sweep_fractions: tuple = (0.2,)
    correlation_ks: tuple = (1, 2, 3, 5, 10)
    output_dir: str = "runs"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    engine: TrainConfig = field(default_factory=TrainConfig)
    stopper: StopperConfig = field(default_factory=StopperConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def to_dict(self):
        d = asdict(self)
        for key in ("seeds", "sweep_rates", "sweep_fractions", "correlation_ks"):
            d["harness"][key] = list(d["harness"][key])
        return d

    def fingerprint(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

    def with_seed(self, seed):
        """Same experiment with data, noise and training all driven by ``seed``."""
        return replace(
            self,
            dataset=replace(self.dataset, seed=seed),
            noise=replace(self.noise, seed=seed),
            engine=replace(self.engine, seed=seed),
        )

    def with_noise_rate(self, rate):
        kind = self.noise.kind if self.noise.kind in ("symmetric", "instance-dependent") else "symmetric"
        return replace(self, noise=replace(self.noise, kind=kind, rate=rate))


def validate(raw, source="<config>"):
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{source}: {where}: {exc.message}") from None


def from_dict(raw, source="<config>"):
    validate(raw, source)
    blocks = {
        "dataset": DatasetConfig,
        "noise": NoiseSpec,
        "engine": TrainConfig,
        "stopper": StopperConfig,
        "harness": HarnessConfig,
    }
    kwargs = {}
    for name, cls in blocks.items():
        values = dict(raw.get(name, {}))
        if name == "harness":
            for key in ("seeds", "sweep_rates", "sweep_fractions", "correlation_ks"):
                if key in values:
                    values[key] = tuple(values[key])
        try:
            kwargs[name] = cls(**values)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None
    cfg = ExperimentConfig(**kwargs)
    if cfg.dataset.kind == "csv" and not (cfg.dataset.train_path and cfg.dataset.test_path):
        raise ConfigError(f"{source}: dataset.kind 'csv' needs train_path and test_path")
    return cfg


def parse_override(item):
    """``"engine.seed=2"`` -> (["engine", "seed"], 2); values parse as JSON when possible."""
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.split("."), parsed


def apply_overrides(raw, overrides):
    out = copy.deepcopy(raw)
    for item in overrides or ():
        path, value = parse_override(item)
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a section")
        node[path[-1]] = value
    return out


def read_raw(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return raw


def load_config(path=None, overrides=()):
    """Return (ExperimentConfig, effective raw dict) for a file plus overrides."""
    source = str(path) if path is not None else str(default_config_path())
    raw = read_raw(path) if path is not None else json.loads(default_config_path().read_text("utf-8"))
    raw = apply_overrides(raw, overrides)
    return from_dict(raw, source), raw
