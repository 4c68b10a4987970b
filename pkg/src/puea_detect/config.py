"""Experiment configuration: defaults, TOML loading, validation and hashing.

A config file is flat TOML, one key per :class:`ExperimentConfig` field::

    master_seed = 7
    attack_mode = "jamming"
    m_values = [100]
    snr_grid_db = [-5, 0, 5, 10, 15]
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .classifier import TrainConfig
from .signal_synth import MODULATIONS, Hypothesis, WaveformSpec

ATTACK_CLASSES = {
    "puea": (Hypothesis.H0_HOLE, Hypothesis.H1_PU, Hypothesis.H2_PUE),
    "jamming": (Hypothesis.H0_HOLE, Hypothesis.H1_PU, Hypothesis.H3_JAMMER),
}

# fields that do not influence any computed number
_NON_SEMANTIC = {"output_dir", "workers", "csv_export"}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class ExperimentConfig:
    modulation: str = "QAM"
    order: int = 4
    oversampling: int = 10
    rolloff: float = 0.2
    span: int = 50
    signal_length: int = 100
    carrier_offset: float = 0.0
    tap_count: int = 7
    rho: float = 0.9
    m_values: list = field(default_factory=lambda: [30, 50, 70, 100])
    k: int = 400
    train_per_class: int = 4000
    test_per_class: int = 1000
    snr_grid_db: list = field(default_factory=lambda: [-5.0, 0.0, 5.0, 10.0, 15.0])
    hidden_dim: int = 64
    epochs: int = 300
    learning_rate: float = 0.01
    batch_size: int = 64
    momentum: float = 0.9
    heldout_fraction: float = 0.1
    train_ed: bool = True
    master_seed: int = 0
    attack_mode: str = "puea"
    output_dir: str = "runs/default"
    workers: int = 1
    csv_export: bool = True

    @property
    def waveform(self) -> WaveformSpec:
        return WaveformSpec(self.modulation, self.order, self.oversampling, self.rolloff, self.span,
                            self.signal_length, self.carrier_offset)

    @property
    def classes(self) -> tuple:
        return ATTACK_CLASSES[self.attack_mode]

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.learning_rate, self.batch_size, self.momentum,
                           self.heldout_fraction, self.master_seed)

    def problems(self) -> list[str]:
        out = []
        if self.modulation not in MODULATIONS:
            out.append(f"modulation must be one of {MODULATIONS}")
        if self.order < 2 or self.order & (self.order - 1):
            out.append("order must be a power of 2 >= 2")
        if self.oversampling < 1:
            out.append("oversampling must be >= 1")
        if not 0 <= self.rolloff <= 1:
            out.append("rolloff must lie in [0, 1]")
        if self.span < 1:
            out.append("span must be >= 1")
        if self.signal_length < 2:
            out.append("signal_length must be >= 2")
        if self.tap_count < 1:
            out.append("tap_count must be >= 1")
        if not 0 <= self.rho <= 1:
            out.append("rho must lie in [0, 1]")
        if not self.m_values:
            out.append("m_values must not be empty")
        for m in self.m_values:
            if not 2 <= m <= self.signal_length:
                out.append(f"M={m} must satisfy 2 <= M <= signal_length={self.signal_length}")
            if self.k <= m:
                out.append(f"k={self.k} must exceed M={m}")
        if self.train_per_class < 1 or self.test_per_class < 1:
            out.append("train_per_class and test_per_class must be >= 1")
        if not self.snr_grid_db:
            out.append("snr_grid_db must not be empty")
        if len(set(self.snr_grid_db)) != len(self.snr_grid_db):
            out.append("snr_grid_db entries must be distinct")
        if self.hidden_dim < 1 or self.epochs < 1 or self.batch_size < 1:
            out.append("hidden_dim, epochs and batch_size must be >= 1")
        if self.learning_rate < 0 or not 0 <= self.momentum < 1:
            out.append("learning_rate must be >= 0 and momentum in [0, 1)")
        if not 0 <= self.heldout_fraction < 1:
            out.append("heldout_fraction must lie in [0, 1)")
        if self.attack_mode not in ATTACK_CLASSES:
            out.append(f"attack_mode must be one of {sorted(ATTACK_CLASSES)}")
        if self.workers < 1:
            out.append("workers must be >= 1")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def semantic_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in _NON_SEMANTIC:
            d.pop(key)
        d["m_values"] = [int(m) for m in d["m_values"]]
        d["snr_grid_db"] = [float(s) for s in d["snr_grid_db"]]
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"config_hash": self.config_hash(), "master_seed": self.master_seed,
                "puea_detect_version": __version__}

    def to_toml(self) -> str:
        lines = []
        for key, value in dataclasses.asdict(self).items():
            lines.append(f"{key} = {json.dumps(value)}")
        return "\n".join(lines) + "\n"


FIELD_TYPES = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, value):
    default = getattr(ExperimentConfig(), name)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError(f"{name} must be a boolean")
        return value
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            value = [value]
        cast = int if name == "m_values" else float
        return [cast(v) for v in value]
    return type(default)(value)


def make_config(overrides: dict | None = None, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply ``overrides`` to ``base`` (or the defaults), collecting every problem before raising."""
    cfg = dataclasses.replace(base) if base is not None else ExperimentConfig()
    problems = []
    for key, value in (overrides or {}).items():
        if key not in FIELD_TYPES:
            problems.append(f"unknown key: {key}")
            continue
        try:
            setattr(cfg, key, _coerce(key, value))
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: {exc}")
    if problems:
        raise ConfigError(problems)
    problems = cfg.problems()
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    data.update(overrides or {})
    return make_config(data)
