"""Experiment configuration: a flat key-value JSON document.

Unknown keys are errors, not warnings; a silently ignored typo in a
hyperparameter name corrupts an experiment.  Validation collects every
violation before raising so a bad file is fixed in one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .bases import DirichletBase, GaussianBase, VmfBase
from .errors import ConfigError
from .flows import FlowModel, build_flow_model
from .training import TrainConfig

__all__ = ["ExperimentConfig", "load_experiment_config", "south_pole"]

SCHEMA_VERSION = 1


def south_pole(dim: int) -> np.ndarray:
    """The mean direction used for vMF models: the image of z = 0 under
    the stereographic map."""
    mu = np.zeros(dim + 1)
    mu[-1] = -1.0
    return mu


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; see README for the key reference."""

    dataset: str
    base: str
    output_dir: str
    epochs: int
    schema_version: int = SCHEMA_VERSION
    levels: int = 2
    steps: int = 16
    coupling_width: int = 64
    vmf_kappa_mult: float | None = None
    dirichlet_alpha: float | None = None
    learning_rate: float = 1e-3
    clip_norm: float = 50.0
    warmup_epochs: int = 10
    batch_size: int = 128
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.schema_version != SCHEMA_VERSION:
            problems.append(f"schema_version: expected {SCHEMA_VERSION}, "
                            f"got {self.schema_version!r}")
        if self.base not in ("gaussian", "vmf", "dirichlet"):
            problems.append(f"base: must be gaussian, vmf, or dirichlet, got {self.base!r}")
        if self.base != "vmf" and self.vmf_kappa_mult is not None:
            problems.append("vmf_kappa_mult: exactly one base spec (set only for base=vmf)")
        if self.base != "dirichlet" and self.dirichlet_alpha is not None:
            problems.append("dirichlet_alpha: exactly one base spec "
                            "(set only for base=dirichlet)")
        if self.vmf_kappa_mult is not None and not self.vmf_kappa_mult > 0:
            problems.append("vmf_kappa_mult: must be positive")
        if self.dirichlet_alpha is not None and not self.dirichlet_alpha > 0:
            problems.append("dirichlet_alpha: must be positive")
        for name in ("levels", "steps", "coupling_width", "batch_size"):
            if getattr(self, name) < 1:
                problems.append(f"{name}: must be >= 1")
        if self.epochs < 0:
            problems.append("epochs: must be >= 0")
        if self.warmup_epochs < 0:
            problems.append("warmup_epochs: must be >= 0")
        if self.epochs > 0 and self.warmup_epochs > self.epochs:
            problems.append("warmup_epochs: must not exceed epochs")
        if not self.learning_rate > 0:
            problems.append("learning_rate: must be positive")
        if not self.clip_norm > 0:
            problems.append("clip_norm: must be positive")
        if not self.dataset:
            problems.append("dataset: must be set")
        if not self.output_dir:
            problems.append("output_dir: must be set")
        if problems:
            raise ConfigError(problems)

    def kappa(self, dim: int) -> float:
        mult = 1.0 if self.vmf_kappa_mult is None else self.vmf_kappa_mult
        return mult * dim

    def alpha(self) -> float:
        return 2.0 if self.dirichlet_alpha is None else self.dirichlet_alpha

    def build_base(self, dim: int):
        if self.base == "gaussian":
            return GaussianBase(dim)
        if self.base == "vmf":
            return VmfBase(dim, mu=south_pole(dim), kappa=self.kappa(dim))
        return DirichletBase(dim, alpha=np.full(dim + 1, self.alpha()))

    def build_model(self, dim: int) -> FlowModel:
        return build_flow_model(dim, self.build_base(dim), levels=self.levels,
                                steps=self.steps, width=self.coupling_width,
                                seed=self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate,
                           clip_norm=self.clip_norm, warmup_epochs=self.warmup_epochs,
                           batch_size=self.batch_size, seed=self.seed)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                out[f.name] = value
        return out


def load_experiment_config(path) -> ExperimentConfig:
    """Parse and validate a config file, reporting every problem at once."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a JSON object"])
    known = {f.name for f in fields(ExperimentConfig)}
    problems = [f"unknown key {key!r}" for key in sorted(set(raw) - known)]
    missing = [name for name in ("dataset", "base", "output_dir", "epochs")
               if name not in raw]
    problems += [f"missing required key {name!r}" for name in missing]
    if problems:
        raise ConfigError(problems)
    cfg = ExperimentConfig(**raw)
    cfg.validate()
    return cfg
