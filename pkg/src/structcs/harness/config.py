"""Experiment configuration: JSON document, validation and hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from ..ensembles import Distribution, Kind
from ..recovery import SOLVERS

SCHEMA = "structcs.experiment/1"
EXPERIMENTS = ("rip_table", "phase_transition", "chaos_profile", "decoupling", "jl_sweep")
OMEGA_MODES = ("random", "first", "strided")
# fields that change where or how fast results are produced, not what they are
_UNHASHED = ("out_dir", "threads")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    ensemble: str = Kind.PARTIAL_CIRCULANT.value
    n: int = 64
    m_grid: list[int] = field(default_factory=lambda: [16])
    s_grid: list[int] = field(default_factory=lambda: [2])
    trials: int = 10
    master_seed: int = 0
    solvers: list[str] = field(default_factory=lambda: ["omp"])
    distribution: str = Distribution.RADEMACHER.value
    omega: str = "random"
    rip_method: str = "exact"
    rip_budget: int = 10**6
    mc_trials: int = 1000
    points: int = 32
    family_size: int = 8
    draws: int = 100
    solver_max_iters: int = 1000
    out_dir: str = "results"
    threads: int = 1
    schema: str = SCHEMA

    def validate(self) -> "ExperimentConfig":
        if self.schema != SCHEMA:
            raise ConfigError(f"unsupported schema {self.schema!r} (expected {SCHEMA!r})")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        try:
            Kind(self.ensemble)
            Distribution(self.distribution)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.experiment in ("rip_table", "phase_transition", "chaos_profile", "jl_sweep") and not self.m_grid:
            raise ConfigError("m_grid must be nonempty")
        if self.experiment in ("rip_table", "phase_transition", "chaos_profile") and not self.s_grid:
            raise ConfigError("s_grid must be nonempty")
        if any(int(v) < 1 for v in list(self.m_grid) + list(self.s_grid)):
            raise ConfigError("grid entries must be positive integers")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ConfigError(f"unknown solver(s) {unknown}; choose from {sorted(SOLVERS)}")
        if self.experiment == "phase_transition" and not self.solvers:
            raise ConfigError("phase_transition needs at least one solver")
        if self.omega not in OMEGA_MODES:
            raise ConfigError(f"omega must be one of {OMEGA_MODES}")
        if self.rip_method not in ("exact", "monte_carlo"):
            raise ConfigError("rip_method must be 'exact' or 'monte_carlo'")
        if (self.experiment in ("rip_table", "phase_transition", "chaos_profile")
                and self.ensemble == Kind.PARTIAL_CIRCULANT.value and any(m > self.n for m in self.m_grid)):
            raise ConfigError("partial circulant needs m <= n")
        return self

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment' field")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(doc)


def merge(base: dict[str, Any] | None, overrides: dict[str, Any]) -> dict[str, Any]:
    """Flags over file over defaults: drop ``None`` overrides, keep the rest."""
    out = dict(base or {})
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out
