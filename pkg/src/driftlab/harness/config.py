"""JSON experiment configurations with strict schemas.

Unknown keys are rejected so that sweep typos fail fast. Each experiment id
maps to its own dataclass; `load_config` dispatches on the "experiment"
field.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "ConfigError",
    "Exp1Config",
    "Exp2Config",
    "Exp3Config",
    "Exp4Config",
    "load_config",
    "config_from_dict",
]


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configurations."""


def _check_horizons(horizons: list[int]) -> None:
    if not horizons:
        raise ConfigError("horizons must be nonempty")
    if any(t <= 0 for t in horizons):
        raise ConfigError("horizons must be positive")
    if sorted(horizons) != list(horizons):
        raise ConfigError("horizons must be sorted ascending")


def _check_seeds(seeds: list[int]) -> None:
    if not seeds:
        raise ConfigError("at least one seed is required")


@dataclass(frozen=True)
class Exp1Config:
    """Stationary-vs-drifting linear-Gaussian scaling experiment."""

    experiment: str = "exp1"
    dimension: int = 2
    horizons: list[int] = field(default_factory=lambda: [400, 800, 1600, 3200, 6400])
    seeds: list[int] = field(default_factory=lambda: list(range(48)))
    sigma_scale: float = 1.0
    drift_rate: float = 0.05
    out_dir: str = "out/exp1"

    def validate(self) -> None:
        _check_horizons(self.horizons)
        _check_seeds(self.seeds)
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")
        if self.sigma_scale <= 0:
            raise ConfigError("sigma_scale must be positive")
        if self.drift_rate < 0:
            raise ConfigError("drift_rate must be nonnegative")


@dataclass(frozen=True)
class Exp2Config:
    """Fixed-horizon amplitude/gain sweep for the budget collapse."""

    experiment: str = "exp2"
    dimension: int = 2
    horizons: list[int] = field(default_factory=lambda: [800])
    seeds: list[int] = field(default_factory=lambda: list(range(24)))
    sigma_scale: float = 1.0
    exo_amplitudes: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3])
    feedback_gains: list[float] = field(default_factory=lambda: [0.0, 0.03, 0.06, 0.1])
    out_dir: str = "out/exp2"

    def validate(self) -> None:
        _check_horizons(self.horizons)
        if len(self.horizons) != 1:
            raise ConfigError("exp2 runs at a single fixed horizon")
        _check_seeds(self.seeds)
        if any(a < 0 for a in self.exo_amplitudes + self.feedback_gains):
            raise ConfigError("amplitudes and gains must be nonnegative")
        if len(self.exo_amplitudes) < 2 or len(self.feedback_gains) < 2:
            raise ConfigError("sweep grid needs at least two levels per axis")


@dataclass(frozen=True)
class Exp3Config:
    """Matched-decrease Euclidean vs natural gradient comparison."""

    experiment: str = "exp3"
    dimension: int = 8
    condition_number: float = 10.0
    rho: float = 0.81
    j_target_ratio: float = 1e-4
    n_init: int = 100
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str = "out/exp3"

    def validate(self) -> None:
        _check_seeds(self.seeds)
        if self.dimension < 2:
            raise ConfigError("dimension must be at least 2")
        if self.condition_number < 1:
            raise ConfigError("condition_number must be >= 1")
        if not (0 < self.rho < 1) or not (0 < self.j_target_ratio < 1):
            raise ConfigError("rho and j_target_ratio must lie in (0, 1)")
        if self.n_init < 1:
            raise ConfigError("n_init must be positive")


@dataclass(frozen=True)
class Exp4Config:
    """Nonlinear teacher-learner speed-limit validation."""

    experiment: str = "exp4"
    input_dim: int = 8
    feature_dim: int = 32
    hidden_dim: int = 32
    horizons: list[int] = field(default_factory=lambda: [800, 1600, 3200])
    held_out_horizon: int = 3200
    seeds: list[int] = field(default_factory=lambda: list(range(16)))
    # Per-step Fisher drift rates; the realized run budget is rate * T.
    exo_rates: list[float] = field(default_factory=lambda: [0.0, 0.002, 0.004])
    feedback_gains: list[float] = field(default_factory=lambda: [0.0, 0.015, 0.03])
    noise_sd: float = 0.5
    learning_rate: float = 0.01
    teacher_scale: float = 5.0
    burn_in_fraction: float = 0.25
    fisher_probe_size: int = 64
    disagreement_probe_size: int = 32
    # Number of population-risk re-evaluations per run (evenly spaced), so the
    # staleness of the piecewise-constant estimate is uniform across horizons.
    pop_refresh_count: int = 128
    pop_refresh_n: int = 2000
    out_dir: str = "out/exp4"

    def validate(self) -> None:
        _check_horizons(self.horizons)
        _check_seeds(self.seeds)
        if self.held_out_horizon not in self.horizons:
            raise ConfigError("held_out_horizon must be one of horizons")
        if self.held_out_horizon != self.horizons[-1]:
            raise ConfigError("held_out_horizon must be the largest horizon")
        if any(v < 0 for v in self.exo_rates + self.feedback_gains):
            raise ConfigError("drift rates and gains must be nonnegative")
        if self.noise_sd <= 0 or self.learning_rate <= 0:
            raise ConfigError("noise_sd and learning_rate must be positive")
        if self.teacher_scale <= 0:
            raise ConfigError("teacher_scale must be positive")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigError("burn_in_fraction must be in [0, 1)")
        if min(self.input_dim, self.feature_dim, self.hidden_dim) < 1:
            raise ConfigError("model dimensions must be positive")
        if self.fisher_probe_size < 2 or self.disagreement_probe_size < 1:
            raise ConfigError("probe sizes too small")
        if self.pop_refresh_count < 1 or self.pop_refresh_n < 1:
            raise ConfigError("population refresh settings must be positive")


_CONFIG_TYPES = {
    "exp1": Exp1Config,
    "exp2": Exp2Config,
    "exp3": Exp3Config,
    "exp4": Exp4Config,
}


def config_from_dict(data: dict):
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    exp = data.get("experiment")
    if exp not in _CONFIG_TYPES:
        raise ConfigError(f"unknown or missing experiment id: {exp!r}")
    cls = _CONFIG_TYPES[exp]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = cls(**data)
    cfg.validate()
    return cfg


def load_config(path: str | Path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    return config_from_dict(data)
