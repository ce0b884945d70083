"""Experiment configuration: JSON schema, defaults, and validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

__all__ = [
    "ConfigError",
    "SamplingConfig",
    "PatchConfig",
    "CoilConfig",
    "BaselineConfig",
    "ExperimentConfig",
    "load_config",
]


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SamplingConfig:
    mode: str = "variable_density"  # variable_density | adaptive | uniform | full
    alpha: float = -1.0
    fraction: float = 0.1
    k: int | None = None
    replacement: bool = True
    beta: float = 0.1
    switch_frame: int | None = None
    domain: str = "rows"  # rows | entries

    def __post_init__(self):
        if self.mode not in ("variable_density", "adaptive", "uniform", "full"):
            raise ConfigError(f"unknown sampling mode {self.mode!r}")
        if self.domain not in ("rows", "entries"):
            raise ConfigError(f"unknown sampling domain {self.domain!r}")
        if self.mode != "full" and not 0.0 < self.fraction <= 1.0:
            raise ConfigError("sampling fraction must be in (0, 1]")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError("uniform blend beta must be in [0, 1)")
        if self.k is not None and self.k < 1:
            raise ConfigError("sampling K must be positive")


@dataclass(frozen=True)
class PatchConfig:
    n1: int
    n2: int
    rho: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1 or self.rho < 1:
            raise ConfigError("patch extents and rank must be positive")


@dataclass(frozen=True)
class CoilConfig:
    count: int
    smoothness: float = 0.6

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("coil count must be positive")
        if self.smoothness <= 0:
            raise ConfigError("coil smoothness must be positive")


@dataclass(frozen=True)
class BaselineConfig:
    lam: float = 0.001
    max_iters: int = 100
    gap_tol: float = 0.01

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError("baseline lambda must be positive")
        if self.max_iters < 1:
            raise ConfigError("baseline max_iters must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; the seed is mandatory for reproducibility."""

    seed: int
    rank: int = 100
    lam: float = 2.0
    step_mode: str = "fixed"  # fixed | hessian
    mu: float = 0.01
    c_floor: float = 1e-3
    c_cap: float = 1e9
    epochs: int = 1
    reshuffle: bool = False
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    patch: PatchConfig | None = None
    coils: CoilConfig | None = None
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    noise_sigma: float = 0.0
    warm_start_frames: int = 5
    warm_epochs: int = 20
    init_scale: float = 1.0
    data_domain: str = "kspace"  # kspace | direct

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("a seed is mandatory")
        if self.rank < 1:
            raise ConfigError("rank must be positive")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")
        if self.step_mode not in ("fixed", "hessian"):
            raise ConfigError(f"unknown step mode {self.step_mode!r}")
        if self.mu <= 0:
            raise ConfigError("mu must be positive")
        if not 0 < self.c_floor <= self.c_cap:
            raise ConfigError("need 0 < c_floor <= c_cap")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise sigma must be nonnegative")
        if self.warm_start_frames < 0:
            raise ConfigError("warm start frame count must be nonnegative")
        if self.warm_epochs < 1:
            raise ConfigError("warm epochs must be at least 1")
        if self.data_domain not in ("kspace", "direct"):
            raise ConfigError(f"unknown data domain {self.data_domain!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, payload: dict, context: str):
    if not isinstance(payload, dict):
        raise ConfigError(f"{context} must be a JSON object")
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(payload) - fields
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    try:
        return cls(**payload)
    except TypeError as exc:
        raise ConfigError(f"bad {context}: {exc}") from exc


def load_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a JSON file path or a dict.

    ``overrides`` (e.g. a CLI ``--seed``) replace top-level keys after
    loading.  ``lambda`` is accepted as an alias for ``lam``.
    """
    if isinstance(source, dict):
        payload = dict(source)
    else:
        try:
            with open(source, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {source} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config root must be a JSON object")
    if overrides:
        payload.update({k: v for k, v in overrides.items() if v is not None})
    if "lambda" in payload:
        payload["lam"] = payload.pop("lambda")
    if "seed" not in payload:
        raise ConfigError("config must provide a seed (or pass --seed)")

    for key, cls in (
        ("sampling", SamplingConfig),
        ("patch", PatchConfig),
        ("coils", CoilConfig),
        ("baseline", BaselineConfig),
    ):
        if key in payload and payload[key] is not None:
            payload[key] = _build(cls, payload[key], key)
    return _build(ExperimentConfig, payload, "config")
