"""Governance configuration: thresholds, bootstrap size, RNG seed, guards.

A config file is flat ``key=value`` text mirroring the field names
(blank lines and ``#`` comments ignored); CLI flags override file
values, which override defaults.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

_INT_FIELDS = {"bootstrap", "seed", "min_segment_count", "parallelism"}
_FLOAT_FIELDS = {"tau", "alpha", "clip_low", "clip_high", "auroc_negligible", "holdout_fraction"}


@dataclasses.dataclass(frozen=True)
class GovernanceConfig:
    """Pinned parameters for one diagnostic run.

    ``tau`` is the (negative, fractional) breach threshold applied to
    every gateway; ``clip_low``/``clip_high`` bound the covariate-shift
    weight; ``parallelism`` 0 means auto; ``holdout_fraction`` > 0
    evaluates the domain-classifier AUROC on a held-out split instead
    of the training rows.
    """

    tau: float = -0.20
    alpha: float = 0.05
    bootstrap: int = 1000
    seed: int = 0
    min_segment_count: int = 30
    clip_low: float = 0.01
    clip_high: float = 100.0
    auroc_negligible: float = 0.55
    parallelism: int = 0
    holdout_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not self.tau < 0:
            raise ConfigError(f"tau must be negative, got {self.tau}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.bootstrap < 1:
            raise ConfigError(f"bootstrap must be >= 1, got {self.bootstrap}")
        if self.min_segment_count < 1:
            raise ConfigError(f"min_segment_count must be >= 1, got {self.min_segment_count}")
        if not (0 < self.clip_low <= 1 <= self.clip_high):
            raise ConfigError(
                f"weight clip must satisfy 0 < low <= 1 <= high, got ({self.clip_low}, {self.clip_high})"
            )
        if not 0.5 <= self.auroc_negligible < 1:
            raise ConfigError(f"auroc_negligible must lie in [0.5, 1), got {self.auroc_negligible}")
        if self.parallelism < 0:
            raise ConfigError(f"parallelism must be >= 0, got {self.parallelism}")
        if not 0 <= self.holdout_fraction < 1:
            raise ConfigError(f"holdout_fraction must lie in [0, 1), got {self.holdout_fraction}")

    @property
    def weight_clip(self) -> tuple[float, float]:
        return (self.clip_low, self.clip_high)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse flat key=value config text into typed override values."""
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _INT_FIELDS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be an integer, got {value!r}") from None
        elif key in _FLOAT_FIELDS:
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be a number, got {value!r}") from None
        else:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
    return values


def load_config_file(path: str | Path) -> dict[str, Any]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def resolve_config(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> GovernanceConfig:
    """Merge defaults < config file < explicit overrides (None skipped)."""
    merged: dict[str, Any] = {}
    for source in (file_values, overrides):
        if source:
            merged.update({k: v for k, v in source.items() if v is not None})
    return GovernanceConfig(**merged)
