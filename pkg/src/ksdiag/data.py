"""Core domain types and CSV ingestion.

The on-disk format is fixed: UTF-8, comma-separated, ``\n`` line ends,
header ``score,label,segment`` optionally followed by ``x1,...,xp``.
Scores and covariates use a ``.`` decimal point; labels are the
literals ``0``/``1``; segment values are arbitrary non-empty strings
without commas. Validation is fail-closed: anything outside this
schema is rejected rather than coerced or ignored.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import (
    BadLabelError,
    EmptyFileError,
    EmptySegmentError,
    MissingColumnError,
    NonFiniteCovariateError,
    NonFiniteScoreError,
    NonPositiveWeightError,
    RaggedCovariatesError,
    SingleClassSampleError,
    UnknownColumnError,
)

PERIOD_REFERENCE = "reference"
PERIOD_CURRENT = "current"
_PERIODS = (PERIOD_REFERENCE, PERIOD_CURRENT)

_REQUIRED_COLUMNS = ("score", "label", "segment")


@dataclasses.dataclass(frozen=True)
class Observation:
    """One scored account: model score, outcome label, segment, covariates."""

    score: float
    label: int
    segment: str
    covariates: tuple[float, ...] = ()


@dataclasses.dataclass(frozen=True)
class PeriodSample:
    """A validated collection of observations for one period.

    Stored column-wise; arrays are frozen after construction and safe
    to share across threads. Guaranteed non-empty with at least one
    good (label 0) and one bad (label 1).
    """

    period: str
    scores: np.ndarray
    labels: np.ndarray
    segments: np.ndarray
    covariates: np.ndarray

    def __post_init__(self) -> None:
        if self.period not in _PERIODS:
            raise ValueError(f"period must be one of {_PERIODS}, got {self.period!r}")
        for arr in (self.scores, self.labels, self.segments, self.covariates):
            arr.flags.writeable = False

    @property
    def n_obs(self) -> int:
        return int(self.scores.shape[0])

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def segment_universe(self) -> frozenset[str]:
        return frozenset(str(s) for s in self.segments)

    @property
    def observations(self) -> Iterator[Observation]:
        for i in range(self.n_obs):
            yield Observation(
                score=float(self.scores[i]),
                label=int(self.labels[i]),
                segment=str(self.segments[i]),
                covariates=tuple(float(x) for x in self.covariates[i]),
            )

    @classmethod
    def from_arrays(
        cls,
        period: str,
        scores: np.ndarray,
        labels: np.ndarray,
        segments: np.ndarray,
        covariates: np.ndarray | None = None,
    ) -> "PeriodSample":
        """Validate raw columns and build a sample (row order preserved)."""
        scores = np.ascontiguousarray(scores, dtype=np.float64)
        labels = np.ascontiguousarray(labels, dtype=np.int8)
        segments = np.asarray(segments, dtype=str).copy()
        n = scores.shape[0]
        if n == 0:
            raise EmptyFileError("sample contains no observations")
        if covariates is None:
            covariates = np.empty((n, 0), dtype=np.float64)
        covariates = np.ascontiguousarray(covariates, dtype=np.float64)
        if covariates.ndim != 2 or covariates.shape[0] != n:
            raise RaggedCovariatesError(
                f"covariates must be (n, p) with n={n}, got shape {covariates.shape}"
            )
        if labels.shape[0] != n or segments.shape[0] != n:
            raise RaggedCovariatesError("column lengths differ")
        if not np.all(np.isfinite(scores)):
            raise NonFiniteScoreError("scores must be finite")
        if not np.all((labels == 0) | (labels == 1)):
            raise BadLabelError("labels must be 0 or 1")
        if not np.all(np.isfinite(covariates)):
            raise NonFiniteCovariateError("covariates must be finite")
        if any(s == "" for s in segments):
            raise EmptySegmentError("segment values must be non-empty")
        if not (np.any(labels == 0) and np.any(labels == 1)):
            raise SingleClassSampleError("sample must contain both goods and bads")
        return cls(period, scores, labels, segments, covariates)

    @classmethod
    def from_observations(cls, period: str, observations: list[Observation]) -> "PeriodSample":
        p = len(observations[0].covariates) if observations else 0
        return cls.from_arrays(
            period,
            np.array([o.score for o in observations], dtype=np.float64),
            np.array([o.label for o in observations], dtype=np.int8),
            np.array([o.segment for o in observations], dtype=str),
            np.array([o.covariates for o in observations], dtype=np.float64).reshape(len(observations), p),
        )


@dataclasses.dataclass(frozen=True)
class WeightedSample:
    """A PeriodSample with one strictly positive weight per observation."""

    base: PeriodSample
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if weights.shape != (self.base.n_obs,):
            raise NonPositiveWeightError(
                f"weights must have length {self.base.n_obs}, got shape {weights.shape}"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise NonPositiveWeightError("weights must be strictly positive and finite")
        object.__setattr__(self, "weights", weights)
        weights.flags.writeable = False


def class_counts(sample: PeriodSample) -> tuple[int, int]:
    """Return (n_good, n_bad); both are >= 1 by sample invariant."""
    n_bad = int(np.count_nonzero(sample.labels == 1))
    return sample.n_obs - n_bad, n_bad


def _parse_header(header_line: str) -> int:
    columns = header_line.split(",")
    for i, name in enumerate(_REQUIRED_COLUMNS):
        if i >= len(columns) or columns[i] != name:
            raise MissingColumnError(
                f"header must start with {','.join(_REQUIRED_COLUMNS)!r}, got {header_line!r}"
            )
    extras = columns[len(_REQUIRED_COLUMNS):]
    for j, name in enumerate(extras, start=1):
        if name != f"x{j}":
            raise UnknownColumnError(
                f"unexpected column {name!r} at position {len(_REQUIRED_COLUMNS) + j}; "
                f"covariate columns must be named x1..xp in order"
            )
    return len(extras)


def load_period_csv(path: str | Path, period: str) -> PeriodSample:
    """Load and validate one period file; the covariate dimension is
    inferred from the header and row order is preserved."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyFileError(f"{path}: file is empty")
    p = _parse_header(lines[0])
    n = len(lines) - 1
    if n == 0:
        raise EmptyFileError(f"{path}: no data rows")

    scores = np.empty(n, dtype=np.float64)
    labels = np.empty(n, dtype=np.int8)
    segments: list[str] = []
    covariates = np.empty((n, p), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        parts = line.split(",")
        if len(parts) != 3 + p:
            raise RaggedCovariatesError(
                f"{path}: line {lineno}: expected {3 + p} fields, got {len(parts)}"
            )
        try:
            score = float(parts[0])
        except ValueError:
            raise NonFiniteScoreError(f"{path}: line {lineno}: bad score {parts[0]!r}") from None
        if not math.isfinite(score):
            raise NonFiniteScoreError(f"{path}: line {lineno}: score {parts[0]!r} is not finite")
        if parts[1] not in ("0", "1"):
            raise BadLabelError(f"{path}: line {lineno}: label must be 0 or 1, got {parts[1]!r}")
        if parts[2] == "":
            raise EmptySegmentError(f"{path}: line {lineno}: empty segment value")
        scores[i] = score
        labels[i] = int(parts[1])
        segments.append(parts[2])
        for j in range(p):
            field = parts[3 + j]
            try:
                value = float(field)
            except ValueError:
                raise NonFiniteCovariateError(
                    f"{path}: line {lineno}: bad covariate x{j + 1}={field!r}"
                ) from None
            if not math.isfinite(value):
                raise NonFiniteCovariateError(
                    f"{path}: line {lineno}: covariate x{j + 1}={field!r} is not finite"
                )
            covariates[i, j] = value

    return PeriodSample.from_arrays(
        period, scores, labels, np.array(segments, dtype=str), covariates
    )


def serialize_period_csv(sample: PeriodSample) -> str:
    """Render a sample in the canonical on-disk format.

    Floats are written with ``repr`` (shortest round-trip form), so a
    write/load cycle reproduces scores bit-exactly.
    """
    p = sample.p
    header = ",".join(_REQUIRED_COLUMNS + tuple(f"x{j}" for j in range(1, p + 1)))
    out = [header]
    for i in range(sample.n_obs):
        fields = [repr(float(sample.scores[i])), str(int(sample.labels[i])), str(sample.segments[i])]
        fields.extend(repr(float(x)) for x in sample.covariates[i])
        out.append(",".join(fields))
    return "\n".join(out) + "\n"


def write_period_csv(sample: PeriodSample, path: str | Path) -> None:
    Path(path).write_text(serialize_period_csv(sample), encoding="utf-8")
