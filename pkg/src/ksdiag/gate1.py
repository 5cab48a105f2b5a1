"""Step 1: stratified bootstrap confirmation of the observed KS change.

Goods and bads are resampled with replacement within their class,
preserving the original class counts in each period. Replicate ``b``
draws all of its indices from ``substream(seed, STREAM_BOOTSTRAP, b)``
in a fixed order (reference goods, reference bads, current goods,
current bads), so the replicate vector is a pure function of
(inputs, seed) regardless of worker count.
"""

from __future__ import annotations

import dataclasses
import enum
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import GovernanceConfig
from .data import PeriodSample
from .errors import AllReplicatesDegenerateError, EmptyVectorError
from .ks import KS_EPS, ks_of_sample, pct_change
from .rng import STREAM_BOOTSTRAP, substream


class Gate1Classification(str, enum.Enum):
    NO_DETERIORATION = "NO_DETERIORATION"
    SIGNIFICANT_NO_BREACH = "SIGNIFICANT_NO_BREACH"
    BREACH_NOT_CONFIRMED = "BREACH_NOT_CONFIRMED"
    CONFIRMED_BREACH = "CONFIRMED_BREACH"


@dataclasses.dataclass(frozen=True)
class Gate1Result:
    pct_change_observed: float
    ci_low: float
    ci_high: float
    classification: Gate1Classification
    replicates_used: int


def stratified_resample(sample: PeriodSample, rng: np.random.Generator) -> PeriodSample:
    """Resample with replacement within each class, preserving class
    counts; segments and covariates travel with their row."""
    good_rows = np.flatnonzero(sample.labels == 0)
    bad_rows = np.flatnonzero(sample.labels == 1)
    gi = rng.integers(0, good_rows.size, good_rows.size)
    bi = rng.integers(0, bad_rows.size, bad_rows.size)
    rows = np.concatenate([good_rows[gi], bad_rows[bi]])
    return PeriodSample(
        period=sample.period,
        scores=sample.scores[rows],
        labels=sample.labels[rows],
        segments=sample.segments[rows],
        covariates=sample.covariates[rows],
    )


class _BootstrapContext:
    """Per-period precomputation for O(n) replicate KS evaluation.

    A resample is a multiset of the original class scores, so its ECDF
    on the fixed pooled grid is a cumulative count of resampled score
    ranks: no per-replicate sort is needed. The count difference is
    cross-multiplied in exact integer arithmetic and divided once at
    the end, so a replicate KS agrees with resampling rows and calling
    :func:`ks_of_sample` up to one final rounding.
    """

    def __init__(self, sample: PeriodSample) -> None:
        good = sample.scores[sample.labels == 0]
        bad = sample.scores[sample.labels == 1]
        self.n_good = good.size
        self.n_bad = bad.size
        # Ranks are shifted by one so that bincount's index 0 stays
        # empty and the cumulative sum starts at an implicit zero.
        self._rank_good = self._ranks(good) + 1
        self._rank_bad = self._ranks(bad) + 1
        grid = np.unique(np.concatenate([good, bad]))
        self._pos_good = np.searchsorted(np.sort(good), grid, side="right")
        self._pos_bad = np.searchsorted(np.sort(bad), grid, side="right")

    @staticmethod
    def _ranks(scores: np.ndarray) -> np.ndarray:
        order = np.argsort(scores, kind="stable")
        rank = np.empty(scores.size, dtype=np.int64)
        rank[order] = np.arange(scores.size)
        return rank

    def replicate_ks(self, idx_good: np.ndarray, idx_bad: np.ndarray) -> float:
        cg = np.cumsum(np.bincount(self._rank_good[idx_good], minlength=self.n_good + 1))
        cb = np.cumsum(np.bincount(self._rank_bad[idx_bad], minlength=self.n_bad + 1))
        diff = cb[self._pos_bad] * self.n_good - cg[self._pos_good] * self.n_bad
        return float(np.max(np.abs(diff)) / (self.n_good * self.n_bad))


def _bootstrap_pct_changes(
    ref: PeriodSample, cur: PeriodSample, config: GovernanceConfig
) -> tuple[np.ndarray, int]:
    """Replicate %-change vector in index order, plus the count of
    dropped replicates (reference KS at or below the zero guard)."""
    ref_ctx = _BootstrapContext(ref)
    cur_ctx = _BootstrapContext(cur)

    def one(b: int) -> float:
        rng = substream(config.seed, STREAM_BOOTSTRAP, b)
        rg = rng.integers(0, ref_ctx.n_good, ref_ctx.n_good)
        rb = rng.integers(0, ref_ctx.n_bad, ref_ctx.n_bad)
        cg = rng.integers(0, cur_ctx.n_good, cur_ctx.n_good)
        cb = rng.integers(0, cur_ctx.n_bad, cur_ctx.n_bad)
        ks_ref = ref_ctx.replicate_ks(rg, rb)
        ks_cur = cur_ctx.replicate_ks(cg, cb)
        if ks_ref <= KS_EPS:
            return np.nan
        return (ks_cur - ks_ref) / ks_ref

    workers = config.parallelism if config.parallelism > 0 else min(8, os.cpu_count() or 1)
    if workers == 1:
        raw = np.array([one(b) for b in range(config.bootstrap)], dtype=np.float64)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = np.fromiter(pool.map(one, range(config.bootstrap)), dtype=np.float64, count=config.bootstrap)
    kept = raw[~np.isnan(raw)]
    return kept, int(config.bootstrap - kept.size)


def bootstrap_distribution(
    ref: PeriodSample, cur: PeriodSample, config: GovernanceConfig
) -> np.ndarray:
    """Bootstrap distribution of the KS percentage change (degenerate
    replicates dropped)."""
    values, _ = _bootstrap_pct_changes(ref, cur, config)
    if values.size == 0:
        raise AllReplicatesDegenerateError("every bootstrap replicate had zero reference KS")
    return values


def percentile_ci(values: np.ndarray, alpha: float) -> tuple[float, float]:
    """Percentile interval [alpha/2, 1 - alpha/2] quantiles, using
    linear interpolation between order statistics."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyVectorError("cannot form a confidence interval from zero values")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    low, high = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0], method="linear")
    return float(low), float(high)


def classify_gate1(ci_low: float, ci_high: float, tau: float) -> Gate1Classification:
    """Map a confidence interval against 0 and tau to a decision.

    Beyond the four canonical cells, two conservative extensions make
    this total: an interval reaching 0 without dipping below tau (or
    lying entirely above 0) is NO_DETERIORATION, and an interval
    spanning both tau and 0 is BREACH_NOT_CONFIRMED.
    """
    if ci_low > ci_high:
        raise ValueError(f"ci_low {ci_low} exceeds ci_high {ci_high}")
    if tau >= 0:
        raise ValueError(f"tau must be negative, got {tau}")
    if ci_high < tau:
        return Gate1Classification.CONFIRMED_BREACH
    if ci_low <= tau:
        return Gate1Classification.BREACH_NOT_CONFIRMED
    if ci_high < 0:
        return Gate1Classification.SIGNIFICANT_NO_BREACH
    return Gate1Classification.NO_DETERIORATION


def is_table_extension(ci_low: float, ci_high: float, tau: float) -> bool:
    """True when the CI falls in a cell covered only by the
    conservative extensions of the decision table."""
    return ci_low > 0 or (ci_low <= tau and ci_high >= 0)


def run_gate1(ref: PeriodSample, cur: PeriodSample, config: GovernanceConfig) -> Gate1Result:
    ks_ref = ks_of_sample(ref)
    ks_cur = ks_of_sample(cur)
    observed = pct_change(ks_ref.value, ks_cur.value)
    values, _dropped = _bootstrap_pct_changes(ref, cur, config)
    if values.size == 0:
        raise AllReplicatesDegenerateError("every bootstrap replicate had zero reference KS")
    ci_low, ci_high = percentile_ci(values, config.alpha)
    return Gate1Result(
        pct_change_observed=observed,
        ci_low=ci_low,
        ci_high=ci_high,
        classification=classify_gate1(ci_low, ci_high, config.tau),
        replicates_used=int(values.size),
    )
