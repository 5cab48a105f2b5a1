"""Weighted two-sample KS kernel.

Both class ECDFs are right-continuous step functions that jump only at
observed scores, so the supremum of |F1 - F0| is attained on the set
of distinct pooled scores and is evaluated exactly there (no grid
approximation). Ties across classes are handled by evaluating both
ECDFs at each distinct pooled value. Cost is one sort per class,
O(n log n) overall.

Numerical conventions, fixed once for the whole package:

* weighted accumulation runs in extended precision with per-class
  normalization applied once at the end;
* within equal scores, weights are accumulated in sorted (score,
  weight) order, which makes the result invariant to input
  permutation at the bit level;
* the reported ``argmax_score`` is the smallest score attaining the
  supremum;
* every KS denominator uses the same epsilon guard ``KS_EPS``.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable

import numpy as np

from .data import PeriodSample, WeightedSample
from .errors import (
    EmptyClassAfterFilterError,
    EmptyClassError,
    NonPositiveWeightError,
    ZeroReferenceKsError,
)

#: Guard below which a KS value is treated as zero in denominators.
KS_EPS = 1e-9


@dataclasses.dataclass(frozen=True)
class KsValue:
    """A KS statistic together with a score attaining the supremum."""

    value: float
    argmax_score: float


def _as_score_array(scores: Iterable[float], side: str) -> np.ndarray:
    arr = np.ascontiguousarray(scores, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{side} scores must be one-dimensional")
    if arr.size == 0:
        raise EmptyClassError(f"{side} class is empty")
    return arr


def _as_weight_array(weights: Iterable[float] | None, n: int, side: str) -> np.ndarray | None:
    if weights is None:
        return None
    arr = np.ascontiguousarray(weights, dtype=np.float64)
    if arr.shape != (n,):
        raise NonPositiveWeightError(f"{side} weights must have length {n}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise NonPositiveWeightError(f"{side} weights must be strictly positive and finite")
    # Unit weights route through the exact counting path so that
    # weighted and unweighted calls agree bit-identically.
    if np.all(arr == 1.0):
        return None
    return arr


def _class_cdf(scores: np.ndarray, weights: np.ndarray, grid: np.ndarray) -> np.ndarray:
    order = np.lexsort((weights, scores))
    ordered = scores[order]
    cum = np.cumsum(weights[order].astype(np.longdouble))
    idx = np.searchsorted(ordered, grid, side="right")
    cdf = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], np.longdouble(0.0)) / cum[-1]
    return cdf.astype(np.float64)


def _unit_ks(good: np.ndarray, bad: np.ndarray, grid: np.ndarray) -> KsValue:
    # Exact integer arithmetic: |c1/n1 - c0/n0| maximized as
    # |c1*n0 - c0*n1|, so equal-difference ties resolve exactly and the
    # single final division is the only rounding.
    c0 = np.searchsorted(np.sort(good), grid, side="right")
    c1 = np.searchsorted(np.sort(bad), grid, side="right")
    diff = np.abs(c1 * good.size - c0 * bad.size)
    at = int(np.argmax(diff))  # first maximum = smallest score
    return KsValue(
        value=float(diff[at] / (good.size * bad.size)),
        argmax_score=float(grid[at]),
    )


def weighted_ks(
    good_scores: Iterable[float],
    bad_scores: Iterable[float],
    good_weights: Iterable[float] | None = None,
    bad_weights: Iterable[float] | None = None,
) -> KsValue:
    """sup_t |F1(t) - F0(t)| over per-class weighted ECDFs.

    With unit weights this is the classical two-sample KS statistic.
    Weights are normalized within each class, so scaling all weights
    of one class by a positive constant leaves the result unchanged.
    """
    good = _as_score_array(good_scores, "good")
    bad = _as_score_array(bad_scores, "bad")
    gw = _as_weight_array(good_weights, good.size, "good")
    bw = _as_weight_array(bad_weights, bad.size, "bad")

    grid = np.unique(np.concatenate([good, bad]))
    if gw is None and bw is None:
        return _unit_ks(good, bad, grid)
    if gw is None:
        gw = np.ones(good.size)
    if bw is None:
        bw = np.ones(bad.size)
    diff = np.abs(_class_cdf(bad, bw, grid) - _class_cdf(good, gw, grid))
    at = int(np.argmax(diff))  # first maximum = smallest score
    return KsValue(value=float(diff[at]), argmax_score=float(grid[at]))


def ks_of_sample(
    sample: PeriodSample | WeightedSample,
    restrict_to: frozenset[str] | set[str] | None = None,
) -> KsValue:
    """KS of a (possibly weighted) sample, optionally restricted to a
    segment set. Raises if either class is empty after filtering."""
    if isinstance(sample, WeightedSample):
        base, weights = sample.base, sample.weights
    else:
        base, weights = sample, None

    if restrict_to is None:
        keep = np.ones(base.n_obs, dtype=bool)
    else:
        keep = np.isin(base.segments, sorted(restrict_to))
    good_mask = keep & (base.labels == 0)
    bad_mask = keep & (base.labels == 1)
    if not good_mask.any() or not bad_mask.any():
        raise EmptyClassAfterFilterError(
            f"segment filter leaves goods={int(good_mask.sum())}, bads={int(bad_mask.sum())}"
        )
    return weighted_ks(
        base.scores[good_mask],
        base.scores[bad_mask],
        None if weights is None else weights[good_mask],
        None if weights is None else weights[bad_mask],
    )


def pct_change(ks_ref: float, ks_cur: float) -> float:
    """(KS_cur - KS_ref) / KS_ref; negative iff deterioration."""
    if ks_ref <= KS_EPS:
        raise ZeroReferenceKsError(f"reference KS {ks_ref} is at or below the {KS_EPS} guard")
    return (ks_cur - ks_ref) / ks_ref
