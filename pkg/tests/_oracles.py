"""Independent oracles used to freeze expected values.

Everything here is deliberately naive (direct definitions, pair
enumeration, closed forms) and shares no code path with the package.
"""

from __future__ import annotations

from statistics import NormalDist

import numpy as np

_PHI = NormalDist().cdf


def brute_force_ks(
    good: np.ndarray,
    bad: np.ndarray,
    good_w: np.ndarray | None = None,
    bad_w: np.ndarray | None = None,
) -> float:
    """sup |F1 - F0| by direct evaluation of both weighted ECDFs at
    every pooled score."""
    good = np.asarray(good, dtype=float)
    bad = np.asarray(bad, dtype=float)
    gw = np.ones_like(good) if good_w is None else np.asarray(good_w, dtype=float)
    bw = np.ones_like(bad) if bad_w is None else np.asarray(bad_w, dtype=float)
    best = 0.0
    for t in np.concatenate([good, bad]):
        f0 = gw[good <= t].sum() / gw.sum()
        f1 = bw[bad <= t].sum() / bw.sum()
        best = max(best, abs(f1 - f0))
    return best


def pairwise_auroc(
    scores: np.ndarray, labels: np.ndarray, weights: np.ndarray | None = None
) -> float:
    """Weight-product sum over all (positive, negative) pairs."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    weights = np.ones_like(scores) if weights is None else np.asarray(weights, dtype=float)
    wins = 0.0
    total = 0.0
    for i in np.flatnonzero(labels == 1):
        for j in np.flatnonzero(labels == 0):
            w = weights[i] * weights[j]
            total += w
            if scores[i] > scores[j]:
                wins += w
            elif scores[i] == scores[j]:
                wins += 0.5 * w
    return wins / total


def quantile_linear(values: np.ndarray, q: float) -> float:
    """Textbook linear interpolation between order statistics."""
    ordered = np.sort(np.asarray(values, dtype=float))
    h = (ordered.size - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, ordered.size - 1)
    return float(ordered[lo] + (h - lo) * (ordered[hi] - ordered[lo]))


def analytic_pair_ks(sep: float) -> float:
    """Population KS of N(0,1) goods vs N(sep,1) bads."""
    return 2.0 * _PHI(sep / 2.0) - 1.0


def mixture_ks(
    strata_goods: list[tuple[float, float]], strata_bads: list[tuple[float, float]]
) -> float:
    """Population KS between two unit-variance Gaussian mixtures given
    as (weight, mean) strata."""
    means = [m for _, m in strata_goods] + [m for _, m in strata_bads]
    grid = np.linspace(min(means) - 8.0, max(means) + 8.0, 80001)
    f0 = sum(w * np.vectorize(_PHI)(grid - m) for w, m in strata_goods)
    f1 = sum(w * np.vectorize(_PHI)(grid - m) for w, m in strata_bads)
    return float(np.max(np.abs(f1 - f0)))
