from __future__ import annotations

import numpy as np
import pytest

from ksdiag.data import PERIOD_CURRENT, PERIOD_REFERENCE, PeriodSample


def make_sample(
    scores,
    labels,
    segments=None,
    covariates=None,
    period: str = PERIOD_REFERENCE,
) -> PeriodSample:
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    if segments is None:
        segments = ["A"] * n
    return PeriodSample.from_arrays(
        period,
        scores,
        np.asarray(labels, dtype=np.int8),
        np.asarray(segments, dtype=str),
        None if covariates is None else np.asarray(covariates, dtype=np.float64),
    )


def random_pair(
    rng: np.random.Generator,
    n_max: int = 1000,
    max_segments: int = 4,
    p: int = 0,
) -> tuple[PeriodSample, PeriodSample]:
    """A random (reference, current) pair valid for decomposition:
    segment universes overlap and every common segment keeps both
    classes in both periods."""
    n_segments = int(rng.integers(1, max_segments + 1))
    names = [f"S{k}" for k in range(n_segments)]
    samples = []
    for period in (PERIOD_REFERENCE, PERIOD_CURRENT):
        n = int(rng.integers(20, n_max + 1))
        segs = rng.choice(names, size=n).astype(str)
        labels = (rng.random(n) < rng.uniform(0.2, 0.6)).astype(np.int8)
        scores = rng.normal(0.0, 1.0, n) + labels * rng.uniform(0.3, 2.5)
        # Guarantee both classes within every segment present in this period.
        extra_scores, extra_labels, extra_segs = [], [], []
        for name in names:
            extra_scores.extend(rng.normal(0.0, 1.0, 2) + [0.0, 1.0])
            extra_labels.extend([0, 1])
            extra_segs.extend([name, name])
        scores = np.concatenate([scores, extra_scores])
        labels = np.concatenate([labels, np.asarray(extra_labels, dtype=np.int8)])
        segs = np.concatenate([segs, np.asarray(extra_segs, dtype=str)])
        covs = rng.normal(0.0, 1.0, (scores.size, p)) if p else None
        samples.append(make_sample(scores, labels, segs, covs, period=period))
    return samples[0], samples[1]


@pytest.fixture
def tiny_pair() -> tuple[PeriodSample, PeriodSample]:
    ref = make_sample([0.1, 0.4, 0.9, 1.4], [0, 0, 1, 1], period=PERIOD_REFERENCE)
    cur = make_sample([0.2, 0.5, 0.8, 1.2], [0, 0, 1, 1], period=PERIOD_CURRENT)
    return ref, cur
