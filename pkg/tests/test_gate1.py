from __future__ import annotations

import numpy as np
import pytest

from ksdiag.config import GovernanceConfig
from ksdiag.data import PERIOD_CURRENT, PERIOD_REFERENCE
from ksdiag.errors import AllReplicatesDegenerateError, EmptyVectorError
from ksdiag.gate1 import (
    Gate1Classification,
    _bootstrap_pct_changes,
    bootstrap_distribution,
    classify_gate1,
    percentile_ci,
    run_gate1,
    stratified_resample,
)
from ksdiag.ks import ks_of_sample, pct_change
from ksdiag.rng import STREAM_BOOTSTRAP, substream
from ksdiag.simulate import ScenarioSpec, SegmentSpec, generate

from _oracles import quantile_linear
from conftest import make_sample

_SEVERITY = {
    Gate1Classification.NO_DETERIORATION: 0,
    Gate1Classification.SIGNIFICANT_NO_BREACH: 1,
    Gate1Classification.BREACH_NOT_CONFIRMED: 2,
    Gate1Classification.CONFIRMED_BREACH: 3,
}


def _two_gaussian_pair(sep_ref: float, sep_cur: float, n: int, seed: int):
    spec = ScenarioSpec(
        segments=(SegmentSpec("ALL", 1.0, 1.0, sep_ref, sep_cur),),
        n_ref=n,
        n_cur=n,
        seed=seed,
    )
    return generate(spec)


def test_singleton_classes_resample_to_themselves() -> None:
    sample = make_sample([0.3, 0.9], [0, 1])
    rng = substream(0)
    for _ in range(20):
        out = stratified_resample(sample, rng)
        assert out.scores.tolist() == [0.3, 0.9]
        assert out.labels.tolist() == [0, 1]


def test_resample_preserves_class_counts() -> None:
    sample = make_sample([1, 2, 3, 4, 5], [0, 0, 0, 1, 1])
    rng = substream(1)
    for _ in range(1000):
        out = stratified_resample(sample, rng)
        assert (out.labels == 0).sum() == 3
        assert (out.labels == 1).sum() == 2


def test_resample_rows_travel_together() -> None:
    sample = make_sample([1, 2, 3, 4], [0, 0, 1, 1], ["A", "B", "C", "D"], [[10], [20], [30], [40]])
    out = stratified_resample(sample, substream(2))
    for i in range(out.n_obs):
        j = {1: 0, 2: 1, 3: 2, 4: 3}[int(out.scores[i])]
        assert out.segments[i] == sample.segments[j]
        assert out.covariates[i, 0] == sample.covariates[j, 0]


def test_fixed_seed_reproduces_resample_sequence() -> None:
    sample = make_sample(np.arange(50, dtype=float), [0] * 30 + [1] * 20)
    a = [stratified_resample(sample, substream(7, 9, b)).scores.tolist() for b in range(5)]
    b = [stratified_resample(sample, substream(7, 9, b)).scores.tolist() for b in range(5)]
    assert a == b


def test_bootstrap_matches_naive_resample_path_bitwise() -> None:
    ref, cur = _two_gaussian_pair(2.0, 1.6, 300, seed=5)
    config = GovernanceConfig(seed=11, bootstrap=50, parallelism=1)
    fast, dropped = _bootstrap_pct_changes(ref, cur, config)
    assert dropped == 0
    naive = []
    for b in range(config.bootstrap):
        rng = substream(config.seed, STREAM_BOOTSTRAP, b)
        ks_ref = ks_of_sample(stratified_resample(ref, rng)).value
        ks_cur = ks_of_sample(stratified_resample(cur, rng)).value
        naive.append(pct_change(ks_ref, ks_cur))
    assert fast.tolist() == naive


def test_bootstrap_deterministic_across_worker_counts() -> None:
    ref, cur = _two_gaussian_pair(2.0, 1.8, 500, seed=3)
    runs = [
        bootstrap_distribution(ref, cur, GovernanceConfig(seed=4, bootstrap=64, parallelism=p))
        for p in (1, 3, 8)
    ]
    assert runs[0].tolist() == runs[1].tolist() == runs[2].tolist()


def test_bootstrap_single_replicate() -> None:
    ref, cur = _two_gaussian_pair(2.0, 1.8, 200, seed=6)
    values = bootstrap_distribution(ref, cur, GovernanceConfig(seed=0, bootstrap=1))
    assert values.shape == (1,)


def test_self_comparison_distribution_is_centered() -> None:
    ref, _ = _two_gaussian_pair(2.0, 2.0, 2000, seed=9)
    values = bootstrap_distribution(ref, ref, GovernanceConfig(seed=1, bootstrap=200))
    assert abs(values.mean()) <= 0.05


def test_degenerate_replicates_are_dropped_and_counted() -> None:
    # Two distinct scores per class with heavy overlap: many resamples
    # produce identical class ECDFs (zero reference KS) and are dropped.
    ref = make_sample([0.0, 1.0, 0.0, 1.0], [0, 0, 1, 1])
    cur = make_sample([0.0, 1.0, 0.0, 1.0], [0, 0, 1, 1], period=PERIOD_CURRENT)
    values, dropped = _bootstrap_pct_changes(ref, cur, GovernanceConfig(seed=2, bootstrap=300))
    assert dropped > 0
    assert values.size + dropped == 300
    assert np.all(np.isfinite(values))


def test_all_replicates_degenerate_raises() -> None:
    ref = make_sample([1.0, 1.0], [0, 1])  # identical scores: KS always 0
    cur = make_sample([0.5, 2.0], [0, 1], period=PERIOD_CURRENT)
    with pytest.raises(AllReplicatesDegenerateError):
        bootstrap_distribution(ref, cur, GovernanceConfig(seed=0, bootstrap=20))


def test_percentile_ci_against_quantile_oracle() -> None:
    values = np.arange(1.0, 101.0)
    # Oracle: linear interpolation between order statistics.
    expected = (quantile_linear(values, 0.025), quantile_linear(values, 0.975))
    assert expected == pytest.approx((3.475, 97.525), abs=1e-12)
    assert percentile_ci(values, 0.05) == pytest.approx(expected, abs=1e-12)


def test_percentile_ci_degenerate_vectors() -> None:
    assert percentile_ci(np.full(10, 2.5), 0.05) == (2.5, 2.5)
    assert percentile_ci(np.array([7.0]), 0.3) == (7.0, 7.0)
    with pytest.raises(EmptyVectorError):
        percentile_ci(np.array([]), 0.05)


@pytest.mark.parametrize(
    "ci,expected",
    [
        ((-0.15, 0.05), Gate1Classification.NO_DETERIORATION),
        ((-0.18, -0.04), Gate1Classification.SIGNIFICANT_NO_BREACH),
        ((-0.27, -0.12), Gate1Classification.BREACH_NOT_CONFIRMED),
        ((-0.30, -0.22), Gate1Classification.CONFIRMED_BREACH),
        # Cells beyond the canonical table, resolved conservatively.
        ((0.02, 0.10), Gate1Classification.NO_DETERIORATION),
        ((-0.25, 0.03), Gate1Classification.BREACH_NOT_CONFIRMED),
        ((-0.15, 0.0), Gate1Classification.NO_DETERIORATION),
        ((-0.20, -0.05), Gate1Classification.BREACH_NOT_CONFIRMED),
    ],
)
def test_classify_gate1_decision_cells(ci, expected) -> None:
    assert classify_gate1(ci[0], ci[1], tau=-0.20) is expected


def test_classify_gate1_total_over_random_intervals() -> None:
    rng = substream(200)
    for _ in range(2000):
        a, b = np.sort(rng.uniform(-1.0, 1.0, 2))
        tau = -float(rng.uniform(0.01, 0.9))
        result = classify_gate1(float(a), float(b), tau)
        assert result in Gate1Classification


def test_classify_gate1_rejects_bad_arguments() -> None:
    with pytest.raises(ValueError):
        classify_gate1(0.2, 0.1, -0.2)
    with pytest.raises(ValueError):
        classify_gate1(-0.1, 0.1, 0.0)


def test_run_gate1_is_deterministic() -> None:
    ref, cur = _two_gaussian_pair(2.0, 1.6, 800, seed=13)
    config = GovernanceConfig(seed=21, bootstrap=150)
    first = run_gate1(ref, cur, config)
    second = run_gate1(ref, cur, config)
    third = run_gate1(ref, cur, GovernanceConfig(seed=21, bootstrap=150, parallelism=5))
    assert first == second == third


def test_improving_separation_never_raises_severity() -> None:
    config = GovernanceConfig(seed=17, bootstrap=200)
    ref, cur = _two_gaussian_pair(2.0, 1.2, 2000, seed=23)
    last_severity = None
    for lift in (0.0, 0.2, 0.4, 0.6, 0.8):
        lifted_scores = cur.scores + np.where(cur.labels == 1, lift, 0.0)
        lifted = make_sample(lifted_scores, cur.labels, cur.segments, cur.covariates, period=PERIOD_CURRENT)
        severity = _SEVERITY[run_gate1(ref, lifted, config).classification]
        if last_severity is not None:
            assert severity <= last_severity
        last_severity = severity
