from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from ksdiag.config import GovernanceConfig
from ksdiag.data import PERIOD_CURRENT, PERIOD_REFERENCE, PeriodSample, WeightedSample
from ksdiag.errors import NoCovariatesError, SingleClassError
from ksdiag.gate2 import MixWeights, compute_mix_weights, partition_support
from ksdiag.gate3 import (
    DomainClassifier,
    Gate3Gateway,
    auroc,
    build_domain_dataset,
    covariate_weights,
    fit_domain_classifier,
    predict_shift_probability,
    run_gate3,
    x_aligned_ks,
)
from ksdiag.ks import ks_of_sample
from ksdiag.rng import substream
from ksdiag.simulate import (
    CovariateMode,
    CovariateShiftSpec,
    ScenarioSpec,
    SegmentSpec,
    builtin_scenario,
    generate,
)

from _oracles import pairwise_auroc
from conftest import make_sample

_CFG = GovernanceConfig(min_segment_count=1, bootstrap=10)


def _covariate_sample(rng, n, p, period, segments=("A",)):
    segs = rng.choice(list(segments), n).astype(str)
    labels = np.concatenate([[0, 1], (rng.random(n - 2) < 0.3).astype(int)])
    scores = rng.normal(0, 1, n) + labels * 1.5
    covs = rng.normal(0, 1, (n, p))
    return make_sample(scores, labels, segs, covs, period=period)


def _unit_mix(segments) -> MixWeights:
    return MixWeights(
        shares_ref={s: 1.0 / len(segments) for s in segments},
        shares_cur={s: 1.0 / len(segments) for s in segments},
        weight={s: 1.0 for s in segments},
    )


def test_dataset_feature_dimension_with_segments() -> None:
    rng = substream(400)
    ref = _covariate_sample(rng, 60, 2, PERIOD_REFERENCE, segments=("A", "B", "C"))
    cur = _covariate_sample(rng, 60, 2, PERIOD_CURRENT, segments=("A", "B", "C"))
    dataset = build_domain_dataset(WeightedSample(ref, np.ones(60)), cur)
    assert dataset.features.shape == (120, 4)  # 2 covariates + 2 indicators
    assert dataset.feature_names == ("x1", "x2", "segment=B", "segment=C")
    assert dataset.n_ref == dataset.n_cur == 60
    assert not dataset.single_segment


def test_dataset_single_segment_has_no_indicators() -> None:
    rng = substream(401)
    ref = _covariate_sample(rng, 40, 1, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, 40, 1, PERIOD_CURRENT)
    dataset = build_domain_dataset(WeightedSample(ref, np.ones(40)), cur)
    assert dataset.features.shape == (80, 1)
    assert dataset.single_segment


def test_dataset_instance_weights_carry_mix_weights() -> None:
    rng = substream(402)
    ref = _covariate_sample(rng, 30, 1, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, 20, 1, PERIOD_CURRENT)
    dataset = build_domain_dataset(WeightedSample(ref, np.full(30, 2.5)), cur)
    assert np.all(dataset.instance_weights[:30] == 2.5)
    assert np.all(dataset.instance_weights[30:] == 1.0)
    assert dataset.z.tolist() == [0] * 30 + [1] * 20


def test_dataset_requires_covariates() -> None:
    rng = substream(403)
    ref = _covariate_sample(rng, 20, 0, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, 20, 0, PERIOD_CURRENT)
    with pytest.raises(NoCovariatesError):
        build_domain_dataset(WeightedSample(ref, np.ones(20)), cur)


def test_null_fit_gives_uninformative_classifier() -> None:
    rng = substream(404)
    n = 5000
    ref = _covariate_sample(rng, n, 2, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, n, 2, PERIOD_CURRENT)
    dataset = build_domain_dataset(WeightedSample(ref, np.ones(n)), cur)
    model = fit_domain_classifier(dataset, _CFG)
    assert model.eta == pytest.approx(0.5, abs=1e-12)
    assert model.train_auroc == pytest.approx(0.5, abs=0.03)
    assert model.converged
    assert not model.separation_flag


def test_weighted_eta_prior() -> None:
    rng = substream(405)
    ref = _covariate_sample(rng, 30, 1, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, 10, 1, PERIOD_CURRENT)
    dataset = build_domain_dataset(WeightedSample(ref, np.full(30, 3.0)), cur)
    model = fit_domain_classifier(dataset, _CFG)
    assert model.eta == pytest.approx(10.0 / (90.0 + 10.0), abs=1e-12)


def test_disjoint_supports_flag_separation() -> None:
    scores = np.concatenate([np.zeros(40), np.ones(40)])
    labels = np.array([0, 1] * 40, dtype=np.int8)
    ref = make_sample(scores[:40] + 0.5, labels[:40], covariates=np.full((40, 1), -3.0))
    cur = make_sample(
        scores[40:] + 0.5, labels[40:], covariates=np.full((40, 1), 3.0), period=PERIOD_CURRENT
    )
    dataset = build_domain_dataset(WeightedSample(ref, np.ones(40)), cur)
    model = fit_domain_classifier(dataset, _CFG)
    assert model.train_auroc == 1.0
    assert model.separation_flag


def test_auroc_hand_cases() -> None:
    assert auroc(np.array([1, 2, 3, 4.0]), np.array([0, 0, 1, 1])) == 1.0
    assert auroc(np.array([2, 2, 2, 2.0]), np.array([0, 1, 0, 1])) == 0.5
    # Pairs: (2>1), (2<3), (4>1), (4>3) -> 3 wins of 4.
    assert auroc(np.array([1, 2, 3, 4.0]), np.array([0, 1, 0, 1])) == 0.75


def test_auroc_requires_both_classes() -> None:
    with pytest.raises(SingleClassError):
        auroc(np.array([1.0, 2.0]), np.array([1, 1]))


def test_auroc_matches_pairwise_oracle() -> None:
    rng = substream(406)
    for _ in range(60):
        n = int(rng.integers(2, 120))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = np.round(rng.normal(0, 1, n), 1)
        weights = rng.uniform(0.2, 3.0, n)
        got = auroc(scores, labels, weights)
        assert got == pytest.approx(pairwise_auroc(scores, labels, weights), abs=1e-12)


def _hand_model(intercept: float, eta: float) -> DomainClassifier:
    return DomainClassifier(
        coefficients=np.array([intercept, 0.0]),
        feature_names=("x1",),
        segment_levels=("A",),
        means=np.zeros(1),
        scales=np.ones(1),
        train_auroc=0.5,
        eval_auroc=None,
        eta=eta,
        converged=True,
        iterations=1,
        separation_flag=False,
    )


def test_covariate_weight_fixed_points() -> None:
    sample = make_sample([0.0, 1.0], [0, 1], covariates=[[0.3], [-0.2]])
    config = GovernanceConfig()
    # p = 0.5, eta = 0.5 -> weight 1.
    assert covariate_weights(_hand_model(0.0, 0.5), sample, config).tolist() == [1.0, 1.0]
    # p = 0.75, eta = 0.5 -> weight 3.
    w = covariate_weights(_hand_model(np.log(3.0), 0.5), sample, config)
    assert w == pytest.approx([3.0, 3.0], abs=1e-12)
    # p = 0.5, eta = 0.25 -> weight 3.
    w = covariate_weights(_hand_model(0.0, 0.25), sample, config)
    assert w == pytest.approx([3.0, 3.0], abs=1e-12)


def test_covariate_weights_respect_clipping() -> None:
    sample = make_sample([0.0, 1.0], [0, 1], covariates=[[0.3], [-0.2]])
    config = GovernanceConfig(clip_low=0.5, clip_high=2.0)
    w = covariate_weights(_hand_model(np.log(99.0), 0.5), sample, config)
    assert w.tolist() == [2.0, 2.0]


def test_standardization_affine_invariance() -> None:
    rng = substream(407)
    n = 800
    ref = _covariate_sample(rng, n, 2, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, n, 2, PERIOD_CURRENT)
    cur = make_sample(
        cur.scores, cur.labels, cur.segments, cur.covariates + [0.4, -0.1], period=PERIOD_CURRENT
    )
    config = GovernanceConfig(min_segment_count=1)

    def weights_for(scale: float, offset: float) -> np.ndarray:
        transform = np.array([scale, 1.0])
        shift = np.array([offset, 0.0])
        ref_t = make_sample(ref.scores, ref.labels, ref.segments, ref.covariates * transform + shift)
        cur_t = make_sample(
            cur.scores, cur.labels, cur.segments, cur.covariates * transform + shift, period=PERIOD_CURRENT
        )
        dataset = build_domain_dataset(WeightedSample(ref_t, np.ones(n)), cur_t)
        model = fit_domain_classifier(dataset, config)
        return covariate_weights(model, ref_t, config)

    base = weights_for(1.0, 0.0)
    rescaled = weights_for(37.5, -4.2)
    assert rescaled == pytest.approx(base, abs=1e-8)


def test_null_shift_weight_identity_across_seeds() -> None:
    # Identical covariate law in both periods: mean weight near 1 and
    # the reweighted KS stays near the plain mix-adjusted KS.
    for seed in range(20):
        spec = ScenarioSpec(
            segments=(SegmentSpec("ALL", 1.0, 1.0, 2.0, 2.0),),
            covariate=CovariateShiftSpec(p=1, mode=CovariateMode.NONE),
            n_ref=10_000,
            n_cur=10_000,
            seed=1000 + seed,
        )
        ref, cur = generate(spec)
        config = GovernanceConfig(min_segment_count=1, seed=seed)
        mix = _unit_mix(("ALL",))
        result = run_gate3(ref, cur, frozenset({"ALL"}), mix, config)
        assert abs(result.weight_stats.mean - 1.0) <= 0.05
        ks_mix = ks_of_sample(ref).value  # unit mix weights
        assert abs(result.ks_x_aligned.value - ks_mix) < 0.02


def test_shift_scenario_reweighting_shrinks_separation() -> None:
    # Harder current population: covariate alignment must move the
    # reference KS down, never up.
    for seed in range(20):
        spec = dataclasses.replace(builtin_scenario("S3_A", 2000 + seed), n_ref=10_000, n_cur=10_000)
        ref, cur = generate(spec)
        config = GovernanceConfig(min_segment_count=1, seed=seed)
        result = run_gate3(ref, cur, frozenset({"ALL"}), _unit_mix(("ALL",)), config)
        ks_mix = ks_of_sample(ref).value
        assert result.ks_x_aligned.value <= ks_mix


def test_x_aligned_identity_with_unit_weights() -> None:
    rng = substream(408)
    n = 500
    ref = _covariate_sample(rng, n, 1, PERIOD_REFERENCE)
    cur = _covariate_sample(rng, n, 1, PERIOD_CURRENT)
    model = _hand_model(0.0, 0.5)  # p = eta = 0.5 -> all weights 1
    result = x_aligned_ks(ref, _unit_mix(("A",)), np.ones(n), cur, _CFG, model)
    assert result.ks_x_aligned == ks_of_sample(ref)


def test_x_aligned_gateway_uses_tau() -> None:
    rng = substream(409)
    ref = _covariate_sample(rng, 400, 1, PERIOD_REFERENCE)
    # Scores independent of labels: current-period separation collapses.
    weak_scores = rng.normal(0, 1, 400)
    cur = make_sample(weak_scores, ref.labels, ref.segments, ref.covariates, period=PERIOD_CURRENT)
    model = _hand_model(0.0, 0.5)
    result = x_aligned_ks(ref, _unit_mix(("A",)), np.ones(400), cur, _CFG, model)
    assert result.pct_x_aligned < _CFG.tau
    assert result.gateway is Gate3Gateway.ESCALATE_TO_STEP4


def test_holdout_auroc_is_deterministic_and_reported() -> None:
    rng = substream(410)
    n = 2000
    ref = _covariate_sample(rng, n, 1, PERIOD_REFERENCE)
    cur_covs = rng.normal(0.8, 1, (n, 1))  # detectable shift
    cur = make_sample(
        rng.normal(0, 1, n) + 1.5 * np.concatenate([[0, 1], (rng.random(n - 2) < 0.3).astype(int)]),
        np.concatenate([[0, 1], (rng.random(n - 2) < 0.3).astype(int)]),
        ["A"] * n,
        cur_covs,
        period=PERIOD_CURRENT,
    )
    config = GovernanceConfig(min_segment_count=1, holdout_fraction=0.3, seed=5)
    dataset = build_domain_dataset(WeightedSample(ref, np.ones(n)), cur)
    first = fit_domain_classifier(dataset, config)
    second = fit_domain_classifier(dataset, config)
    assert first.eval_auroc is not None
    assert first.eval_auroc == second.eval_auroc
    assert first.eval_auroc == pytest.approx(first.train_auroc, abs=0.05)


def test_run_gate3_end_to_end_on_segmented_data() -> None:
    rng = substream(411)
    ref = _covariate_sample(rng, 600, 2, PERIOD_REFERENCE, segments=("A", "B"))
    cur = _covariate_sample(rng, 600, 2, PERIOD_CURRENT, segments=("A", "B"))
    part = partition_support(ref, cur, 1)
    mix = compute_mix_weights(ref, cur, part)
    result = run_gate3(ref, cur, part.common, mix, GovernanceConfig(min_segment_count=1))
    assert 0.4 <= result.auroc <= 0.6
    assert result.gateway is Gate3Gateway.EXPLAINED_BY_COVARIATE_SHIFT
    assert result.weight_stats.min >= 0.01
    assert result.weight_stats.max <= 100.0


def test_probability_prediction_round_trip() -> None:
    rng = substream(412)
    ref = _covariate_sample(rng, 300, 1, PERIOD_REFERENCE)
    cur = make_sample(
        ref.scores, ref.labels, ref.segments, ref.covariates + 1.0, period=PERIOD_CURRENT
    )
    dataset = build_domain_dataset(WeightedSample(ref, np.ones(300)), cur)
    model = fit_domain_classifier(dataset, _CFG)
    probs = predict_shift_probability(model, ref.covariates, ref.segments)
    assert probs.shape == (300,)
    assert np.all((probs > 0) & (probs < 1))
    # Higher covariate -> more current-period-like.
    assert probs[np.argmax(ref.covariates[:, 0])] > probs[np.argmin(ref.covariates[:, 0])]
