"""Step 3: covariate-shift detection and counterfactual reweighting.

A penalized weighted logistic regression (the domain classifier) is
fitted to distinguish current-period rows (Z=1) from mix-adjusted
reference rows (Z=0) on the common support, using covariates plus
one-hot segment indicators as features. Mix weights from Step 2 enter
as instance weights on the Z=0 rows, and the class prior eta is the
weighted prior. The classifier's odds convert to importance weights
  w = (1 - eta) / eta * p / (1 - p),
which are clipped into the configured range, multiplied by the mix
weights, and fed into a weighted KS: the covariate-aligned benchmark.
The gateway compares the remaining percentage change against tau.

Logistic regression is deliberately implemented in-module: its
log-odds are a consistent estimate of the log density ratio, which is
exactly what the importance weight needs, and no heavier model family
is required.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .config import GovernanceConfig
from .data import PeriodSample, WeightedSample
from .errors import NoCovariatesError, SingleClassError, ZeroXAlignedKsError
from .gate2 import MixWeights, mix_weight_vector
from .ks import KS_EPS, KsValue, ks_of_sample, weighted_ks
from .rng import STREAM_HOLDOUT, substream

_L2_PENALTY = 1e-6
_CONVERGENCE_TOL = 1e-8
_MAX_ITERATIONS = 100
_PROB_FLOOR = 1e-12
# Standardized-scale coefficient magnitude beyond which the fit is
# treated as (quasi-)separated.
_SEPARATION_COEF_BOUND = 15.0


class Gate3Gateway(str, enum.Enum):
    EXPLAINED_BY_COVARIATE_SHIFT = "EXPLAINED_BY_COVARIATE_SHIFT"
    ESCALATE_TO_STEP4 = "ESCALATE_TO_STEP4"


@dataclasses.dataclass(frozen=True)
class DomainDataset:
    """Stacked design set for the domain classifier.

    Reference rows come first, then current rows; features are raw
    covariates followed by one-hot segment indicators with the first
    (lexicographically smallest) level dropped as reference category.
    """

    features: np.ndarray
    z: np.ndarray
    instance_weights: np.ndarray
    feature_names: tuple[str, ...]
    segment_levels: tuple[str, ...]
    n_ref: int
    n_cur: int
    single_segment: bool


@dataclasses.dataclass(frozen=True)
class DomainClassifier:
    """Fitted weighted logistic model plus its training diagnostics."""

    coefficients: np.ndarray  # intercept first, then standardized feature terms
    feature_names: tuple[str, ...]
    segment_levels: tuple[str, ...]
    means: np.ndarray
    scales: np.ndarray
    train_auroc: float
    eval_auroc: float | None
    eta: float
    converged: bool
    iterations: int
    separation_flag: bool


@dataclasses.dataclass(frozen=True)
class WeightStats:
    min: float
    max: float
    mean: float
    fraction_clipped: float


@dataclasses.dataclass(frozen=True)
class CovariateShiftResult:
    auroc: float
    shift_negligible: bool
    weight_stats: WeightStats
    ks_x_aligned: KsValue
    pct_x_aligned: float
    gateway: Gate3Gateway
    classifier: DomainClassifier


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _encode_features(
    covariates: np.ndarray, segments: np.ndarray, levels: tuple[str, ...]
) -> np.ndarray:
    n = covariates.shape[0]
    indicators = np.zeros((n, max(len(levels) - 1, 0)), dtype=np.float64)
    if len(levels) > 1:
        index = {seg: j for j, seg in enumerate(levels)}
        for i, seg in enumerate(segments):
            j = index.get(str(seg), 0)
            if j > 0:
                indicators[i, j - 1] = 1.0
    return np.hstack([covariates, indicators])


def build_domain_dataset(
    ref_common: WeightedSample, cur_common: PeriodSample
) -> DomainDataset:
    """Stack mix-weighted reference rows (Z=0) under current rows (Z=1)."""
    p = ref_common.base.p
    if p == 0:
        raise NoCovariatesError("covariate alignment needs at least one covariate column")
    if cur_common.p != p:
        raise ValueError(f"covariate dimensions differ: {p} vs {cur_common.p}")
    levels = tuple(sorted(set(map(str, ref_common.base.segments)) | set(map(str, cur_common.segments))))
    x_ref = _encode_features(ref_common.base.covariates, ref_common.base.segments, levels)
    x_cur = _encode_features(cur_common.covariates, cur_common.segments, levels)
    features = np.vstack([x_ref, x_cur])
    z = np.concatenate(
        [np.zeros(x_ref.shape[0], dtype=np.int8), np.ones(x_cur.shape[0], dtype=np.int8)]
    )
    weights = np.concatenate([ref_common.weights, np.ones(x_cur.shape[0], dtype=np.float64)])
    names = tuple(f"x{j}" for j in range(1, p + 1)) + tuple(
        f"segment={seg}" for seg in levels[1:]
    )
    return DomainDataset(
        features=features,
        z=z,
        instance_weights=weights,
        feature_names=names,
        segment_levels=levels,
        n_ref=x_ref.shape[0],
        n_cur=x_cur.shape[0],
        single_segment=len(levels) == 1,
    )


def _weighted_standardization(x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    total = w.sum()
    means = (w[:, None] * x).sum(axis=0) / total
    variances = (w[:, None] * (x - means) ** 2).sum(axis=0) / total
    scales = np.sqrt(variances)
    scales[scales < 1e-12] = 1.0  # constant column: leave centered, unscaled
    return means, scales


def _irls(
    x: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, bool, int]:
    """Penalized weighted maximum-likelihood logistic fit.

    Newton updates with an L2 penalty on the non-intercept terms;
    converged when the largest coefficient update falls below tol.
    """
    n, k = x.shape
    design = np.hstack([np.ones((n, 1)), x])
    penalty = np.full(k + 1, _L2_PENALTY)
    penalty[0] = 0.0
    beta = np.zeros(k + 1)
    converged = False
    iterations = 0
    for iterations in range(1, _MAX_ITERATIONS + 1):
        prob = np.clip(_sigmoid(design @ beta), _PROB_FLOOR, 1.0 - _PROB_FLOOR)
        gradient = design.T @ (w * (y - prob)) - penalty * beta
        curvature = w * prob * (1.0 - prob)
        hessian = design.T @ (design * curvature[:, None]) + np.diag(penalty)
        try:
            delta = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            delta = np.linalg.solve(hessian + 1e-10 * np.eye(k + 1), gradient)
        beta = beta + delta
        if np.max(np.abs(delta)) < _CONVERGENCE_TOL:
            converged = True
            break
    return beta, converged, iterations


def fit_domain_classifier(
    dataset: DomainDataset, config: GovernanceConfig
) -> DomainClassifier:
    z = dataset.z.astype(np.float64)
    w = dataset.instance_weights
    if not (np.any(dataset.z == 0) and np.any(dataset.z == 1)):
        raise SingleClassError("domain dataset needs both Z classes")

    means, scales = _weighted_standardization(dataset.features, w)
    x = (dataset.features - means) / scales

    m = x.shape[0]
    train = np.ones(m, dtype=bool)
    if config.holdout_fraction > 0:
        order = substream(config.seed, STREAM_HOLDOUT).permutation(m)
        n_eval = int(round(m * config.holdout_fraction))
        # Never hold out so much that a Z class disappears from training.
        eval_rows = order[:n_eval]
        candidate = np.ones(m, dtype=bool)
        candidate[eval_rows] = False
        if np.any(dataset.z[candidate] == 0) and np.any(dataset.z[candidate] == 1):
            train = candidate

    beta, converged, iterations = _irls(x[train], z[train], w[train])
    prob_train = _sigmoid(np.hstack([np.ones((train.sum(), 1)), x[train]]) @ beta)
    train_auroc = auroc(prob_train, dataset.z[train], w[train])
    eval_auroc: float | None = None
    if not train.all():
        held = ~train
        prob_eval = _sigmoid(np.hstack([np.ones((held.sum(), 1)), x[held]]) @ beta)
        try:
            eval_auroc = auroc(prob_eval, dataset.z[held], w[held])
        except SingleClassError:
            eval_auroc = None

    eta = float(w[dataset.z == 1].sum() / w.sum())
    separation = bool(
        np.max(np.abs(beta[1:])) > _SEPARATION_COEF_BOUND if beta.size > 1 else False
    ) or train_auroc >= 1.0 - 1e-12
    return DomainClassifier(
        coefficients=beta,
        feature_names=dataset.feature_names,
        segment_levels=dataset.segment_levels,
        means=means,
        scales=scales,
        train_auroc=train_auroc,
        eval_auroc=eval_auroc,
        eta=eta,
        converged=converged,
        iterations=iterations,
        separation_flag=separation,
    )


def predict_shift_probability(
    model: DomainClassifier, covariates: np.ndarray, segments: np.ndarray
) -> np.ndarray:
    """Fitted probability that a row belongs to the current period."""
    raw = _encode_features(covariates, segments, model.segment_levels)
    x = (raw - model.means) / model.scales
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    return np.clip(_sigmoid(design @ model.coefficients), _PROB_FLOOR, 1.0 - _PROB_FLOOR)


def auroc(
    scores: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray | None = None,
) -> float:
    """Weighted pairwise ranking probability (ties count half).

    Computed by a single sort: walking groups of equal scores and
    accumulating positive-weight x cumulative-negative-weight products
    gives the exact pair sum in O(n log n).
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels)
    if weights is None:
        weights = np.ones(scores.size, dtype=np.float64)
    else:
        weights = np.ascontiguousarray(weights, dtype=np.float64)
    pos = labels == 1
    w_pos_total = float(weights[pos].sum())
    w_neg_total = float(weights[~pos].sum())
    if w_pos_total <= 0 or w_neg_total <= 0:
        raise SingleClassError("AUROC needs positive weight in both classes")

    order = np.argsort(scores, kind="stable")
    s = scores[order]
    w = weights[order]
    is_pos = pos[order]
    # Group boundaries of equal scores.
    boundaries = np.flatnonzero(np.diff(s) != 0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [s.size]))
    wins = 0.0
    cum_neg = 0.0
    for a, b in zip(starts, ends):
        chunk_pos = float(w[a:b][is_pos[a:b]].sum())
        chunk_neg = float(w[a:b][~is_pos[a:b]].sum())
        wins += chunk_pos * cum_neg + 0.5 * chunk_pos * chunk_neg
        cum_neg += chunk_neg
    return wins / (w_pos_total * w_neg_total)


def covariate_weights(
    model: DomainClassifier, ref_common: PeriodSample, config: GovernanceConfig
) -> np.ndarray:
    """Importance weight per reference row, clipped into the
    configured range."""
    prob = predict_shift_probability(model, ref_common.covariates, ref_common.segments)
    raw = (1.0 - model.eta) / model.eta * prob / (1.0 - prob)
    return np.clip(raw, config.clip_low, config.clip_high)


def _weight_stats(weights: np.ndarray, config: GovernanceConfig) -> WeightStats:
    # Clipped rows sit exactly at a bound; interior raw values hit a
    # bound only on a null set, so counting boundary values is exact.
    at_bound = (weights <= config.clip_low) | (weights >= config.clip_high)
    return WeightStats(
        min=float(weights.min()),
        max=float(weights.max()),
        mean=float(weights.mean()),
        fraction_clipped=float(at_bound.mean()),
    )


def x_aligned_ks(
    ref_common: PeriodSample,
    mix: MixWeights,
    cov_w: np.ndarray,
    cur_common: PeriodSample,
    config: GovernanceConfig,
    classifier: DomainClassifier,
) -> CovariateShiftResult:
    """Combine mix and covariate weights, compute the covariate-aligned
    benchmark KS, and apply the Step 3 gateway."""
    total_w = mix_weight_vector(ref_common, mix) * cov_w
    good = ref_common.labels == 0
    bad = ref_common.labels == 1
    ks_x = weighted_ks(
        ref_common.scores[good],
        ref_common.scores[bad],
        total_w[good],
        total_w[bad],
    )
    ks_cur_com = ks_of_sample(cur_common)
    if ks_x.value <= KS_EPS:
        raise ZeroXAlignedKsError(f"covariate-aligned KS {ks_x.value} is at or below the {KS_EPS} guard")
    pct_x = (ks_cur_com.value - ks_x.value) / ks_x.value
    gateway = (
        Gate3Gateway.ESCALATE_TO_STEP4
        if pct_x < config.tau
        else Gate3Gateway.EXPLAINED_BY_COVARIATE_SHIFT
    )
    reported_auroc = classifier.eval_auroc if classifier.eval_auroc is not None else classifier.train_auroc
    return CovariateShiftResult(
        auroc=reported_auroc,
        shift_negligible=reported_auroc < config.auroc_negligible,
        weight_stats=_weight_stats(cov_w, config),
        ks_x_aligned=ks_x,
        pct_x_aligned=pct_x,
        gateway=gateway,
        classifier=classifier,
    )


def _restrict(sample: PeriodSample, segments: frozenset[str]) -> PeriodSample:
    keep = np.isin(sample.segments, sorted(segments))
    return PeriodSample(
        period=sample.period,
        scores=sample.scores[keep],
        labels=sample.labels[keep],
        segments=sample.segments[keep],
        covariates=sample.covariates[keep],
    )


def run_gate3(
    ref: PeriodSample,
    cur: PeriodSample,
    common: frozenset[str],
    mix: MixWeights,
    config: GovernanceConfig,
) -> CovariateShiftResult:
    """Full Step 3 on the common-support restriction of both periods."""
    ref_common = _restrict(ref, common)
    cur_common = _restrict(cur, common)
    ref_weighted = WeightedSample(ref_common, mix_weight_vector(ref_common, mix))
    dataset = build_domain_dataset(ref_weighted, cur_common)
    classifier = fit_domain_classifier(dataset, config)
    cov_w = covariate_weights(classifier, ref_common, config)
    return x_aligned_ks(ref_common, mix, cov_w, cur_common, config, classifier)
