"""Step 2: additive decomposition of the KS change into composition
effects and a residual aligned gap.

Five KS quantities are computed: full-sample reference and current
KS, both restricted to the common-support segments, and the
mix-adjusted reference KS in which each common-support reference row
is reweighted by (current share / reference share) of its segment.
Their telescoping differences attribute the total change to a
current-only universe effect, a residual aligned gap, a mix effect
within common support, and a reference-only universe effect; the four
components sum to KS_cur - KS_ref by construction.

The gateway compares the aligned residual percentage change (residual
gap over mix-adjusted KS) against the same breach threshold tau used
in Step 1; escalation fires only on that term.
"""

from __future__ import annotations

import dataclasses
import enum
from collections import Counter

import numpy as np

from .config import GovernanceConfig
from .data import PeriodSample, WeightedSample
from .errors import (
    EmptyClassAfterFilterError,
    EmptyCommonSupportError,
    ZeroMixAdjustedKsError,
    ZeroReferenceKsError,
)
from .ks import KS_EPS, KsValue, ks_of_sample

COMPONENT_ORDER = ("cur_only", "residual", "mix", "ref_only")


class Gate2Gateway(str, enum.Enum):
    EXPLAINED_BY_COMPOSITION = "EXPLAINED_BY_COMPOSITION"
    ESCALATE_TO_STEP3 = "ESCALATE_TO_STEP3"


@dataclasses.dataclass(frozen=True)
class SupportPartition:
    """Segments split into common support and period-exclusive sets."""

    common: frozenset[str]
    ref_only: frozenset[str]
    cur_only: frozenset[str]


@dataclasses.dataclass(frozen=True)
class MixWeights:
    """Per-segment shares over common-support rows and their ratio."""

    shares_ref: dict[str, float]
    shares_cur: dict[str, float]
    weight: dict[str, float]


@dataclasses.dataclass(frozen=True)
class DecompositionResult:
    ks_ref: KsValue
    ks_cur: KsValue
    ks_ref_com: KsValue
    ks_cur_com: KsValue
    ks_mix_adjusted: KsValue
    comp_cur_only: float
    comp_residual: float
    comp_mix: float
    comp_ref_only: float
    pct_components: dict[str, float]
    pct_aligned_residual: float
    gateway: Gate2Gateway
    partition: SupportPartition
    mix: MixWeights
    # Non-normative diagnostic extra: per-segment unit-weight KS where
    # computable (None when a segment lacks a class in that period).
    per_segment_ks: dict[str, dict[str, float | None]]


def partition_support(
    ref: PeriodSample, cur: PeriodSample, min_segment_count: int
) -> SupportPartition:
    """Split segments by period presence.

    A segment enters the common support only with at least
    ``min_segment_count`` observations in each period. A segment seen
    in both periods but failing the threshold is treated as
    period-exclusive on the side where it has more observations (tie:
    current), keeping the three sets disjoint.
    """
    ref_counts = Counter(str(s) for s in ref.segments)
    cur_counts = Counter(str(s) for s in cur.segments)
    common: set[str] = set()
    ref_only: set[str] = set()
    cur_only: set[str] = set()
    for seg in set(ref_counts) | set(cur_counts):
        n_ref = ref_counts.get(seg, 0)
        n_cur = cur_counts.get(seg, 0)
        if n_ref >= min_segment_count and n_cur >= min_segment_count:
            common.add(seg)
        elif n_ref > n_cur:
            ref_only.add(seg)
        else:
            cur_only.add(seg)
    if not common:
        raise EmptyCommonSupportError(
            f"no segment reaches {min_segment_count} observations in both periods"
        )
    return SupportPartition(frozenset(common), frozenset(ref_only), frozenset(cur_only))


def compute_mix_weights(
    ref: PeriodSample, cur: PeriodSample, part: SupportPartition
) -> MixWeights:
    """Shares over common-support rows only; weight = cur share / ref share."""
    ref_counts = Counter(str(s) for s in ref.segments if str(s) in part.common)
    cur_counts = Counter(str(s) for s in cur.segments if str(s) in part.common)
    n_ref = sum(ref_counts.values())
    n_cur = sum(cur_counts.values())
    segs = sorted(part.common)
    shares_ref = {g: ref_counts[g] / n_ref for g in segs}
    shares_cur = {g: cur_counts[g] / n_cur for g in segs}
    weight = {g: shares_cur[g] / shares_ref[g] for g in segs}
    return MixWeights(shares_ref=shares_ref, shares_cur=shares_cur, weight=weight)


def mix_weight_vector(sample: PeriodSample, mix: MixWeights) -> np.ndarray:
    """Per-row product-mix weight (1.0 for rows outside common support,
    which any common-support restriction filters out)."""
    return np.array([mix.weight.get(str(s), 1.0) for s in sample.segments], dtype=np.float64)


def _per_segment_ks(
    ref: PeriodSample, cur: PeriodSample, common: frozenset[str]
) -> dict[str, dict[str, float | None]]:
    table: dict[str, dict[str, float | None]] = {}
    for seg in sorted(common):
        row: dict[str, float | None] = {}
        for key, sample in (("ref", ref), ("cur", cur)):
            try:
                row[key] = ks_of_sample(sample, restrict_to={seg}).value
            except EmptyClassAfterFilterError:
                row[key] = None
        table[seg] = row
    return table


def decompose(
    ref: PeriodSample, cur: PeriodSample, config: GovernanceConfig
) -> DecompositionResult:
    part = partition_support(ref, cur, config.min_segment_count)
    ks_ref = ks_of_sample(ref)
    ks_cur = ks_of_sample(cur)
    if ks_ref.value <= KS_EPS:
        raise ZeroReferenceKsError(f"reference KS {ks_ref.value} is at or below the {KS_EPS} guard")
    ks_ref_com = ks_of_sample(ref, restrict_to=part.common)
    ks_cur_com = ks_of_sample(cur, restrict_to=part.common)
    mix = compute_mix_weights(ref, cur, part)
    ks_mix_adjusted = ks_of_sample(
        WeightedSample(ref, mix_weight_vector(ref, mix)), restrict_to=part.common
    )

    comp_cur_only = ks_cur.value - ks_cur_com.value
    comp_residual = ks_cur_com.value - ks_mix_adjusted.value
    comp_mix = ks_mix_adjusted.value - ks_ref_com.value
    comp_ref_only = ks_ref_com.value - ks_ref.value
    components = (comp_cur_only, comp_residual, comp_mix, comp_ref_only)
    pct_components = {
        name: comp / ks_ref.value for name, comp in zip(COMPONENT_ORDER, components)
    }

    if ks_mix_adjusted.value <= KS_EPS:
        raise ZeroMixAdjustedKsError(
            f"mix-adjusted KS {ks_mix_adjusted.value} is at or below the {KS_EPS} guard"
        )
    pct_aligned_residual = (ks_cur_com.value - ks_mix_adjusted.value) / ks_mix_adjusted.value
    gateway = (
        Gate2Gateway.ESCALATE_TO_STEP3
        if pct_aligned_residual < config.tau
        else Gate2Gateway.EXPLAINED_BY_COMPOSITION
    )
    return DecompositionResult(
        ks_ref=ks_ref,
        ks_cur=ks_cur,
        ks_ref_com=ks_ref_com,
        ks_cur_com=ks_cur_com,
        ks_mix_adjusted=ks_mix_adjusted,
        comp_cur_only=comp_cur_only,
        comp_residual=comp_residual,
        comp_mix=comp_mix,
        comp_ref_only=comp_ref_only,
        pct_components=pct_components,
        pct_aligned_residual=pct_aligned_residual,
        gateway=gateway,
        partition=part,
        mix=mix,
        per_segment_ks=_per_segment_ks(ref, cur, part.common),
    )
