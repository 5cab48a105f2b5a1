"""Sequential orchestration of the diagnostic gates.

Step 1 always runs. Step 2 runs only on a confirmed breach, Step 3
only when the aligned residual still breaches, and the terminal
classification attributes any gap surviving both alignments to
model-related degradation (an escalation outcome with fixed advisory
codes; no further computation). Conditions under which a stage cannot
be evaluated stop the pipeline with DEGENERATE_STOPPED and a warning
naming the condition.

``full_trace=True`` additionally computes stages that the gateways
would skip, for validation studies; the normative gateway fields and
the final diagnosis are unaffected, and provenance records the mode.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from typing import Any

from . import __version__
from .config import GovernanceConfig
from .data import PeriodSample, serialize_period_csv
from .errors import DegenerateInputError, NoCovariatesError
from .gate1 import Gate1Classification, Gate1Result, is_table_extension, run_gate1
from .gate2 import DecompositionResult, Gate2Gateway, decompose
from .gate3 import CovariateShiftResult, Gate3Gateway, run_gate3
from .ks import KsValue

SCHEMA_VERSION = 1

#: Fraction of dropped bootstrap replicates above which a warning fires.
_DROPPED_REPLICATE_WARN_FRACTION = 0.01

#: Component percentage magnitude below which no advisory code is emitted.
_ADVISORY_MATERIALITY = 0.01


class FinalDiagnosis(str, enum.Enum):
    NO_ACTION_SAMPLING_VARIATION = "NO_ACTION_SAMPLING_VARIATION"
    SIGNIFICANT_NO_BREACH = "SIGNIFICANT_NO_BREACH"
    MONITOR_BREACH_NOT_CONFIRMED = "MONITOR_BREACH_NOT_CONFIRMED"
    EXPLAINED_BY_COMPOSITION = "EXPLAINED_BY_COMPOSITION"
    EXPLAINED_BY_COVARIATE_SHIFT = "EXPLAINED_BY_COVARIATE_SHIFT"
    MODEL_DEGRADATION_ESCALATION = "MODEL_DEGRADATION_ESCALATION"
    DEGENERATE_STOPPED = "DEGENERATE_STOPPED"


# Fixed advisory vocabulary; governance prose becomes auditable codes.
ADVISORY_CONTINUE_MONITORING = "CONTINUE_STANDARD_MONITORING"
ADVISORY_INCREASE_FREQUENCY = "INCREASE_MONITORING_FREQUENCY"
ADVISORY_CUR_ONLY_SEGMENTS = "CUR_ONLY_SEGMENT_MONITORING"
ADVISORY_REFERENCE_REFRESH = "REFERENCE_BENCHMARK_REFRESH"
ADVISORY_SEGMENT_MONITORING = "SEGMENT_LEVEL_MONITORING"
ADVISORY_MIX_BENCHMARK = "MIX_ADJUSTED_BENCHMARK"
ADVISORY_POPULATION_SHIFT = "POPULATION_SHIFT_REVIEW"
ADVISORY_REWEIGHTED_BENCHMARK = "COVARIATE_REWEIGHTED_BENCHMARK"
ADVISORY_RECALIBRATION = "RECALIBRATION_REVIEW"
ADVISORY_CHALLENGER = "CHALLENGER_MODEL_ANALYSIS"
ADVISORY_FEATURE_REVIEW = "FEATURE_REVIEW"
ADVISORY_SEGMENTATION = "SEGMENTATION_REDESIGN"
ADVISORY_REDEVELOPMENT = "MODEL_REDEVELOPMENT_REVIEW"
ADVISORY_DATA_QUALITY = "DATA_QUALITY_REVIEW"

_STEP4_CODES = (
    ADVISORY_RECALIBRATION,
    ADVISORY_CHALLENGER,
    ADVISORY_FEATURE_REVIEW,
    ADVISORY_SEGMENTATION,
    ADVISORY_REDEVELOPMENT,
)


@dataclasses.dataclass(frozen=True)
class DiagnosticReport:
    config: GovernanceConfig
    gate1: Gate1Result | None
    gate2: DecompositionResult | None
    gate3: CovariateShiftResult | None
    final_diagnosis: FinalDiagnosis
    advisory_codes: tuple[str, ...]
    warnings: tuple[str, ...]
    provenance: dict[str, Any]


def sample_digest(sample: PeriodSample) -> str:
    """SHA-256 of the sample's canonical CSV serialization."""
    return hashlib.sha256(serialize_period_csv(sample).encode("utf-8")).hexdigest()


def _composition_codes(gate2: DecompositionResult) -> list[str]:
    codes: list[str] = []
    pct = gate2.pct_components
    if abs(pct["cur_only"]) >= _ADVISORY_MATERIALITY:
        codes.append(ADVISORY_CUR_ONLY_SEGMENTS)
    if abs(pct["ref_only"]) >= _ADVISORY_MATERIALITY:
        codes.append(ADVISORY_REFERENCE_REFRESH)
    if abs(pct["mix"]) >= _ADVISORY_MATERIALITY:
        codes.extend((ADVISORY_SEGMENT_MONITORING, ADVISORY_MIX_BENCHMARK))
    return codes


def _advisory_codes(
    diagnosis: FinalDiagnosis, gate2: DecompositionResult | None
) -> tuple[str, ...]:
    codes: list[str] = []
    if diagnosis in (
        FinalDiagnosis.NO_ACTION_SAMPLING_VARIATION,
        FinalDiagnosis.SIGNIFICANT_NO_BREACH,
    ):
        codes.append(ADVISORY_CONTINUE_MONITORING)
    elif diagnosis is FinalDiagnosis.MONITOR_BREACH_NOT_CONFIRMED:
        codes.append(ADVISORY_INCREASE_FREQUENCY)
    elif diagnosis is FinalDiagnosis.EXPLAINED_BY_COMPOSITION:
        assert gate2 is not None
        codes.extend(_composition_codes(gate2))
        if not codes:
            codes.append(ADVISORY_MIX_BENCHMARK)
    elif diagnosis is FinalDiagnosis.EXPLAINED_BY_COVARIATE_SHIFT:
        codes.extend((ADVISORY_POPULATION_SHIFT, ADVISORY_REWEIGHTED_BENCHMARK))
        if gate2 is not None:
            codes.extend(_composition_codes(gate2))
    elif diagnosis is FinalDiagnosis.MODEL_DEGRADATION_ESCALATION:
        codes.extend(_STEP4_CODES)
        if gate2 is not None:
            codes.extend(_composition_codes(gate2))
    elif diagnosis is FinalDiagnosis.DEGENERATE_STOPPED:
        codes.append(ADVISORY_DATA_QUALITY)
    seen: dict[str, None] = {}
    for code in codes:
        seen.setdefault(code)
    return tuple(seen)


def run_diagnosis(
    ref: PeriodSample,
    cur: PeriodSample,
    config: GovernanceConfig,
    full_trace: bool = False,
    input_digests: tuple[str, str] | None = None,
) -> DiagnosticReport:
    """Run the gateway sequence and assemble the report.

    The report is a pure function of (ref, cur, config, full_trace):
    reruns and different worker counts produce byte-identical JSON.
    """
    warnings: list[str] = []
    gate1: Gate1Result | None = None
    gate2: DecompositionResult | None = None
    gate3: CovariateShiftResult | None = None
    diagnosis: FinalDiagnosis | None = None

    try:
        gate1 = run_gate1(ref, cur, config)
        dropped = config.bootstrap - gate1.replicates_used
        if dropped > _DROPPED_REPLICATE_WARN_FRACTION * config.bootstrap:
            warnings.append(
                f"BOOTSTRAP_DEGENERATE_REPLICATES: dropped {dropped} of {config.bootstrap} "
                f"replicates with zero reference KS"
            )
        if is_table_extension(gate1.ci_low, gate1.ci_high, config.tau):
            warnings.append(
                "GATE1_DECISION_TABLE_EXTENSION: interval fell outside the four canonical "
                "cells and was classified by the conservative extension"
            )
    except DegenerateInputError as exc:
        warnings.append(f"{type(exc).__name__}: {exc}")
        diagnosis = FinalDiagnosis.DEGENERATE_STOPPED

    if diagnosis is None and gate1 is not None:
        if gate1.classification is Gate1Classification.NO_DETERIORATION:
            diagnosis = FinalDiagnosis.NO_ACTION_SAMPLING_VARIATION
        elif gate1.classification is Gate1Classification.SIGNIFICANT_NO_BREACH:
            diagnosis = FinalDiagnosis.SIGNIFICANT_NO_BREACH
        elif gate1.classification is Gate1Classification.BREACH_NOT_CONFIRMED:
            diagnosis = FinalDiagnosis.MONITOR_BREACH_NOT_CONFIRMED

    if diagnosis is None:  # confirmed breach: decompose
        try:
            gate2 = decompose(ref, cur, config)
        except DegenerateInputError as exc:
            warnings.append(f"{type(exc).__name__}: {exc}")
            diagnosis = FinalDiagnosis.DEGENERATE_STOPPED
        else:
            if gate2.gateway is Gate2Gateway.EXPLAINED_BY_COMPOSITION:
                diagnosis = FinalDiagnosis.EXPLAINED_BY_COMPOSITION

    if diagnosis is None:  # residual breach survives alignment: covariates
        assert gate2 is not None
        try:
            gate3 = run_gate3(ref, cur, gate2.partition.common, gate2.mix, config)
        except DegenerateInputError as exc:
            warnings.append(f"{type(exc).__name__}: {exc}")
            diagnosis = FinalDiagnosis.DEGENERATE_STOPPED
        else:
            diagnosis = (
                FinalDiagnosis.MODEL_DEGRADATION_ESCALATION
                if gate3.gateway is Gate3Gateway.ESCALATE_TO_STEP4
                else FinalDiagnosis.EXPLAINED_BY_COVARIATE_SHIFT
            )

    if full_trace:
        if gate2 is None:
            try:
                gate2 = decompose(ref, cur, config)
            except DegenerateInputError as exc:
                warnings.append(f"FULL_TRACE_GATE2_UNAVAILABLE: {type(exc).__name__}: {exc}")
        if gate3 is None and gate2 is not None:
            try:
                gate3 = run_gate3(ref, cur, gate2.partition.common, gate2.mix, config)
            except (DegenerateInputError, NoCovariatesError) as exc:
                warnings.append(f"FULL_TRACE_GATE3_UNAVAILABLE: {type(exc).__name__}: {exc}")

    if gate3 is not None and gate3.shift_negligible:
        warnings.append(
            "NEGLIGIBLE_COVARIATE_SHIFT: domain classifier is close to uninformative; "
            "the reweighted benchmark moves little"
        )
    if gate3 is not None and gate3.classifier.separation_flag:
        warnings.append(
            "DOMAIN_CLASSIFIER_SEPARATION: near-perfect class separation; importance "
            "weights rest on the penalty and clipping"
        )
    if gate3 is not None and not gate3.classifier.converged:
        warnings.append("DOMAIN_CLASSIFIER_DID_NOT_CONVERGE: coefficient updates did not settle")

    digests = input_digests or (sample_digest(ref), sample_digest(cur))
    provenance = {
        "ref_digest": digests[0],
        "cur_digest": digests[1],
        "seed": config.seed,
        "tool_version": __version__,
        "mode": "full_trace" if full_trace else "normative",
    }
    return DiagnosticReport(
        config=config,
        gate1=gate1,
        gate2=gate2,
        gate3=gate3,
        final_diagnosis=diagnosis,
        advisory_codes=_advisory_codes(diagnosis, gate2),
        warnings=tuple(warnings),
        provenance=provenance,
    )


# --- serialization -----------------------------------------------------------


def _round10(x: float) -> float:
    """Canonical numeric form: 10 significant digits."""
    return float(f"{x:.10g}")


def _ks_dict(ks: KsValue) -> dict[str, float]:
    return {"value": _round10(ks.value), "argmax_score": _round10(ks.argmax_score)}


def _gate1_dict(gate1: Gate1Result | None, config: GovernanceConfig) -> dict[str, Any] | None:
    if gate1 is None:
        return None
    return {
        "pct_change_observed": _round10(gate1.pct_change_observed),
        "ci_low": _round10(gate1.ci_low),
        "ci_high": _round10(gate1.ci_high),
        "classification": gate1.classification.value,
        "replicates_used": gate1.replicates_used,
        "replicates_dropped": config.bootstrap - gate1.replicates_used,
    }


def _gate2_dict(gate2: DecompositionResult | None) -> dict[str, Any] | None:
    if gate2 is None:
        return None
    return {
        "ks_ref": _ks_dict(gate2.ks_ref),
        "ks_cur": _ks_dict(gate2.ks_cur),
        "ks_ref_com": _ks_dict(gate2.ks_ref_com),
        "ks_cur_com": _ks_dict(gate2.ks_cur_com),
        "ks_mix_adjusted": _ks_dict(gate2.ks_mix_adjusted),
        "components": {
            "cur_only": _round10(gate2.comp_cur_only),
            "residual": _round10(gate2.comp_residual),
            "mix": _round10(gate2.comp_mix),
            "ref_only": _round10(gate2.comp_ref_only),
        },
        "pct_components": {k: _round10(v) for k, v in gate2.pct_components.items()},
        "pct_aligned_residual": _round10(gate2.pct_aligned_residual),
        "gateway": gate2.gateway.value,
        "support": {
            "common": sorted(gate2.partition.common),
            "ref_only": sorted(gate2.partition.ref_only),
            "cur_only": sorted(gate2.partition.cur_only),
        },
        "mix_weights": {
            "shares_ref": {g: _round10(v) for g, v in sorted(gate2.mix.shares_ref.items())},
            "shares_cur": {g: _round10(v) for g, v in sorted(gate2.mix.shares_cur.items())},
            "weight": {g: _round10(v) for g, v in sorted(gate2.mix.weight.items())},
        },
        "per_segment_ks": {
            g: {k: (None if v is None else _round10(v)) for k, v in row.items()}
            for g, row in sorted(gate2.per_segment_ks.items())
        },
    }


def _gate3_dict(gate3: CovariateShiftResult | None) -> dict[str, Any] | None:
    if gate3 is None:
        return None
    clf = gate3.classifier
    return {
        "auroc": _round10(gate3.auroc),
        "shift_negligible": gate3.shift_negligible,
        "eta": _round10(clf.eta),
        "converged": clf.converged,
        "iterations": clf.iterations,
        "separation_flag": clf.separation_flag,
        "weight_stats": {
            "min": _round10(gate3.weight_stats.min),
            "max": _round10(gate3.weight_stats.max),
            "mean": _round10(gate3.weight_stats.mean),
            "fraction_clipped": _round10(gate3.weight_stats.fraction_clipped),
        },
        "ks_x_aligned": _ks_dict(gate3.ks_x_aligned),
        "pct_x_aligned": _round10(gate3.pct_x_aligned),
        "gateway": gate3.gateway.value,
    }


def report_to_dict(report: DiagnosticReport) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config.to_dict(),
        "gate1": _gate1_dict(report.gate1, report.config),
        "gate2": _gate2_dict(report.gate2),
        "gate3": _gate3_dict(report.gate3),
        "final_diagnosis": report.final_diagnosis.value,
        "advisory_codes": list(report.advisory_codes),
        "warnings": list(report.warnings),
        "provenance": report.provenance,
    }


def report_to_json(report: DiagnosticReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"
