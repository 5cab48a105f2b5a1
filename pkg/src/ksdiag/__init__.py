"""Sequential root-cause diagnosis of KS deterioration between scored
portfolio periods: sampling variability, composition change, covariate
shift, or residual model degradation."""

__version__ = "0.1.0"

from .config import GovernanceConfig, load_config_file, resolve_config
from .data import (
    Observation,
    PeriodSample,
    WeightedSample,
    class_counts,
    load_period_csv,
    write_period_csv,
)
from .gate1 import (
    Gate1Classification,
    Gate1Result,
    bootstrap_distribution,
    classify_gate1,
    percentile_ci,
    run_gate1,
    stratified_resample,
)
from .gate2 import (
    DecompositionResult,
    Gate2Gateway,
    MixWeights,
    SupportPartition,
    compute_mix_weights,
    decompose,
    partition_support,
)
from .gate3 import (
    CovariateShiftResult,
    DomainClassifier,
    Gate3Gateway,
    auroc,
    build_domain_dataset,
    covariate_weights,
    fit_domain_classifier,
    run_gate3,
    x_aligned_ks,
)
from .ks import KsValue, ks_of_sample, pct_change, weighted_ks
from .pipeline import (
    DiagnosticReport,
    FinalDiagnosis,
    report_to_dict,
    report_to_json,
    run_diagnosis,
)
from .simulate import (
    CovariateMode,
    CovariateShiftSpec,
    ScenarioId,
    ScenarioSpec,
    SegmentSpec,
    builtin_scenario,
    generate,
)

__all__ = [
    "GovernanceConfig",
    "load_config_file",
    "resolve_config",
    "Observation",
    "PeriodSample",
    "WeightedSample",
    "class_counts",
    "load_period_csv",
    "write_period_csv",
    "Gate1Classification",
    "Gate1Result",
    "bootstrap_distribution",
    "classify_gate1",
    "percentile_ci",
    "run_gate1",
    "stratified_resample",
    "DecompositionResult",
    "Gate2Gateway",
    "MixWeights",
    "SupportPartition",
    "compute_mix_weights",
    "decompose",
    "partition_support",
    "CovariateShiftResult",
    "DomainClassifier",
    "Gate3Gateway",
    "auroc",
    "build_domain_dataset",
    "covariate_weights",
    "fit_domain_classifier",
    "run_gate3",
    "x_aligned_ks",
    "KsValue",
    "ks_of_sample",
    "pct_change",
    "weighted_ks",
    "DiagnosticReport",
    "FinalDiagnosis",
    "report_to_dict",
    "report_to_json",
    "run_diagnosis",
    "CovariateMode",
    "CovariateShiftSpec",
    "ScenarioId",
    "ScenarioSpec",
    "SegmentSpec",
    "builtin_scenario",
    "generate",
]
