"""Plain-text rendering of a diagnostic report.

Works on the serialized report dict (schema version 1) so it can
render both in-process results and report files. KS quantities are
stored as fractions; formatting as percentages happens only here.
"""

from __future__ import annotations

from typing import Any

from .errors import SchemaError
from .pipeline import SCHEMA_VERSION

_COMPONENT_LABELS = (
    ("cur_only", "Current-only universe"),
    ("residual", "Residual aligned gap"),
    ("mix", "Mix within common support"),
    ("ref_only", "Reference-only universe"),
)


def _pct(x: float) -> str:
    return f"{100.0 * x:+.2f}%"


def _frac(x: float) -> str:
    return f"{x:.4f}"


def validate_report_dict(report: dict[str, Any]) -> None:
    if not isinstance(report, dict):
        raise SchemaError("report must be a JSON object")
    version = report.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    missing = [
        key
        for key in ("config", "gate1", "gate2", "gate3", "final_diagnosis", "advisory_codes", "warnings", "provenance")
        if key not in report
    ]
    if missing:
        raise SchemaError(f"report is missing keys: {', '.join(missing)}")


def render_report(report: dict[str, Any]) -> str:
    """Deterministic text summary mirroring the step sequence."""
    validate_report_dict(report)
    config = report["config"]
    provenance = report["provenance"]
    lines: list[str] = []
    lines.append("KS deterioration diagnosis")
    lines.append("==========================")
    lines.append(f"tool version {provenance.get('tool_version')} | seed {provenance.get('seed')} | mode {provenance.get('mode')}")
    lines.append(f"reference digest {provenance.get('ref_digest')}")
    lines.append(f"current digest   {provenance.get('cur_digest')}")
    lines.append("")

    tau = config["tau"]
    gate1 = report["gate1"]
    lines.append("Step 1: breach confirmation")
    if gate1 is None:
        lines.append("  not available (degenerate input)")
    else:
        lines.append(f"  observed KS change {_pct(gate1['pct_change_observed'])}")
        lines.append(
            f"  bootstrap CI [{_pct(gate1['ci_low'])}, {_pct(gate1['ci_high'])}]"
            f" vs threshold {_pct(tau)}"
            f" ({gate1['replicates_used']} replicates, {gate1['replicates_dropped']} dropped)"
        )
        lines.append(f"  classification: {gate1['classification']}")
    lines.append("")

    gate2 = report["gate2"]
    if gate2 is not None:
        lines.append("Step 2: composition decomposition")
        lines.append(
            f"  KS reference {_frac(gate2['ks_ref']['value'])} -> current {_frac(gate2['ks_cur']['value'])}"
        )
        lines.append(
            f"  common support {', '.join(gate2['support']['common'])}"
            f" | ref-only {', '.join(gate2['support']['ref_only']) or '-'}"
            f" | cur-only {', '.join(gate2['support']['cur_only']) or '-'}"
        )
        lines.append("  component waterfall (KS units, % of reference KS):")
        total = 0.0
        for key, label in _COMPONENT_LABELS:
            comp = gate2["components"][key]
            total += comp
            lines.append(f"    {label:<28} {comp:+.4f}  {_pct(gate2['pct_components'][key])}")
        lines.append(f"    {'Total':<28} {total:+.4f}")
        lines.append(
            f"  aligned residual change {_pct(gate2['pct_aligned_residual'])} vs threshold {_pct(tau)}"
        )
        lines.append(f"  gateway: {gate2['gateway']}")
        lines.append("")

    gate3 = report["gate3"]
    if gate3 is not None:
        lines.append("Step 3: covariate alignment")
        negligible = " (negligible shift)" if gate3["shift_negligible"] else ""
        lines.append(f"  domain classifier AUROC {gate3['auroc']:.4f}{negligible}")
        stats = gate3["weight_stats"]
        lines.append(
            f"  covariate weights min {stats['min']:.4f} max {stats['max']:.4f} "
            f"mean {stats['mean']:.4f} clipped {100.0 * stats['fraction_clipped']:.2f}%"
        )
        lines.append(f"  covariate-aligned KS {_frac(gate3['ks_x_aligned']['value'])}")
        lines.append(
            f"  remaining change after alignment {_pct(gate3['pct_x_aligned'])} vs threshold {_pct(tau)}"
        )
        lines.append(f"  gateway: {gate3['gateway']}")
        lines.append("")

    lines.append(f"Final diagnosis: {report['final_diagnosis']}")
    if report["advisory_codes"]:
        lines.append("Advisory codes: " + ", ".join(report["advisory_codes"]))
    if report["warnings"]:
        lines.append("Warnings:")
        for warning in report["warnings"]:
            lines.append(f"  - {warning}")
    return "\n".join(lines) + "\n"
