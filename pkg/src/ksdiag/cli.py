"""Command-line interface: diagnose, simulate, render, selftest."""

from __future__ import annotations

import json
import secrets
import sys
from pathlib import Path

import click

from . import __version__
from .config import load_config_file, resolve_config
from .data import PERIOD_CURRENT, PERIOD_REFERENCE, load_period_csv
from .errors import ConfigError, InvalidSpecError, KsDiagError, SchemaError
from .pipeline import FinalDiagnosis, report_to_dict, run_diagnosis
from .render import render_report
from .selftest import run_selftest
from .simulate import ScenarioId, builtin_scenario, spec_from_dict, spec_to_dict, write_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MONITOR = 2
EXIT_ESCALATION = 3
EXIT_DEGENERATE = 4

_EXIT_BY_DIAGNOSIS = {
    FinalDiagnosis.NO_ACTION_SAMPLING_VARIATION: EXIT_OK,
    FinalDiagnosis.SIGNIFICANT_NO_BREACH: EXIT_OK,
    FinalDiagnosis.EXPLAINED_BY_COMPOSITION: EXIT_OK,
    FinalDiagnosis.EXPLAINED_BY_COVARIATE_SHIFT: EXIT_OK,
    FinalDiagnosis.MONITOR_BREACH_NOT_CONFIRMED: EXIT_MONITOR,
    FinalDiagnosis.MODEL_DEGRADATION_ESCALATION: EXIT_ESCALATION,
    FinalDiagnosis.DEGENERATE_STOPPED: EXIT_DEGENERATE,
}


def _resolve_seed(seed: int | None, seed_from_entropy: bool) -> int:
    if seed is not None:
        return seed
    if seed_from_entropy:
        return secrets.randbits(63)
    raise click.UsageError("provide --seed N, or --seed-from-entropy for a non-reproducible run")


def _dump_json(payload: dict, output: Path | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")


@click.group()
@click.version_option(version=__version__, prog_name="ksdiag")
def cli() -> None:
    """Diagnose KS deterioration between two scored portfolio periods."""


@cli.command()
@click.argument("ref_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("cur_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tau", type=float, default=None, help="Breach threshold (negative fraction).")
@click.option("--alpha", type=float, default=None, help="Bootstrap significance level.")
@click.option("--bootstrap", type=int, default=None, help="Bootstrap replication count.")
@click.option("--seed", type=int, default=None, help="RNG seed (required unless --seed-from-entropy).")
@click.option("--seed-from-entropy", is_flag=True, help="Draw a random seed (non-reproducible).")
@click.option("--min-segment-count", type=int, default=None, help="Minimum per-period rows for common support.")
@click.option("--clip-low", type=float, default=None, help="Lower covariate-weight clip.")
@click.option("--clip-high", type=float, default=None, help="Upper covariate-weight clip.")
@click.option("--auroc-negligible", type=float, default=None, help="AUROC below which shift is flagged negligible.")
@click.option("--threads", type=int, default=None, help="Worker count for bootstrap replicates (0 = auto).")
@click.option("--full-trace", is_flag=True, help="Also compute stages the gateways would skip.")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="key=value config file; flags override it.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Report JSON path (default: stdout).")
@click.option("--summary", is_flag=True, help="Print the text summary instead of raw JSON.")
def diagnose(
    ref_csv: Path,
    cur_csv: Path,
    tau: float | None,
    alpha: float | None,
    bootstrap: int | None,
    seed: int | None,
    seed_from_entropy: bool,
    min_segment_count: int | None,
    clip_low: float | None,
    clip_high: float | None,
    auroc_negligible: float | None,
    threads: int | None,
    full_trace: bool,
    config_file: Path | None,
    output: Path | None,
    summary: bool,
) -> int:
    """Run the full diagnosis on a reference and a current CSV."""
    overrides = {
        "tau": tau,
        "alpha": alpha,
        "bootstrap": bootstrap,
        "seed": _resolve_seed(seed, seed_from_entropy),
        "min_segment_count": min_segment_count,
        "clip_low": clip_low,
        "clip_high": clip_high,
        "auroc_negligible": auroc_negligible,
        "parallelism": threads,
    }
    try:
        file_values = load_config_file(config_file) if config_file else None
        config = resolve_config(file_values, overrides)
        ref = load_period_csv(ref_csv, PERIOD_REFERENCE)
        cur = load_period_csv(cur_csv, PERIOD_CURRENT)
    except (KsDiagError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR

    import hashlib

    digests = (
        hashlib.sha256(ref_csv.read_bytes()).hexdigest(),
        hashlib.sha256(cur_csv.read_bytes()).hexdigest(),
    )
    report = run_diagnosis(ref, cur, config, full_trace=full_trace, input_digests=digests)
    payload = report_to_dict(report)
    if output is not None:
        _dump_json(payload, output)
    if summary:
        click.echo(render_report(payload), nl=False)
    elif output is None:
        _dump_json(payload, None)
    return _EXIT_BY_DIAGNOSIS[report.final_diagnosis]


@cli.command()
@click.argument("scenario", required=False)
@click.option("--spec-file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="JSON scenario spec (alternative to a built-in id).")
@click.option("--seed", type=int, default=None, help="RNG seed (required unless --seed-from-entropy).")
@click.option("--seed-from-entropy", is_flag=True, help="Draw a random seed (non-reproducible).")
@click.option("-o", "--output", type=click.Path(file_okay=False, path_type=Path), default=Path("."), help="Output directory.")
def simulate(
    scenario: str | None,
    spec_file: Path | None,
    seed: int | None,
    seed_from_entropy: bool,
    output: Path,
) -> int:
    """Write ref.csv, cur.csv and scenario.json for a scenario.

    SCENARIO is a built-in id (e.g. S2_A); see --help for the list:
    STEP1_CASE1..4, S2_A..S2_D, S3_A, S3_B.
    """
    if (scenario is None) == (spec_file is None):
        raise click.UsageError("provide exactly one of a built-in SCENARIO id or --spec-file")
    resolved_seed = _resolve_seed(seed, seed_from_entropy)
    try:
        if scenario is not None:
            try:
                spec = builtin_scenario(ScenarioId(scenario), resolved_seed)
            except ValueError:
                valid = ", ".join(s.value for s in ScenarioId)
                raise click.UsageError(f"unknown scenario {scenario!r}; valid ids: {valid}") from None
        else:
            payload = json.loads(spec_file.read_text(encoding="utf-8"))
            payload["seed"] = resolved_seed
            spec = spec_from_dict(payload)
        ref_path, cur_path, spec_path = write_scenario(spec, output)
    except (InvalidSpecError, ConfigError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    click.echo(f"wrote {ref_path}, {cur_path}, {spec_path}")
    return EXIT_OK


@cli.command()
@click.argument("report_json", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write the summary to a file instead of stdout.")
def render(report_json: Path, output: Path | None) -> int:
    """Render a report JSON file as a text summary."""
    try:
        payload = json.loads(report_json.read_text(encoding="utf-8"))
        text = render_report(payload)
    except (json.JSONDecodeError, SchemaError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
    return EXIT_OK


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True, help="RNG seed for the scenario suite.")
@click.option("--threads", type=int, default=0, show_default=True, help="Worker count (0 = auto).")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write all scenario reports as one JSON file.")
def selftest(seed: int, threads: int, output: Path | None) -> int:
    """Run the built-in scenarios and check them against their bands."""
    checks, reports = run_selftest(seed=seed, parallelism=threads)
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        click.echo(f"{status} {check.name}: {check.detail}")
    if output is not None:
        _dump_json(reports, output)
    failed = sum(1 for c in checks if not c.passed)
    click.echo(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    """Entry point with the exit-code contract applied.

    0 no-action/explained outcome, 2 monitor, 3 escalation,
    4 degenerate stop, 1 usage or IO error.
    """
    try:
        result = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    return int(result) if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
