"""Command-line frontend: ``python -m app <command>``."""

from __future__ import annotations

import logging
import sys
import time
from pathlib import Path
from typing import Any, Iterable, Optional

import click
from dotenv import dotenv_values

from config.settings import get_settings
from app.jobs import build_verification_jobs, run_sweep
from app.repositories import render, save_output
from app.services.errors import NumericalConvergenceError
from app.services.evaluations import KERNEL_CHOICES, evaluate_eisenstein, evaluate_kernel, evaluate_zeta, run_selftest
from app.services.fields import resolve_field
from app.services.kernel import EvaluationSession
from app.services.parsing import parse_integer, split_values
from models import (
    Command,
    EvaluationRecord,
    IdentityId,
    OutputFormat,
    ParamGrid,
    PrecisionContext,
    RunConfig,
    RunConfigError,
    VerificationReport,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3

_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
# config-file keys that differ from the click parameter names
_CONFIG_KEYS = {"field": "field_selector", "format": "output_format", "output": "output_path"}


class _Outcome:
    def __init__(self) -> None:
        self.reports: list[VerificationReport] = []
        self.evaluations: list[EvaluationRecord] = []
        self.failures: list[str] = []
        self.domain_errors: list[str] = []
        self.non_convergence: list[str] = []

    @property
    def exit_code(self) -> int:
        if self.non_convergence:
            return EXIT_NO_CONVERGENCE
        if self.domain_errors:
            return EXIT_CONFIG
        if self.failures:
            return EXIT_FAILED
        return EXIT_OK


def _run_verifications(config: RunConfig, outcome: _Outcome) -> None:
    jobs = build_verification_jobs(config)
    for result in run_sweep(jobs, config.workers):
        label = f"{result.job.identity_id.slug} [{result.job.field.label}] {dict(result.job.params)}"
        if result.report is not None:
            outcome.reports.append(result.report)
            if not result.report.passed:
                outcome.failures.append(f"{label}: residual {result.report.abs_residual} > {result.report.tolerance}")
        elif result.non_convergence:
            outcome.non_convergence.append(f"{label}: {result.error}")
        else:
            outcome.domain_errors.append(f"{label}: {result.error}")


def _run_evaluations(config: RunConfig, ctx: PrecisionContext, outcome: _Outcome) -> None:
    grid = config.param_grid
    for selector in config.field_selectors():
        field = resolve_field(selector)
        session = EvaluationSession(field, ctx)
        if config.command is Command.ZETA:
            for point in grid.at:
                outcome.evaluations.append(evaluate_zeta(field, point, ctx))
        elif config.command is Command.KERNEL:
            for point in grid.x:
                record = evaluate_kernel(field, point, ctx, method=config.method, session=session)
                outcome.evaluations.append(record)
                if config.method == "both" and record.notes:
                    outcome.failures.append(f"kernel [{field.label}] x={point}: {record.notes[0]}")
        else:
            for k in grid.k:
                for point in grid.z:
                    outcome.evaluations.append(
                        evaluate_eisenstein(field, k, point, ctx, normalized=config.normalized, session=session)
                    )


def _run_selftest(ctx: PrecisionContext, outcome: _Outcome) -> None:
    reports, records, _ = run_selftest(ctx)
    outcome.reports.extend(reports)
    outcome.evaluations.extend(records)
    outcome.failures.extend(
        f"{report.identity_id.slug}: residual {report.abs_residual}" for report in reports if not report.passed
    )
    outcome.failures.extend(
        f"selftest {record.params['check']} [{record.field_label}]" for record in records if not record.values["passed"]
    )


def run(config: RunConfig) -> int:
    """Execute a run configuration, write its output and return the exit status."""
    settings = get_settings()
    started = time.perf_counter()
    outcome = _Outcome()
    ctx = PrecisionContext.from_digits(config.precision_digits)
    logger.info("Running %s at %s digits (%s working bits)", config.command.value, ctx.digits, ctx.working_bits)
    try:
        if config.command in (Command.VERIFY, Command.SWEEP):
            _run_verifications(config, outcome)
        elif config.command is Command.SELFTEST:
            _run_selftest(ctx, outcome)
        else:
            _run_evaluations(config, ctx, outcome)
    except NumericalConvergenceError as exc:
        outcome.non_convergence.append(str(exc))
    except ValueError as exc:
        outcome.domain_errors.append(str(exc))

    timing = {"elapsed_seconds": f"{time.perf_counter() - started:.3f}"} if settings.REPORT_TIMING else None
    text = render(config.output_format, config.echo(), outcome.reports, outcome.evaluations, timing)
    if config.output_path is not None:
        save_output(config.output_path, text)
    else:
        click.echo(text, nl=False)

    for message in outcome.non_convergence:
        click.echo(f"no convergence: {message}", err=True)
    for message in outcome.domain_errors:
        click.echo(f"error: {message}", err=True)
    for message in outcome.failures:
        click.echo(f"FAILED: {message}", err=True)
    return outcome.exit_code


# ---------------------------------------------------------------------------
# click surface
# ---------------------------------------------------------------------------


def _values(raw: Iterable[str]) -> tuple[str, ...]:
    collected: list[str] = []
    for item in raw:
        collected.extend(split_values(item))
    return tuple(collected)


def _integers(raw: Iterable[str], name: str) -> tuple[int, ...]:
    return tuple(parse_integer(value, name) for value in _values(raw))


def _config_defaults(path: Optional[str]) -> dict[str, Any]:
    if not path:
        return {}
    values = dotenv_values(path)
    defaults = {}
    for key, value in values.items():
        if value is None:
            continue
        name = key.strip().lower().replace("-", "_")
        defaults[_CONFIG_KEYS.get(name, name)] = value
    logger.debug("Loaded defaults %s from %s", sorted(defaults), path)
    return defaults


def _finish(config_factory) -> None:
    context = click.get_current_context()
    try:
        config = config_factory()
    except (RunConfigError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        context.exit(EXIT_CONFIG)
    context.exit(run(config))


def _common_options(func):
    func = click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None,
                        help="Write the result here instead of stdout.")(func)
    func = click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]),
                        default=OutputFormat.JSON.value, show_default=True)(func)
    func = click.option("--digits", type=int, default=None, help="Decimal digits (default: ZETAFORGE_DIGITS).")(func)
    return func


def _field_option(func):
    return click.option("--field", "field_selector", default="Q", show_default=True,
                        help="Built-in label/alias or coefficient table path; comma-separate several.")(func)


def _digits(value: Optional[int]) -> int:
    return value if value is not None else get_settings().DEFAULT_DIGITS


def _output(path: Optional[str]) -> Optional[Path]:
    return Path(path) if path else None


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="key=value file with option defaults.")
@click.pass_context
def cli(context: click.Context, config_path: Optional[str]) -> None:
    """High-precision Dedekind zeta values, kernels and identity checks."""
    settings = get_settings()
    logging.basicConfig(level=settings.LOG_LEVEL, format=_LOG_FORMAT, stream=sys.stderr)
    defaults = _config_defaults(config_path)
    if defaults:
        context.default_map = {name: dict(defaults) for name in context.command.commands}


def _verification_command(command: Command):
    @_field_option
    @_common_options
    @click.option("--identity", "identities", multiple=True, required=True,
                  help="Identity slug; repeat or comma-separate.")
    @click.option("--m", "m_values", multiple=True)
    @click.option("--k", "k_values", multiple=True)
    @click.option("--alpha", "alpha_values", multiple=True, help="Symbolic values such as pi, pi^2/3, 2.5.")
    @click.option("--z", "z_values", multiple=True, help="Upper half-plane points such as i or (1+3i)/2.")
    @click.option("--workers", type=int, default=None)
    def command_impl(field_selector, digits, output_format, output_path, identities, m_values, k_values,
                     alpha_values, z_values, workers):
        def build() -> RunConfig:
            default_workers = 1 if command is Command.VERIFY else get_settings().SWEEP_WORKERS
            return RunConfig(
                command=command,
                field_selector=field_selector,
                precision_digits=_digits(digits),
                identity_set=tuple(IdentityId.parse(value) for value in _values(identities)),
                param_grid=ParamGrid(
                    m=_integers(m_values, "m"),
                    k=_integers(k_values, "k"),
                    alpha=_values(alpha_values),
                    z=_values(z_values),
                ),
                output_format=OutputFormat(output_format),
                output_path=_output(output_path),
                workers=int(workers) if workers is not None else default_workers,
            )

        _finish(build)

    return command_impl


cli.command("verify", help="Verify identities at the given parameter points.")(_verification_command(Command.VERIFY))
cli.command("sweep", help="Verify identities over a parameter grid concurrently.")(_verification_command(Command.SWEEP))


@cli.command("kernel", help="Evaluate Omega_K(x).")
@_field_option
@_common_options
@click.option("--x", "x_values", multiple=True, required=True)
@click.option("--method", type=click.Choice(KERNEL_CHOICES), default="auto", show_default=True)
def kernel_command(field_selector, digits, output_format, output_path, x_values, method):
    _finish(lambda: RunConfig(
        command=Command.KERNEL,
        field_selector=field_selector,
        precision_digits=_digits(digits),
        param_grid=ParamGrid(x=_values(x_values)),
        output_format=OutputFormat(output_format),
        output_path=_output(output_path),
        method=method,
    ))


@cli.command("zeta", help="Evaluate zeta_K(s).")
@_field_option
@_common_options
@click.option("--at", "at_values", multiple=True, required=True)
def zeta_command(field_selector, digits, output_format, output_path, at_values):
    _finish(lambda: RunConfig(
        command=Command.ZETA,
        field_selector=field_selector,
        precision_digits=_digits(digits),
        param_grid=ParamGrid(at=_values(at_values)),
        output_format=OutputFormat(output_format),
        output_path=_output(output_path),
    ))


@cli.command("eisenstein", help="Evaluate the extended Eisenstein series G_k (or E_k with --normalized).")
@_field_option
@_common_options
@click.option("--k", "k_values", multiple=True, required=True)
@click.option("--z", "z_values", multiple=True, required=True)
@click.option("--normalized", is_flag=True, default=False)
def eisenstein_command(field_selector, digits, output_format, output_path, k_values, z_values, normalized):
    _finish(lambda: RunConfig(
        command=Command.EISENSTEIN,
        field_selector=field_selector,
        precision_digits=_digits(digits),
        param_grid=ParamGrid(k=_integers(k_values, "k"), z=_values(z_values)),
        output_format=OutputFormat(output_format),
        output_path=_output(output_path),
        normalized=normalized,
    ))


@cli.command("selftest", help="Check the field registry and the classical formulas.")
@_common_options
def selftest_command(digits, output_format, output_path):
    _finish(lambda: RunConfig(
        command=Command.SELFTEST,
        field_selector="Q",
        precision_digits=_digits(digits),
        output_format=OutputFormat(output_format),
        output_path=_output(output_path),
    ))


def main(argv: Optional[list[str]] = None) -> None:
    cli.main(args=argv, prog_name="zetaforge")


__all__ = ["EXIT_CONFIG", "EXIT_FAILED", "EXIT_NO_CONVERGENCE", "EXIT_OK", "cli", "main", "run"]
