"""Job expansion, the in-memory queue and concurrent sweeps."""
from __future__ import annotations

import json
import threading
import time

import pytest

from app.cli import EXIT_OK, cli
from app.jobs import InMemoryJobQueue, QueueOperationError, build_verification_jobs, process_verification_job, run_sweep
from app.jobs.queue import VerificationJob
from app.services.errors import QuadratureNonConvergence
from app.services.fields import builtin_field
from app.services.identities import run_identity
from models import Command, IdentityId, ParamGrid, RunConfig, RunConfigError, VerificationReport


def _placeholder_report(identity, field, params):
    return VerificationReport(identity, field.label, dict(params), ("0.0e+0", "0.0e+0"), ("0.0e+0", "0.0e+0"),
                              "0.0e+0", "0.0e+0", "1.0e-12", True)


def _config(identities, field="Q", **grid):
    return RunConfig(
        command=Command.SWEEP,
        field_selector=field,
        precision_digits=15,
        identity_set=tuple(identities),
        param_grid=ParamGrid(**grid),
        workers=2,
    )


def test_jobs_keep_only_the_parameters_each_identity_uses():
    config = _config(
        [IdentityId.SERIES_EVALUATION, IdentityId.QUASI_MODULAR],
        field="Q,Qsqrt5",
        m=(3, 5),
        alpha=("pi", "2"),
    )
    jobs = build_verification_jobs(config)
    assert len(jobs) == 8
    assert all(dict(job.params).keys() == {"m"} for job in jobs if job.identity_id is IdentityId.SERIES_EVALUATION)
    assert all(dict(job.params).keys() == {"alpha"} for job in jobs if job.identity_id is IdentityId.QUASI_MODULAR)
    assert [job.key for job in jobs] == sorted(job.key for job in jobs)


def test_field_free_identities_only_run_over_rationals():
    config = _config([IdentityId.LERCH_CLASSICAL], field="Q,Qsqrt5,Q", m=(0,))
    jobs = build_verification_jobs(config)
    assert [job.field.label for job in jobs] == ["Q"]
    assert build_verification_jobs(_config([IdentityId.LERCH_CLASSICAL], field="Qsqrt5", m=(0,))) == []


@pytest.mark.error
def test_missing_grid_values():
    with pytest.raises(RunConfigError, match="needs at least one value for alpha"):
        build_verification_jobs(_config([IdentityId.ETA_LOG], m=(1,)))


def test_queue_tracks_in_flight_jobs():
    job = VerificationJob(IdentityId.LERCH_CLASSICAL, builtin_field("Q"), (("m", "0"),), 15)
    job_queue = InMemoryJobQueue()
    job_queue.enqueue(job)
    assert job_queue.pending == 1
    assert job_queue.dequeue() is job
    assert job_queue.in_flight == 1
    job_queue.ack(job)
    assert job_queue.in_flight == 0
    assert job_queue.dequeue(timeout=0.01) is None
    with pytest.raises(QueueOperationError):
        job_queue.ack(job)


def test_process_job_escalates_precision(monkeypatch):
    seen = []

    def flaky(identity, field, params, ctx, *, session=None):
        seen.append(ctx.working_bits)
        if len(seen) == 1:
            raise QuadratureNonConvergence("needs more bits")
        return run_identity(identity, field, params, ctx, session=session)

    monkeypatch.setattr("app.jobs.worker.run_identity", flaky)
    monkeypatch.setenv("ZETAFORGE_ESCALATION_BITS", "64")
    job = VerificationJob(IdentityId.LERCH_CLASSICAL, builtin_field("Q"), (("m", "0"),), 15)
    result = process_verification_job(job)
    assert result.passed
    assert result.attempts == 2
    assert seen[1] == seen[0] + 64


@pytest.mark.error
def test_domain_errors_are_not_retried():
    job = VerificationJob(IdentityId.SERIES_EVALUATION, builtin_field("Q"), (("m", "2"),), 15)
    result = process_verification_job(job)
    assert not result.success
    assert result.attempts == 1
    assert not result.non_convergence
    assert "odd m" in result.error


@pytest.mark.perf
def test_sweep_runs_jobs_concurrently(monkeypatch):
    active = 0
    peak = 0
    lock = threading.Lock()

    def slow_identity(identity, field, params, ctx, *, session=None):
        nonlocal active, peak
        with lock:
            active += 1
            peak = max(peak, active)
        time.sleep(0.05)
        with lock:
            active -= 1
        return _placeholder_report(identity, field, params)

    monkeypatch.setattr("app.jobs.worker.run_identity", slow_identity)
    jobs = build_verification_jobs(_config([IdentityId.EISENSTEIN_SYMM], m=(2, 3, 4, 5), alpha=("1", "2")))
    started = time.perf_counter()
    results = run_sweep(jobs, workers=4)
    elapsed = time.perf_counter() - started
    assert len(results) == 8
    assert [result.job.key for result in results] == [job.key for job in jobs]
    assert peak > 1
    assert elapsed < 8 * 0.05


@pytest.mark.e2e
def test_sweep_command_matches_single_verifications(runner, tmp_path):
    sweep_out = tmp_path / "sweep.json"
    result = runner.invoke(
        cli,
        ["sweep", "--identity", "eisenstein-symm", "--field", "Q,Qsqrt5", "--m", "2,3", "--alpha", "pi^2",
         "--digits", "15", "--workers", "2", "--output", str(sweep_out)],
    )
    assert result.exit_code == EXIT_OK, result.output
    reports = json.loads(sweep_out.read_text())["reports"]
    assert len(reports) == 4
    assert all(report["passed"] for report in reports)

    single_out = tmp_path / "single.json"
    runner.invoke(
        cli,
        ["verify", "--identity", "eisenstein-symm", "--field", "Qsqrt5", "--m", "3", "--alpha", "pi^2",
         "--digits", "15", "--output", str(single_out)],
    )
    single = json.loads(single_out.read_text())["reports"][0]
    matching = [r for r in reports if r["field"] == "Q(sqrt5)" and r["params"]["m"] == "3"]
    assert matching == [single]
