"""Command-line front end: ``nkeps solve | screen | check | compare``.

Exit codes: 0 success (optimal / compliant / methods agree), 1 input error,
2 infeasible / non-compliant / methods disagree, 3 time or iteration limit,
4 solver failure. Diagnostics go to stderr; results go to stdout and files.
Solver flags override the case file's solver block, which overrides defaults.
"""

from __future__ import annotations

import csv
import sys as _sys
from pathlib import Path

import click

from nkeps import case_io
from nkeps.benders import run_benders
from nkeps.errors import (
    AuditError,
    CaseFormatError,
    NkepsError,
    SizeGuardError,
    ValidationError,
)
from nkeps.extensive import solve_ef
from nkeps.milp import ENGINES
from nkeps.network import check_plan, total_demand
from nkeps.ocs import run_ocs

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_LIMIT, EXIT_SOLVER = 0, 1, 2, 3, 4

METHODS = {"ef": solve_ef, "bd": run_benders, "ocs": run_ocs}

STATUS_EXIT = {
    "optimal": EXIT_OK,
    "infeasible": EXIT_FAIL,
    "time_limit": EXIT_LIMIT,
    "iteration_limit": EXIT_LIMIT,
}

CSV_COLUMNS = ["method", "status", "objective", "time", "iterations", "cuts", "cont", "m",
               "rmp", "mpsip", "dsp", "ef_build", "ef_milp"]


class InputError(Exception):
    pass


def _err(msg: str) -> None:
    click.echo(f"nkeps: {msg}", err=True)


def _load(path: str, overrides: dict) -> case_io.Case:
    case = case_io.read_case(path)
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("gap",) and not 0.0 <= value < 1.0:
            raise InputError(f"--gap must lie in [0, 1), got {value}")
        if key in ("time_limit_secs", "dual_bound", "state_limit") and value <= 0:
            raise InputError(f"--{key.replace('_secs', '').replace('_', '-')} must be positive, got {value}")
    options = case.options.merged(**overrides)
    return case_io.Case(case.system, case.policy, options, case.name)


def _load_plan(case: case_io.Case, path: str):
    plan = case_io.read_plan(path)
    problems = check_plan(case.system, plan)
    if problems:
        raise ValidationError(problems)
    return plan


def _guarded(body):
    """Run ``body()``, mapping package errors to exit codes."""
    try:
        return body()
    except (CaseFormatError, ValidationError, InputError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except SizeGuardError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except AuditError as exc:
        _err(f"{exc} (raise it with --dual-bound)")
        return EXIT_SOLVER
    except NkepsError as exc:
        _err(f"solver failure: {exc}")
        return EXIT_SOLVER


def _solver_flags(f):
    f = click.option("--engine", type=click.Choice(ENGINES), default=None, help="MILP/LP engine.")(f)
    f = click.option("--state-limit", type=int, default=None,
                     help="Largest contingency universe EF and BD may enumerate.")(f)
    f = click.option("--dual-bound", type=float, default=None, help="Oracle dual bound U.")(f)
    f = click.option("--time-limit", type=float, default=None, help="Wall-clock limit in seconds.")(f)
    f = click.option("--gap", type=float, default=None, help="Relative MILP gap.")(f)
    return f


def _overrides(gap, time_limit, dual_bound, state_limit, engine) -> dict:
    return {"gap": gap, "time_limit_secs": time_limit, "dual_bound": dual_bound,
            "state_limit": state_limit, "engine": engine}


def _run(method: str, case: case_io.Case, verbose: bool):
    fn = METHODS[method]
    if method == "ocs" and verbose:
        return fn(case.system, case.policy, case.options, log=lambda line: _err(line))
    return fn(case.system, case.policy, case.options)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """N-k-epsilon transmission and generation expansion planning."""


@cli.command()
@click.option("--case", "case_path", required=True, type=click.Path(dir_okay=False), help="Case file (JSON).")
@click.option("--method", required=True, type=click.Choice(sorted(METHODS)), help="Solution method.")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Plan file to write.")
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Run record file [default: OUT with suffix .report.json].")
@_solver_flags
@click.option("-v", "--verbose", is_flag=True, help="Log OCS iterations to stderr.")
def solve(case_path, method, out, report, gap, time_limit, dual_bound, state_limit, engine, verbose):
    """Solve a case and write the plan and run record."""

    def body():
        case = _load(case_path, _overrides(gap, time_limit, dual_bound, state_limit, engine))
        plan, record = _run(method, case, verbose)
        out_path = Path(out)
        if plan is not None:
            case_io.write_plan(plan, out_path)
        report_path = Path(report) if report else out_path.with_suffix(".report.json")
        case_io.write_report(record, report_path, case.name)
        if plan is not None:
            click.echo(f"{record.status} objective={plan.total_objective:.10g} "
                       f"invest={plan.invest_cost:.10g} operating={plan.operating_cost:.10g}")
            click.echo("built: " + " ".join(plan.built_ids()))
        else:
            click.echo(record.status)
            if record.status == "infeasible":
                _err("TGEP is infeasible: no design meets the N-k-epsilon criterion")
        if record.contingencies:
            click.echo(f"cuts={record.cuts} cont={record.spawning_contingencies}: "
                       + " ".join(sorted({str(c) for c in record.contingencies})))
        return STATUS_EXIT.get(record.status, EXIT_SOLVER)

    return _guarded(body)


@cli.command()
@click.option("--case", "case_path", required=True, type=click.Path(dir_okay=False))
@click.option("--plan", "plan_path", required=True, type=click.Path(dir_okay=False))
@click.option("--budget", "j", required=True, type=int, help="Number of simultaneous failures J.")
@click.option("--dual-bound", type=float, default=None, help="Oracle dual bound U.")
@click.option("--engine", type=click.Choice(ENGINES), default=None)
def screen(case_path, plan_path, j, dual_bound, engine):
    """Worst contingency of size J for a plan, found by the interdiction oracle."""
    from nkeps.oracle import worst_case_contingency

    def body():
        case = _load(case_path, _overrides(None, None, dual_bound, None, engine))
        plan = _load_plan(case, plan_path)
        if not 1 <= j <= case.system.N:
            raise InputError(f"--budget must lie in [1, {case.system.N}], got {j}")
        res = worst_case_contingency(case.system, plan, j, case.options)
        D = total_demand(case.system)
        share = res.worst_shed / D if D > 0 else 0.0
        click.echo(f"budget {j}: worst shed {res.worst_shed:.10g} MW ({share:.4%} of demand) "
                   f"failing {res.contingency}")
        if j > case.policy.k:
            click.echo(f"budget {j} exceeds k = {case.policy.k}: no allowance to compare against")
            return EXIT_OK
        from nkeps.dcopf import is_compliant

        allowed = case.policy.epsilon[j] * D
        ok = is_compliant(res.worst_shed, j, case.policy, D)
        click.echo(f"allowance eps_{j}*D = {allowed:.10g} MW: {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_FAIL

    return _guarded(body)


@cli.command()
@click.option("--case", "case_path", required=True, type=click.Path(dir_okay=False))
@click.option("--plan", "plan_path", required=True, type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["enumerate", "oracle"]), default="enumerate", show_default=True)
@click.option("--report", type=click.Path(dir_okay=False), default=None, help="Write the report as JSON.")
@click.option("--dual-bound", type=float, default=None, help="Oracle dual bound U.")
def check(case_path, plan_path, mode, report, dual_bound):
    """Check a plan against the case's N-k-epsilon policy for every j = 0..k."""
    from nkeps.verify import check_plan_compliance

    def body():
        case = _load(case_path, _overrides(None, None, dual_bound, None, None))
        plan = _load_plan(case, plan_path)
        rep = check_plan_compliance(case.system, case.policy, plan, mode=mode, oracle_options=case.options)
        click.echo("j,worst_shed,allowed,result,contingency")
        for c in rep.checks:
            click.echo(f"{c.j},{c.worst_shed:.10g},{c.allowed:.10g},{'pass' if c.passed else 'FAIL'},"
                       f"{' '.join(c.contingency.sorted_ids())}")
        if report:
            case_io.write_json({"schema_version": case_io.SCHEMA_VERSION, "kind": "compliance",
                                **rep.to_dict()}, report)
        bad = rep.first_failure()
        if bad is not None:
            _err(f"plan fails at j={bad.j}: shed {bad.worst_shed:.10g} > {bad.allowed:.10g}")
            return EXIT_FAIL
        return EXIT_OK

    return _guarded(body)


def parse_methods(text: str) -> list[str]:
    tokens = [t.strip().lower() for t in text.split(",") if t.strip()]
    if not tokens:
        raise InputError("--methods is empty")
    unknown = [t for t in tokens if t not in METHODS]
    if unknown:
        raise InputError(f"unknown method {unknown[0]!r}; choose from {', '.join(sorted(METHODS))}")
    return list(dict.fromkeys(tokens))


def summary_row(record) -> dict:
    t = record.timers
    fmt = lambda v: f"{v:.3f}"  # noqa: E731
    return {
        "method": record.method,
        "status": record.status,
        "objective": "" if record.objective is None else f"{record.objective:.10g}",
        "time": fmt(record.wall_time),
        "iterations": record.iterations,
        "cuts": record.cuts,
        "cont": record.spawning_contingencies,
        "m": "" if record.m is None else record.m,
        "rmp": fmt(t.get("rmp", 0.0)),
        "mpsip": fmt(t.get("oracle", 0.0)),
        "dsp": fmt(t.get("dsp", 0.0)),
        "ef_build": fmt(t.get("build", 0.0)),
        "ef_milp": fmt(t.get("milp", 0.0)),
    }


def agreement(records, gap: float) -> tuple[bool, str]:
    """Do the runs agree: same status, objectives within relative 2*gap?"""
    statuses = {r.status for r in records}
    if len(statuses) > 1:
        return False, "statuses differ: " + ", ".join(f"{r.method}={r.status}" for r in records)
    objs = [r.objective for r in records if r.objective is not None]
    if len(objs) < 2:
        return True, "nothing to compare" if not objs else "single method"
    hi, lo = max(objs), min(objs)
    rel = (hi - lo) / max(1.0, abs(hi))
    return rel <= 2.0 * gap, f"max relative difference {rel:.3g} (tolerance {2.0 * gap:.3g})"


@cli.command()
@click.option("--case", "case_path", required=True, type=click.Path(dir_okay=False))
@click.option("--methods", required=True, help="Comma-separated list, e.g. ef,bd,ocs.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write summary.csv, per-method reports and figures here.")
@_solver_flags
def compare(case_path, methods, out_dir, gap, time_limit, dual_bound, state_limit, engine):
    """Run several methods on one case and compare objectives and effort."""

    def body():
        wanted = parse_methods(methods)
        case = _load(case_path, _overrides(gap, time_limit, dual_bound, state_limit, engine))
        records = []
        for method in wanted:
            _plan, record = _run(method, case, False)
            records.append(record)
        rows = [summary_row(r) for r in records]
        writer = csv.DictWriter(_sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        if out_dir:
            _write_outputs(Path(out_dir), case, records, rows)
        ok, detail = agreement(records, case.options.gap)
        _err(("agree: " if ok else "DISAGREE: ") + detail)
        if any(STATUS_EXIT.get(r.status) == EXIT_LIMIT for r in records):
            return EXIT_LIMIT
        if any(r.status not in STATUS_EXIT for r in records):
            return EXIT_SOLVER
        return EXIT_OK if ok else EXIT_FAIL

    return _guarded(body)


def _write_outputs(out: Path, case, records, rows) -> None:
    from nkeps import plotting

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    for r in records:
        case_io.write_report(r, out / f"{r.method}.report.json", case.name)
        if r.plan is not None:
            case_io.write_plan(r.plan, out / f"{r.method}.plan.json")
    plotting.phase_times(records, out / "phase_times.png")
    plotting.convergence(records, out / "convergence.png")


def main(argv=None) -> None:
    """Console entry point; usage errors exit 1 like every other input error."""
    try:
        code = cli.main(args=argv, prog_name="nkeps", standalone_mode=False)
    except click.exceptions.Abort:
        _err("aborted")
        code = EXIT_INPUT
    except click.ClickException as exc:
        exc.show()
        code = EXIT_INPUT
    _sys.exit(code or 0)


if __name__ == "__main__":
    main()
