import json

import pytest

from nkeps import cases
from nkeps.cli import main, parse_methods

TWOBUS = str(cases.path("twobus_candidate"))
SMALL = str(cases.path("small04"))


def run(capsys, *argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    out, err = capsys.readouterr()
    return exc.value.code, out, err


@pytest.fixture
def solved(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    code, out, _ = run(capsys, "solve", "--case", SMALL, "--method", "ocs", "--out", str(plan))
    assert code == 0
    return plan


def test_solve_writes_plan_and_report(tmp_path, capsys):
    plan = tmp_path / "p.json"
    code, out, _ = run(capsys, "solve", "--case", TWOBUS, "--method", "bd", "--out", str(plan))
    assert code == 0
    assert out.startswith("optimal objective=1300")
    assert json.loads(plan.read_text())["build"]["candA"] == 1
    report = json.loads((tmp_path / "p.report.json").read_text())
    assert report["method"] == "bd" and report["status"] == "optimal"


def test_solve_infeasible_exit_2(tmp_path, capsys):
    case = json.loads(cases.path("twobus_candidate").read_text())
    case["system"]["generators"] = [g for g in case["system"]["generators"] if g["id"] != "candA"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(case))
    code, out, err = run(capsys, "solve", "--case", str(path), "--method", "ocs", "--out", str(tmp_path / "p.json"))
    assert code == 2
    assert "TGEP is infeasible" in err
    assert not (tmp_path / "p.json").exists()


def test_solve_time_limit_exit_3(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", "--case", SMALL, "--method", "bd", "--out", str(tmp_path / "p.json"),
                     "--time-limit", "1e-9")
    assert code == 3


def test_size_guard_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--case", str(cases.path("ieee30_k2")), "--method", "ef",
                       "--out", str(tmp_path / "p.json"), "--state-limit", "10000")
    assert code == 1 and "size guard" in err


def test_malformed_case_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": "1.0", "system": {')
    code, _, err = run(capsys, "solve", "--case", str(bad), "--method", "ef", "--out", str(tmp_path / "p.json"))
    assert code == 1 and "syntax error at line" in err


def test_bad_flag_value_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--case", TWOBUS, "--method", "ef", "--out", str(tmp_path / "p"),
                       "--gap", "2")
    assert code == 1 and "--gap" in err


def test_usage_error_exit_1(capsys):
    code, _, err = run(capsys, "solve", "--case", TWOBUS)
    assert code == 1 and "Missing option" in err


def test_check_modes(solved, capsys):
    for mode in ("enumerate", "oracle"):
        code, out, _ = run(capsys, "check", "--case", SMALL, "--plan", str(solved), "--mode", mode)
        assert code == 0
        assert out.splitlines()[0] == "j,worst_shed,allowed,result,contingency"
        assert "FAIL" not in out


def test_check_failure_exit_2(tmp_path, capsys):
    plan = tmp_path / "p.json"
    plan.write_text(json.dumps({"schema_version": "1.0",
                                "build": {"genA": 1, "genB": 1, "line": 1, "candA": 0, "line2": 0}}))
    code, out, err = run(capsys, "check", "--case", TWOBUS, "--plan", str(plan), "--report", str(tmp_path / "r.json"))
    assert code == 2
    assert "fails at j=1" in err
    assert json.loads((tmp_path / "r.json").read_text())["budgets"][1]["worst_shed"] == pytest.approx(50.0)


def test_check_rejects_foreign_plan(tmp_path, capsys):
    plan = tmp_path / "p.json"
    plan.write_text(json.dumps({"schema_version": "1.0", "build": {"zzz": 1}}))
    code, _, err = run(capsys, "check", "--case", TWOBUS, "--plan", str(plan))
    assert code == 1 and "unknown component 'zzz'" in err


def test_screen(solved, capsys):
    code, out, _ = run(capsys, "screen", "--case", SMALL, "--plan", str(solved), "--budget", "2")
    assert code == 0
    assert "budget 2: worst shed" in out and "PASS" in out


def test_screen_beyond_k(solved, capsys):
    code, out, _ = run(capsys, "screen", "--case", SMALL, "--plan", str(solved), "--budget", "3")
    assert code == 0 and "no allowance" in out


def test_compare_agrees_and_writes_outputs(tmp_path, capsys):
    code, out, err = run(capsys, "compare", "--case", TWOBUS, "--methods", "ef,bd,ocs", "--out-dir", str(tmp_path))
    assert code == 0, err
    rows = out.strip().splitlines()
    assert rows[0].startswith("method,status,objective,time,iterations,cuts,cont")
    assert [r.split(",")[0] for r in rows[1:]] == ["ef", "bd", "ocs"]
    assert len({r.split(",")[2] for r in rows[1:]}) == 1
    assert "agree" in err
    for name in ("summary.csv", "phase_times.png", "convergence.png", "ocs.report.json", "ef.plan.json"):
        assert (tmp_path / name).stat().st_size > 0


def test_compare_single_method(capsys):
    code, out, err = run(capsys, "compare", "--case", TWOBUS, "--methods", "ocs")
    assert code == 0 and len(out.strip().splitlines()) == 2


def test_compare_unknown_method(capsys):
    code, _, err = run(capsys, "compare", "--case", TWOBUS, "--methods", "ef,simplex")
    assert code == 1 and "unknown method 'simplex'" in err


def test_parse_methods():
    assert parse_methods(" EF, bd ,ef") == ["ef", "bd"]


def test_cli_flags_override_case(tmp_path, capsys):
    case = json.loads(cases.path("twobus_candidate").read_text())
    case["solver"]["dual_bound"] = 0.01
    path = tmp_path / "c.json"
    path.write_text(json.dumps(case))
    plan = tmp_path / "p.json"
    plan.write_text(json.dumps({"schema_version": "1.0",
                                "build": {"genA": 1, "genB": 1, "line": 1, "candA": 0, "line2": 0}}))
    # the case file's tiny U trips the audit; the flag overrides it
    code, _, err = run(capsys, "screen", "--case", str(path), "--plan", str(plan), "--budget", "1")
    assert code == 4 and "dual bound U too small" in err
    code, out, _ = run(capsys, "screen", "--case", str(path), "--plan", str(plan), "--budget", "1",
                       "--dual-bound", "1e5")
    assert code == 2 and "worst shed 50 MW" in out and "FAIL" in out
