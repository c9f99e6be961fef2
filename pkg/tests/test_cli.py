import json
import subprocess
import sys

import pytest

from poisson_tails import cli, validate


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bound_right_worked_example(capsys):
    code, out, _ = run_cli(
        ["bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3"], capsys
    )
    assert code == 0
    assert "exact" in out
    assert "0.323323583817" in out
    assert "0.371022407248" in out  # Thm1Upper
    assert "Thm1Lower" in out and "KlarUpper" in out


def test_bound_invalid_family_is_in_band(capsys):
    # short-explicit needs ceil(nb) >= nx + 1; here it degrades in-band, exit stays 0
    code, out, _ = run_cli(
        ["bound", "--side", "right", "--n", "1", "--x", "2", "--b", "2"], capsys
    )
    assert code == 0
    assert "ShortExplicit" in out
    assert "warning:" in out


def test_bound_left_with_sharp(capsys):
    code, out, _ = run_cli(
        ["bound", "--side", "left", "--n", "10", "--x", "1", "--a", "0.5", "--sharp"],
        capsys,
    )
    assert code == 0
    assert "Thm2LowerSharp" in out
    assert "ShortPhiLower" in out


def test_bound_usage_errors(capsys):
    # wrong threshold flag for the side
    code, _, err = run_cli(
        ["bound", "--side", "right", "--n", "1", "--x", "2", "--a", "1"], capsys
    )
    assert code == 1
    assert "error" in err.lower()
    # family/side mismatch
    code, _, err = run_cli(
        ["bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3", "--family", "thm2"],
        capsys,
    )
    assert code == 1
    # argparse-level failure also maps to 1, not 2
    code, _, _ = run_cli(["bound", "--side", "diagonal", "--n", "1", "--x", "2"], capsys)
    assert code == 1
    code, _, _ = run_cli(["nonsense"], capsys)
    assert code == 1


def test_bound_json_round_trip(capsys):
    code, out, _ = run_cli(
        [
            "bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3",
            "--format", "json",
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["command"] == "bound"
    rows = {r["family"]: r for r in payload["results"]}
    assert rows["Thm1Upper"]["value"] == pytest.approx(0.37102240724813609218, rel=1e-15)
    assert rows["exact"]["value"] == pytest.approx(0.32332358381693654053, rel=1e-15)
    # slack columns rebuild from the parsed values exactly
    assert rows["Thm1Upper"]["slack"] == rows["Thm1Upper"]["value"] - rows["exact"]["value"]


def test_bound_csv_format(capsys):
    code, out, _ = run_cli(
        [
            "bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3",
            "--format", "csv",
        ],
        capsys,
    )
    assert code == 0
    lines = [l for l in out.strip().split("\n") if not l.startswith("#")]
    assert lines[0] == "family,value,valid,note,slack"
    cells = lines[1].split(",")
    assert cells[0] == "exact"
    assert float(cells[1]) == pytest.approx(0.32332358381693654053, rel=1e-16)


def test_compare_csv_stdout_and_determinism(capsys):
    argv = ["compare", "--n", "3", "--b", "3", "--samples", "40", "--format", "csv"]
    code, out1, _ = run_cli(argv, capsys)
    assert code == 0
    code, out2, _ = run_cli(argv, capsys)
    assert out1 == out2
    lines = out1.strip().split("\n")
    assert lines[0].startswith("# n=3 b=3 ")
    assert lines[1] == "x,q,thm1_upper,short_upper,exact_tail,region"
    assert len(lines) == 42


def test_compare_out_file(tmp_path, capsys):
    target = tmp_path / "curve.csv"
    code, out, _ = run_cli(
        ["compare", "--n", "3", "--b", "3", "--samples", "40", "--out", str(target)],
        capsys,
    )
    assert code == 0
    assert target.exists()
    assert "ordering_ok" in out
    # same bytes as the stdout csv route
    code, stdout_csv, _ = run_cli(
        ["compare", "--n", "3", "--b", "3", "--samples", "40", "--format", "csv"], capsys
    )
    assert target.read_text(encoding="utf-8") == stdout_csv


def test_compare_small_m_warns(capsys):
    code, out, _ = run_cli(["compare", "--n", "1", "--b", "5", "--samples", "10"], capsys)
    assert code == 0
    assert "warning" in out
    assert "not asserted" in out


def test_compare_io_error(capsys):
    code, _, err = run_cli(
        ["compare", "--n", "3", "--b", "3", "--out", "/nonexistent/dir/x.csv"], capsys
    )
    assert code == 3
    assert "i/o" in err.lower()


def test_compare_rejects_degenerate(capsys):
    code, _, err = run_cli(["compare", "--n", "1", "--b", "1", "--samples", "10"], capsys)
    assert code == 1


def test_validate_small_suite(capsys):
    code, out, _ = run_cli(["validate", "--suite", "lemma3", "--kmax", "40"], capsys)
    assert code == 0
    assert "violations" in out
    payload_code, out_json, _ = run_cli(
        ["validate", "--suite", "lemma3", "--kmax", "40", "--format", "json"], capsys
    )
    payload = json.loads(out_json)
    assert payload["results"][0]["violations"] == 0
    assert payload["results"][0]["points"] == 80


def test_validate_violation_exit_code(capsys, monkeypatch):
    broken = validate.SuiteResult(suite="lemma3")
    broken.check(-1.0, "forced violation for the exit-code contract")
    monkeypatch.setattr(validate, "run_suite", lambda name, **kw: broken)
    code, out, _ = run_cli(["validate", "--suite", "lemma3"], capsys)
    assert code == 2
    assert "warning" in out


def test_validate_param_routing(capsys):
    # seed belongs to identity8 only
    code, _, err = run_cli(["validate", "--suite", "lemma3", "--seed", "7"], capsys)
    assert code == 1
    assert "--seed" in err
    code, _, _ = run_cli(["validate", "--suite", "nope"], capsys)
    assert code == 1


def test_szasz_apply_mode(capsys):
    code, out, _ = run_cli(
        ["szasz", "--fn", "affine:2,1", "--n", "10", "--x", "1"], capsys
    )
    assert code == 0
    assert "remainder_bound" in out
    code, out_json, _ = run_cli(
        ["szasz", "--fn", "affine:2,1", "--n", "10", "--x", "1", "--format", "json"],
        capsys,
    )
    payload = json.loads(out_json)
    assert payload["results"][0]["value"] == pytest.approx(3.0, rel=1e-13)


def test_szasz_worked_sup_bound(capsys):
    code, out_json, _ = run_cli(
        [
            "szasz", "--fn", "patch:affine:2,1;outside=+1;window=0.5,1.5",
            "--n", "10", "--x", "1", "--sup-norm", "1", "--format", "json",
        ],
        capsys,
    )
    assert code == 0
    row = json.loads(out_json)["results"][0]
    assert row["actual_error"] == pytest.approx(0.15054443581369461, rel=1e-11)
    assert row["bound"] == pytest.approx(0.19567926350491732, rel=1e-12)
    assert row["bound"] >= row["actual_error"]


def test_szasz_boundary_mode(capsys):
    code, out_json, _ = run_cli(
        [
            "szasz", "--fn", "fs:a=1,s=1", "--n-sweep", "100,1000",
            "--x", "1", "--format", "json",
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out_json)
    assert payload["parameters"]["mode"] == "boundary-rate"
    ratios = [row["ratio"] for row in payload["results"]]
    assert ratios[0] == pytest.approx(0.999167016568, rel=1e-9)
    assert ratios[1] == pytest.approx(0.999916670142, rel=1e-9)


def test_szasz_usage_errors(capsys):
    code, _, err = run_cli(["szasz", "--fn", "poly:1,,2", "--n", "3", "--x", "1"], capsys)
    assert code == 1
    assert "position 7" in err
    code, _, _ = run_cli(["szasz", "--fn", "affine:2,1", "--x", "1"], capsys)
    assert code == 1  # neither --n nor --n-sweep
    code, _, _ = run_cli(
        ["szasz", "--fn", "affine:2,1", "--n", "3", "--n-sweep", "4,5", "--x", "1"],
        capsys,
    )
    assert code == 1  # both
    code, _, err = run_cli(
        ["szasz", "--fn", "affine:2,1", "--n", "3", "--x", "1", "--p", "2"], capsys
    )
    assert code == 1  # moment route needs a window
    assert "--window" in err
    code, _, _ = run_cli(
        [
            "szasz", "--fn", "affine:2,1", "--n", "3", "--x", "1",
            "--p", "2", "--sup-norm", "1",
        ],
        capsys,
    )
    assert code == 1


def test_human_precision_env(capsys, monkeypatch):
    argv = ["bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3"]
    monkeypatch.setenv("POISSON_TAILS_PRECISION", "16")
    _, out16, _ = run_cli(argv, capsys)
    assert "0.3710224072481361" in out16
    monkeypatch.delenv("POISSON_TAILS_PRECISION")
    _, out12, _ = run_cli(argv, capsys)
    assert "0.371022407248" in out12
    # floor: values below 12 are clamped up
    monkeypatch.setenv("POISSON_TAILS_PRECISION", "3")
    _, out3, _ = run_cli(argv, capsys)
    assert "0.371022407248" in out3


def test_console_script_end_to_end():
    proc = subprocess.run(
        [
            sys.executable, "-m", "poisson_tails",
            "bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3",
            "--format", "json",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["command"] == "bound"
    proc2 = subprocess.run(
        [
            sys.executable, "-m", "poisson_tails",
            "bound", "--side", "right", "--n", "1", "--x", "2", "--b", "3",
            "--format", "json",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.stdout == proc2.stdout  # byte-deterministic reruns
