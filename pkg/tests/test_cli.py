import csv
import io
import json
import subprocess
import sys

import pytest

from pbteleport.cli import dumps, fmt, main, n_range, seed_type


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


# --------------------------------------------------------------------------
# formatting helpers


def test_fmt():
    assert fmt(None) == ""
    assert fmt(True) == "true"
    assert fmt(3) == "3"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt("z+") == "z+"


def test_dumps_rounds_to_twelve_digits():
    assert json.loads(dumps({"x": 2 / 3, "y": [1 / 7]})) == {"x": 0.666666666667, "y": [0.142857142857]}


def test_argument_types():
    assert n_range("2..9") == (2, 9)
    with pytest.raises(Exception):
        n_range("9..2")
    with pytest.raises(Exception):
        seed_type("-1")
    assert seed_type(str(2**64 - 1)) == 2**64 - 1


# --------------------------------------------------------------------------
# subcommands


def test_spectrum_csv(capsys):
    code, out, _ = run(capsys, "spectrum", "--n", "2")
    assert code == 0
    table = rows(out)
    assert table[0] == ["two_s", "lambda_minus", "lambda_plus", "deg_minus", "deg_plus"]
    assert table[1:] == [["1", "0.25", "0.75", "2", "2"], ["3", "0", "1", "4", "0"]]


def test_spectrum_json(capsys):
    code, out, _ = run(capsys, "spectrum", "--n", "3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert sum(r["deg_minus"] + r["deg_plus"] for r in data) == 16


def test_protocol_emits_files(capsys, tmp_path):
    povm_file = tmp_path / "povm.json"
    state_file = tmp_path / "state.json"
    code, out, _ = run(
        capsys, "protocol", "--variant", "prob-opt", "--n", "2",
        "--emit-povm", str(povm_file), "--emit-state", str(state_file),
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["value"] == pytest.approx(0.4)
    assert summary["completeness_error"] <= 1e-10
    povm = json.loads(povm_file.read_text())
    assert povm["header"]["ordering"] == "A1..A2,B"
    assert [e["outcome"] for e in povm["elements"]] == [0, 1, 2]
    state = json.loads(state_file.read_text())
    assert state["header"]["ordering"] == "A1..A2,B1..B2"
    assert len(state["amplitudes"]) == 16


def test_simulate_basis_prob(capsys):
    code, out, _ = run(capsys, "simulate", "--variant", "prob-opt", "--n", "2")
    assert code == 0
    table = rows(out)
    assert table[0] == ["input", "outcome", "branch_trace", "output_fidelity"]
    success = [r for r in table[1:] if r[1] != "0"]
    assert len(success) == 12
    assert all(float(r[2]) == pytest.approx(0.2) and float(r[3]) == pytest.approx(1) for r in success)
    assert all(r[3] == "" for r in table[1:] if r[1] == "0")


def test_simulate_haar_det(capsys):
    code, out, _ = run(capsys, "simulate", "--variant", "det-mes", "--n", "3", "--inputs", "haar:4", "--seed", "7")
    assert code == 0
    assert len(rows(out)) == 1 + 4 * 3


def test_simulate_is_deterministic(capsys):
    argv = ("simulate", "--variant", "det-opt", "--n", "3", "--inputs", "haar:5", "--seed", "11", "--format", "json")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_verify_all_passes(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "all", "--n-max", "5")
    assert code == 0
    lines = [json.loads(line) for line in out.splitlines()]
    assert {line["suite"] for line in lines} == {"eigen", "dual", "oracle"}
    assert all(line["passed"] for line in lines)


def test_verify_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "eigen", "--n-max", "3", "--tol-eigen", "1e-300")
    assert code == 1
    assert not all(json.loads(line)["passed"] for line in out.splitlines())


def test_entanglement_single_and_sweep(capsys):
    code, out, _ = run(capsys, "entanglement", "--n", "2")
    assert code == 0
    table = rows(out)
    assert table[0] == ["N", "E_ini", "E_res", "p", "pE_res", "consumption", "avg_consumption"]
    assert float(table[1][2]) == pytest.approx(1.0)
    code, out, _ = run(capsys, "entanglement", "--sweep", "4", "--variant", "prob-mes", "--format", "json")
    assert code == 0
    assert [r["N"] for r in json.loads(out)] == [1, 2, 3, 4]


def test_sweep_tables(capsys):
    code, out, _ = run(capsys, "sweep", "--metric", "fidelity", "--variants", "det-mes,det-opt", "--n-range", "1..4")
    assert code == 0
    table = rows(out)
    assert table[0] == ["n", "f_det_mes", "f_det_opt", "f_classical", "asymptote"]
    assert float(table[1][1]) == pytest.approx(0.5)
    assert float(table[2][2]) == pytest.approx(2 / 3)
    code, out, _ = run(capsys, "sweep", "--metric", "probability", "--variants", "prob-opt", "--n-range", "2..3")
    assert rows(out)[1][:2] == ["2", "0.4"]


def test_output_file(capsys, tmp_path):
    target = tmp_path / "s.csv"
    code, out, _ = run(capsys, "--output", str(target), "spectrum", "--n", "1")
    assert code == 0 and out == ""
    assert target.read_text().startswith("two_s,")


# --------------------------------------------------------------------------
# usage errors


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--metric", "fidelity", "--variants", "prob-opt", "--n-range", "1..3"],
        ["sweep", "--metric", "probability", "--variants", "det-mes", "--n-range", "1..3"],
        ["simulate", "--variant", "det-mes", "--n", "2", "--mode", "prob"],
        ["simulate", "--variant", "det-mes", "--n", "2", "--inputs", "haar:0"],
        ["simulate", "--variant", "det-mes", "--n", "2", "--inputs", "nope"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--n", "0"],
        ["protocol", "--variant", "bogus", "--n", "2"],
        ["entanglement", "--n", "2", "--sweep", "3"],
        ["sweep", "--metric", "fidelity", "--variants", "det-mes", "--n-range", "5..2"],
    ],
)
def test_parser_errors_exit_two(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_capacity_error_exit_two(capsys):
    code, out, err = run(capsys, "entanglement", "--n", "11")
    assert code == 2
    assert out == ""
    assert "limit is 10" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pbteleport", "sweep", "--metric", "probability",
         "--variants", "prob-mes", "--n-range", "1..2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1] == "1,0.25,-0.595769121606"
