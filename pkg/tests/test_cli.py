import csv
import io
import json
import subprocess
import sys

import pytest

from qquery.classes import MainThmSpec
from qquery.cli import main


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def call_json(capsys, *argv):
    code, out, err = call(capsys, *argv)
    return code, json.loads(out) if out.strip() else None, err


# ----------------------------------------------------------------- analyze


def test_analyze_inner_product_pair(capsys):
    code, res, _ = call_json(capsys, "analyze", "--anf", "x1*x2 + x3*x4")
    assert code == 0
    assert (res["pdeg"], res["gran_m"], res["dplus_lb"]) == (4, 2, 3)
    assert (res["brute_D"], res["brute_Dplus"]) == (4, 3)
    assert res["weight"] == 6 and res["walsh_empty"] == "1/4"


def test_analyze_hex_and(capsys):
    code, res, _ = call_json(capsys, "analyze", "--hex", "8", "--n", "2")
    assert code == 0 and res["pdeg"] == 2 and res["anf"] == "x1*x2"


def test_analyze_large_n_skips_brute_force(capsys):
    code, res, _ = call_json(capsys, "analyze", "--anf", "x1*x2*x3 + x4*x5*x6")
    assert code == 0 and "brute_D" not in res


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["analyze", "--anf", "x0"], "indices are 1-based"),
        (["analyze", "--anf", "x1 + y2"], "position"),
        (["analyze", "--anf", "x1", "--hex", "8"], "exactly one"),
        (["analyze", "--hex", "8"], "--hex needs --n"),
    ],
)
def test_analyze_errors(capsys, argv, needle):
    code, _, err = call(capsys, *argv)
    assert code == 1 and needle in err


def test_analyze_spec_file(capsys, tmp_path):
    path = tmp_path / "main.json"
    path.write_text(json.dumps(MainThmSpec(10, 1, ((8, 9, 10),)).to_json()))
    code, res, _ = call_json(capsys, "analyze", "--spec", str(path))
    assert code == 0 and res["n"] == 10 and res["pdeg"] == 10 and res["dplus_lb"] == 9


# --------------------------------------------------------------------- run


def test_run_f_id(capsys):
    code, res, _ = call_json(capsys, "run", "--algo", "f_id", "--n", "6", "--input", "111111")
    assert code == 0
    assert (res["output"], res["expected"], res["queries"], res["budget"]) == (1, 1, 4, 4)
    assert res["final_state_purity"] <= 1e-9


def test_run_algorithm1_wrong_residue(capsys):
    code, _, err = call(capsys, "run", "--algo", "algorithm1", "--n", "8", "--input", "0" * 8)
    assert code == 1 and "requires n ≡ 2 mod 4" in err


@pytest.mark.parametrize("inp, needle", [("10101", "input length 5 != n = 6"), ("1010a1", "bit string")])
def test_run_bad_input(capsys, inp, needle):
    code, _, err = call(capsys, "run", "--algo", "f_id", "--n", "6", "--input", inp)
    assert code == 1 and needle in err


def test_run_writes_trace(capsys, tmp_path):
    path = tmp_path / "trace.csv"
    code, res, _ = call_json(capsys, "run", "--algo", "algorithm1", "--n", "6", "--input", "111000", "--trace", str(path))
    assert code == 0 and res["output"] == 1
    rows = list(csv.DictReader(open(path)))
    assert sum(r["op"] == "ORACLE" for r in rows) == 4
    assert int(rows[-1]["queries"]) == 4
    assert res["gate_count"] == sum(not r["op"].startswith("MEASURE") for r in rows)


def test_run_parity_tree(capsys):
    code, res, _ = call_json(capsys, "run", "--algo", "parity_pdsp", "--n", "6", "--input", "111111")
    assert code == 0 and res["output"] == 0 and res["queries"] == 5


def test_run_needs_input(capsys):
    code, _, err = call(capsys, "run", "--algo", "f_id", "--n", "6")
    assert code == 1 and "--input" in err


# ------------------------------------------------------------------ verify


@pytest.mark.parametrize(
    "argv, checked, queries",
    [
        (["--algo", "algorithm1", "--n", "6"], 64, 4),
        (["--algo", "gamma", "--n", "8", "--seed", "42"], 256, 5),
        (["--algo", "gamma_odd", "--n", "9"], 512, 6),
        (["--algo", "main", "--n", "10"], 1024, 7),
        (["--algo", "parity_mm", "--n", "6"], 64, 4),
    ],
)
def test_verify_ok(capsys, argv, checked, queries):
    code, res, _ = call_json(capsys, "verify", *argv)
    assert code == 0
    assert res["verified"] is True
    assert res["inputs_checked"] == checked and res["queries"] == queries
    assert "wall_time" not in res


def test_run_verify_flag_and_timing(capsys):
    code, res, _ = call_json(capsys, "run", "--algo", "f_id", "--n", "4", "--verify", "--timing")
    assert code == 0 and res["verified"] and res["wall_time"] >= 0


@pytest.mark.parametrize("fault", ["PAR", "S"])
def test_verify_catches_fault(capsys, fault):
    code, res, _ = call_json(capsys, "verify", "--algo", "gamma", "--n", "8", "--seed", "42", "--inject-fault", fault)
    assert code == 2
    assert res["verified"] is False
    assert len(res["first_counterexample"]) == 8


def test_verify_jobs_merge_in_order(capsys):
    _, one, _ = call_json(capsys, "verify", "--algo", "f_id", "--n", "6")
    _, two, _ = call_json(capsys, "verify", "--algo", "f_id", "--n", "6", "--jobs", "2")
    assert one == two


def test_verify_fault_with_jobs_reports_same_counterexample(capsys):
    args = ["verify", "--algo", "algorithm1", "--n", "6", "--inject-fault", "PAR"]
    _, one, _ = call_json(capsys, *args)
    _, two, _ = call_json(capsys, *args, "--jobs", "2")
    assert one["first_counterexample"] == two["first_counterexample"]


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["--algo", "gamma_odd", "--n", "8"], "odd n"),
        (["--algo", "main", "--n", "14", "--t", "2"], "no feasible"),
        (["--algo", "f_id"], "need --n"),
    ],
)
def test_verify_usage_errors(capsys, argv, needle):
    code, _, err = call(capsys, "verify", *argv)
    assert code == 1 and needle in err


def test_unknown_algorithm_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--algo", "grover", "--n", "4"])
    assert exc.value.code == 1


# ------------------------------------------------------------------- count


@pytest.mark.parametrize(
    "argv, key, value",
    [
        (["--class", "pdsp", "--n", "16"], "count", 1),
        (["--class", "main", "--n", "40"], "count", 4),
        (["--class", "gamma", "--n", "8"], "raw", 37_748_736),
    ],
)
def test_count(capsys, argv, key, value):
    code, res, _ = call_json(capsys, "count", *argv)
    assert code == 0 and res[key] == value


def test_count_too_small(capsys):
    code, _, err = call(capsys, "count", "--class", "pdsp", "--n", "3")
    assert code == 1 and "n too small" in err


# ------------------------------------------------------------------ report


def _report(capsys, *argv):
    code, out, _ = call(capsys, "report", *argv)
    return code, out, {(r["name"], int(r["n"])): r for r in csv.DictReader(io.StringIO(out))}


def test_report_rows(capsys):
    code, _, rows = _report(capsys, "--n", "6", "10")
    assert code == 0
    f1 = rows[("f1", 6)]
    assert (f1["qc_algo"], f1["dplus_lower"], f1["dplus_tree_cost"], f1["brute_D"]) == ("4", "5", "5", "6")
    fid = rows[("f_id", 6)]
    assert (fid["qc_algo"], fid["dplus_lower"]) == ("4", "4")
    main_row = rows[("pdsp_main", 10)]
    assert (main_row["qc_algo"], main_row["dplus_lower"], main_row["brute_D"]) == ("7", "9", "10")
    for r in rows.values():
        assert r["verified"] == "True"
        assert r["qc_algo"] == r["qc_formula"]
        assert int(r["inputs_checked"]) == 1 << int(r["n"])


def test_report_is_bit_identical(capsys):
    _, a, _ = _report(capsys, "--n", "5", "6", "--seed", "3")
    _, b, _ = _report(capsys, "--n", "5", "6", "--seed", "3")
    assert a == b
    assert "wall_time" not in a.splitlines()[0]


def test_report_timing_column(capsys):
    _, out, _ = _report(capsys, "--n", "4", "--timing")
    assert "wall_time" in out.splitlines()[0]


def test_report_json(capsys):
    code, res, _ = call_json(capsys, "report", "--n", "4", "--out", "json")
    assert code == 0 and {r["name"] for r in res} == {"f_id", "gamma"}


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qquery.cli", "count", "--class", "pdsp", "--n", "16"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["count"] == 1
