import json

import pytest

from mdsieve import __version__
from mdsieve.cli import main, run_command


def run(capsys, *argv):
    code = run_command(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_s1_report(capsys):
    code, out, _ = run(capsys, "verify", "s1", "--tuple", "1 0;1 2", "--x", "1e5", "--r-exp", "0.1")
    assert code == 0
    doc = json.loads(out)
    assert doc["version"] == __version__
    assert doc["config"]["x"] == 10**5 and doc["config"]["r_exp"] == 0.1
    assert doc["result"]["which"] == "S1" and doc["result"]["ratio"] > 0
    assert doc["result"]["runtime"] is None


def test_timing_flag_records_runtime(capsys):
    _, out, _ = run(capsys, "verify", "s1", "--tuple", "1 0;1 2", "--x", "1e4", "--timing")
    assert json.loads(out)["result"]["runtime"] > 0


def test_scan_strings_csv(capsys):
    code, out, _ = run(capsys, "scan-strings", "--x", "1e5", "--q", "4", "--a", "1", "--m", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "p_n,gap" and lines[1] == "89,12" and len(lines) > 2


def test_lambda_csv_and_file(capsys, tmp_path):
    path = tmp_path / "twin.txt"
    path.write_text("1 0\n1 2\n")
    dest = tmp_path / "lam.csv"
    code, out, _ = run(capsys, "lambda", "--tuple-file", str(path), "--R", "50", "--out", str(dest))
    assert code == 0 and out == ""
    assert dest.read_text().splitlines()[0] == "d_1,d_2,lambda"


def test_admissible_and_greedy(capsys):
    _, out, _ = run(capsys, "admissible", "--tuple", "1 1;2 1;4 3")
    assert json.loads(out)["result"]["admissible"] is False
    _, out, _ = run(capsys, "greedy", "--k", "3", "--length", "30", "--q", "4", "--a", "1")
    assert json.loads(out)["result"]["admissible"] is True


def test_usage_errors_exit_2(capsys):
    assert run(capsys, "greedy", "--k", "5", "--length", "3")[0] == 2
    assert run(capsys, "verify", "s1", "--tuple", "1 0;1 4;1 2")[0] == 2
    assert run(capsys, "verify", "s1", "--tuple", "1 x")[0] == 2
    assert run(capsys, "singular", "--tuple", "1 0;1 2", "--format", "csv")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["greedy", "--k", "2", "--length", "10", "--colour"])
    assert e.value.code == 2


def test_extract_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "extract", "--tuple", "1 0;1 2", "--x", "1e4", "--m", "1")
    assert code == 0 and json.loads(out)["result"]["violations"] == 0


def test_bv_report_deterministic(capsys):
    a = run(capsys, "bv", "--kind", "P", "--x", "1e4", "--Q", "20")[1]
    b = run(capsys, "bv", "--kind", "P", "--x", "1e4", "--Q", "20")[1]
    assert a == b and json.loads(a)["result"]["kind"] == "P"


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "s1", "--help"])
    assert "(default: 0.1)" in capsys.readouterr().out
