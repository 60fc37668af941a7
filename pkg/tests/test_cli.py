import json
import subprocess
import sys

import pytest

from pfrbench.lattice import format_set, parse_set_text, read_set
from pfrbench.workbench.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def lattice_file(tmp_path):
    p = tmp_path / "A.txt"
    p.write_text("0,0\n0,1\n1,5\n")
    return p


@pytest.fixture
def gp_file(tmp_path):
    p = tmp_path / "gp.txt"
    p.write_text("".join(f"{2**e}\n" for e in range(8)))
    return p


def test_generate_stdout_and_file(capsys, tmp_path):
    code, out, _ = run(capsys, "generate", "ap", "start=0", "step=1", "len=5")
    assert code == 0 and out == "0\n1\n2\n3\n4\n"
    target = tmp_path / "cube.txt"
    code, _, _ = run(capsys, "generate", "cube", "d=3", "--out", str(target))
    assert code == 0 and len(read_set(target)) == 8
    code, out1, _ = run(capsys, "generate", "random_lattice", "d=3", "size=9", "--seed", "4")
    code, out2, _ = run(capsys, "generate", "random_lattice", "d=3", "size=9", "--seed", "4")
    assert out1 == out2


def test_generate_round_trips(capsys):
    for args in (["smooth_box", "P=5", "E=1"], ["cube", "d=2"], ["random_lattice", "d=1", "size=4"]):
        _, out, _ = run(capsys, "generate", *args)
        S = parse_set_text(out)
        assert format_set(S) == out


def test_usage_errors(capsys, tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert run(capsys, "analyze", "--input", str(empty))[0] == 2
    assert run(capsys, "analyze", "--input", str(tmp_path / "missing.txt"))[0] == 2
    assert run(capsys, "generate", "ap", "start=0")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys)[0] == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("epsilon = 0.5\n")
    assert run(capsys, "report", "--config", str(bad))[0] == 2


def test_analyze(capsys, gp_file):
    code, out, _ = run(capsys, "analyze", "--input", str(gp_file))
    doc = json.loads(out)
    assert code == 0 and doc["size"] == 8 and doc["product_size"] == 15
    assert doc["valuation_tree"]["primes"] == [2] and doc["valuation_tree"]["binary_max"] == 2


def test_extract_and_query(capsys, lattice_file, tmp_path):
    code, out, _ = run(capsys, "extract", "--input", str(lattice_file), "--epsilon", "1")
    doc = json.loads(out)
    # budget floor(log2 3) = 1 keeps the lex-smallest two-point fiber
    assert code == 0 and doc["epsilon"] == "1" and doc["subset"] == [[0, 0], [0, 1]]
    code, out, _ = run(capsys, "query", "--input", str(lattice_file), "--epsilon", "1", "--element", "0,1")
    doc = json.loads(out)
    assert code == 0 and doc["queries"] == [{"coordinate": 2, "answer": 1}] and doc["within_budget"]
    assert run(capsys, "query", "--input", str(lattice_file), "--epsilon", "1", "--element", "1,5")[0] == 2
    assert run(capsys, "query", "--input", str(lattice_file), "--element", "7,7")[0] == 2
    assert run(capsys, "query", "--input", str(lattice_file), "--element", "1")[0] == 2
    assert run(capsys, "extract", "--input", str(lattice_file), "--epsilon", "0.5")[0] == 2


def test_verify_chang(capsys, tmp_path):
    w = tmp_path / "w.txt"
    w.write_text("1,1/1\n2,1/1\n")
    code, out, _ = run(capsys, "verify", "chang", "--input", str(w), "--k", "2")
    doc = json.loads(out)
    assert code == 0 and doc["ledger"][0]["lhs"] == "6" and doc["ledger"][0]["rhs"] == "144"
    code, out, _ = run(capsys, "verify", "chang", "--count", "10", "--seed", "2")
    assert code == 0 and len(json.loads(out)["ledger"]) == 10


def test_verify_integer_checks(capsys, gp_file, lattice_file):
    code, out, _ = run(capsys, "verify", "lemma52", "--input", str(gp_file))
    assert code == 0 and [r["bound"] for r in json.loads(out)["ledger"]] == [6, 15]
    code, out, _ = run(capsys, "verify", "cover", "--input", str(gp_file), "--epsilon", "1/2", "--k", "2")
    assert code == 0 and json.loads(out)["aggregate_bound"] == 6
    code, out, _ = run(capsys, "verify", "sumproduct", "--input", str(gp_file))
    doc = json.loads(out)
    assert code == 0 and doc["product_sizes"] == {"3": 22, "7": 50}
    assert run(capsys, "verify", "lemma52", "--input", str(lattice_file))[0] == 2
    assert run(capsys, "verify", "cover", "--input", str(gp_file), "--epsilon", "1")[0] == 2


def test_report(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("scale = 1/100\nitems = 04_chang,09_smooth_box\nout_dir = rep\n")
    code, out, _ = run(capsys, "report", "--config", str(cfg))
    assert code == 0 and "overall: PASS" in out
    first = (tmp_path / "rep" / "report.json").read_bytes()
    run(capsys, "report", "--config", str(cfg))
    assert (tmp_path / "rep" / "report.json").read_bytes() == first
    (tmp_path / "g.txt").write_text("smooth_example_product_3 = 999\n")
    cfg.write_text("scale = 1/100\nitems = 09_smooth_box\ngolden = g.txt\nout_dir = rep2\n")
    code, out, _ = run(capsys, "report", "--config", str(cfg))
    assert code == 1 and "FAIL" in out and "golden smooth_example_product_3" in out


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pfrbench.workbench.cli", "generate", "cube", "d=2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.count("\n") == 4
