import subprocess
import sys

import pytest

from cellmorph import corpus
from cellmorph.cli import EXIT_OK, EXIT_UNKNOWN, EXIT_USAGE, EXIT_VIOLATED, main
from cellmorph.solver import available

spacer = pytest.mark.skipif(not available("spacer"), reason="z3 binary not found")


def test_emit_to_file(tmp_path):
    out = tmp_path / "f.smt2"
    assert main(["emit", str(corpus.path("array_fill1")), "-o", str(out)]) == EXIT_OK
    text = out.read_text()
    assert "(set-logic HORN)" in text and "abstraction: cells=1" in text


def test_emit_corpus_name(capsys):
    assert main(["emit", "find_minimum", "--cells", "2"]) == EXIT_OK
    assert "a.k2" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["emit", "no/such/file.arr"],
    ["frobnicate", "array_fill1"],
    ["emit", "array_fill1", "--cells", "5"],
    ["emit", "selection_sort_multiset"],                       # count terms without --multiset
    ["emit", "array_fill1", "--cells", "2", "--no-ordered"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.arr"
    bad.write_text("int x; x = ;")
    assert main(["emit", str(bad)]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_bad_hint_aborts(tmp_path, capsys):
    h = tmp_path / "h.hint"
    h.write_text("hint at outerloop forall k: l0 <= k && k < h => a[k] == 0;")
    assert main(["emit", "selection_sort", "--cells", "2", "--hint", str(h)]) == EXIT_USAGE
    assert "hint fails" in capsys.readouterr().err


def test_check_oracle_clean_and_mutated(capsys):
    assert main(["check-oracle", "array_fill1", "--bounds", "n=2,lo=0,hi=2"]) == EXIT_OK
    assert "violations: 0" in capsys.readouterr().out
    assert main(["check-oracle", "array_fill1", "--bounds", "n=2,lo=0,hi=2", "--mutate", "0"]) == EXIT_VIOLATED
    assert "rule violation" in capsys.readouterr().out


def test_mutation_out_of_range():
    assert main(["check-oracle", "array_fill1", "--mutate", "99"]) == EXIT_USAGE


@spacer
def test_solve_exit_codes(tmp_path, capsys):
    assert main(["solve", "array_fill1"]) == EXIT_OK
    w = tmp_path / "w.txt"
    assert main(["solve", "array_fill1_bug", "-o", str(w)]) == EXIT_VIOLATED
    assert "violated at" in w.read_text()
    assert main(["solve", "counterexample", "--no-refine"]) == EXIT_UNKNOWN
    out = capsys.readouterr().out
    assert "proved" in out and "violated" in out and "unknown" in out


@spacer
def test_solve_with_refinement(capsys):
    assert main(["solve", "counterexample"]) == EXIT_OK
    assert "after 1 refinement" in capsys.readouterr().out


def test_cex_spurious(tmp_path, capsys):
    f = tmp_path / "tf.smt2"
    assert main(["cex", "counterexample", "-o", str(f)]) == EXIT_UNKNOWN
    out = capsys.readouterr().out
    assert "trace formula: unsat" in out and "refutation: a" in out
    assert "(check-sat)" in f.read_text()


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "cellmorph.cli", "emit", "loop_ij"], capture_output=True, text=True)
    assert r.returncode == 0 and "(check-sat)" in r.stdout
