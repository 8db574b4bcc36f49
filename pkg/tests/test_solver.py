import copy
from fractions import Fraction

import pytest
import z3
from hypothesis import given, strategies as st

from cellmorph import corpus
from cellmorph import terms as T
from cellmorph.abstraction import AbstractionConfig
from cellmorph.pipeline import encode_corpus, encode_source
from cellmorph.solver import (available, extract_branch, find_unfolding, from_z3, parse_output,
                              refine, replay, run_solver, solve_portfolio, to_z3,
                              trace_is_path, trace_to_concrete_formula, validate_tree, verify)

spacer = pytest.mark.skipif(not available("spacer"), reason="z3 binary not found")

SAT = "(set-logic HORN)\n(declare-fun p (Int) Bool)\n(assert (forall ((x Int)) (=> (= x 0) (p x))))\n" \
      "(assert (forall ((x Int)) (=> (and (p x) (< x 5)) (p (+ x 1)))))\n" \
      "(assert (forall ((x Int)) (=> (and (p x) (> x 5)) false)))\n(check-sat)\n"
UNSAT = SAT.replace("(> x 5)", "(> x 4)")


@pytest.mark.parametrize("out, status", [
    ("sat\n(model)", "sat"), ("unsat\n", "unsat"), ("unknown\n", "unknown"), ("timeout\n", "timeout"),
    ("(error \"canceled: timeout\")", "timeout"), ("Segmentation fault", "crash"), ("", "crash"),
])
def test_parse_output(out, status):
    assert parse_output("spacer", out)[0] == status


@spacer
def test_run_solver_sat_unsat():
    assert run_solver(SAT, "spacer", 30).status == "sat"
    assert run_solver(UNSAT, "spacer", 30).status == "unsat"
    v = run_solver(SAT, "spacer", 30, model=True)
    assert "define-fun p" in v.model


@spacer
def test_run_solver_timeout_is_enforced():
    smt = encode_corpus("array_reverse", AbstractionConfig()).smtlib()
    v = run_solver(smt, "spacer", timeout=1)
    assert v.status in ("timeout", "unknown")
    assert v.seconds < 10


def test_missing_binary_is_a_crash(monkeypatch):
    monkeypatch.setenv("CELLMORPH_Z3", "/nonexistent/z3")
    assert not available("spacer")
    v = run_solver(SAT, "spacer", 5)
    assert v.status == "crash" and "CELLMORPH" in v.diagnostic


@spacer
def test_portfolio_skips_unavailable(monkeypatch):
    monkeypatch.setenv("CELLMORPH_ELDARICA", "/nonexistent/eld")
    v = solve_portfolio(SAT, ("eldarica", "spacer"), 30)
    assert v.status == "sat" and v.solver == "spacer"


# -- term conversion -------------------------------------------------------------------

x = T.Var("x", T.INT)
r = T.Var("r", T.REAL)


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_to_z3_int(a, b):
    t = T.sub(T.mul(T.const(3), x), T.const(b))
    got = z3.simplify(z3.substitute(to_z3(t, lambda n, s: z3.Int(n)), (z3.Int("x"), z3.IntVal(a))))
    assert from_z3(got, T.INT) == T.evaluate(t, {"x": a})


@given(st.fractions(min_value=-5, max_value=5, max_denominator=6))
def test_to_z3_real(q):
    t = T.add(r, T.const(Fraction(1, 3)))
    got = z3.simplify(z3.substitute(to_z3(t, lambda n, s: z3.Real(n)), (z3.Real("r"), z3.RealVal(q))))
    assert from_z3(got, T.REAL) == q + Fraction(1, 3)


# -- derivation trees ------------------------------------------------------------------

@pytest.fixture(scope="module")
def cex():
    enc = encode_corpus("counterexample", AbstractionConfig())
    tree = find_unfolding(enc.system, 6, 60)
    return enc, tree


def test_tree_found_and_valid(cex):
    enc, tree = cex
    assert tree is not None
    assert validate_tree(enc.system, tree) == []
    assert tree.root.clause.is_query


def test_no_tree_below_needed_depth(cex):
    enc, _ = cex
    assert find_unfolding(enc.system, 5, 60) is None


def test_no_tree_for_safe_system():
    enc = encode_corpus("counterexample", AbstractionConfig(default_cells=2))
    assert find_unfolding(enc.system, 6, 60) is None


def test_validator_rejects_tampering(cex):
    enc, tree = cex
    bad = copy.deepcopy(tree)
    node = bad.root.children[0]
    name = next(iter(node.assignment))
    node.assignment[name] = node.assignment[name] + 100 if not isinstance(node.assignment[name], bool) \
        else not node.assignment[name]
    assert validate_tree(enc.system, bad)


def test_leftmost_branch_is_a_cfg_path(cex):
    enc, tree = cex
    trace = extract_branch(tree)
    assert trace_is_path(trace, enc.cfg)
    assert trace.steps[0].edges[0] == 0


def test_trace_formula_refutes_spurious_path(cex):
    enc, tree = cex
    tf = trace_to_concrete_formula(extract_branch(tree), enc.cfg, enc.props)
    assert "select" in tf.text
    assert tf.check(30) == "unsat"
    assert tf.core_arrays == {"a"}


def test_refine():
    c = AbstractionConfig()
    assert refine(c, {"a"}).cells_of("a") == 2
    assert refine(refine(c, {"a"}), {"a"}) is None
    assert refine(AbstractionConfig(multiset="track"), {"a"}) is None


@spacer
def test_buggy_fill_trace_replays():
    enc = encode_corpus("array_fill1_bug")
    tree = find_unfolding(enc.system, 8, 60)
    assert tree is not None and validate_tree(enc.system, tree) == []
    trace = extract_branch(tree)
    tf = trace_to_concrete_formula(trace, enc.cfg, enc.props)
    assert tf.check(30) == "sat"
    w = replay(tf, trace, enc.cfg, enc.props)
    assert w.states[-1][0] == enc.cfg.exit
    assert "violated at k=" in w.render(enc.cfg)


@spacer
def test_verify_outcomes():
    out = verify(corpus.source("array_fill1"), AbstractionConfig(), timeout=60)
    assert out.verdict == "proved" and out.exit_code == 0
    out = verify(corpus.source("counterexample"), AbstractionConfig(), timeout=60, refine_arrays=False)
    assert out.verdict == "exhausted" and out.exit_code == 2
