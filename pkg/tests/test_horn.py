import pytest
import z3
from hypothesis import given, settings

from cellmorph import corpus
from cellmorph import terms as T
from cellmorph.abstraction import AbstractionConfig, protected_preds
from cellmorph.horn import (Atom, Goal, HornSystem, Pred, clause, clause_smt, coalesce,
                            emit_smtlib, simplify, substitute_equalities, symbol)
from cellmorph.oracle import Bounds, BudgetExceeded, lfp
from cellmorph.pipeline import encode_source, mode_config

from conftest import PROGRAMS
from strategies import programs

x, y = T.Var("x", T.INT), T.Var("y", T.INT)


def _z3_parses(text):
    z3.parse_smt2_string(text.replace("(check-sat)", ""))


@pytest.mark.parametrize("name", PROGRAMS)
def test_emitted_smtlib_is_wellformed(name, encoded):
    text = encoded(name).smtlib("header line")
    assert text.startswith("; header line\n(set-logic HORN)")
    assert text.rstrip().endswith("(check-sat)")
    _z3_parses(text)


def test_goal_clause_negates_conclusion():
    c = clause([Atom("p", (x, y))], T.lt(x, y), Goal(T.eq(x, T.const(0))))
    assert clause_smt(c) == "(assert (forall ((x Int) (y Int)) (=> (and (p x y) (< x y) (not (= x 0))) false)))"


def test_fact_without_variables():
    assert clause_smt(clause([], T.TRUE, Atom("p", ()))) == "(assert p)"


def test_reserved_symbols_are_quoted():
    assert symbol("exit") == "|exit|"
    assert symbol("loop") == "loop"


def _chain():
    s = HornSystem({n: Pred(n, (x,)) for n in ("p", "q", "r")})
    s.clauses = [
        clause([], T.eq(x, T.const(0)), Atom("p", (x,))),
        clause([Atom("p", (x,))], T.eq(y, T.add(x, T.const(1))), Atom("q", (y,))),
        clause([Atom("q", (x,))], T.lt(x, T.const(3)), Atom("q", (T.add(x, T.const(1)),))),
        clause([Atom("q", (x,))], T.TRUE, Atom("r", (x,))),
        clause([Atom("r", (x,))], T.TRUE, Goal(T.le(x, T.const(3)))),
    ]
    return s


def test_coalesce_inlines_single_use_predicates():
    s = coalesce(_chain())
    assert "p" not in s.preds          # single definition, single use
    assert "q" in s.preds              # recursive
    assert "r" in s.preds              # occurs in a query
    assert "q" in coalesce(_chain(), keep={"q"}).preds


def test_equalities_substituted():
    s = substitute_equalities(_chain())
    assert all("=" not in T.pretty(c.constraint).replace("<=", "") for c in s.clauses[:2])


def _domain(sort):
    return Bounds(n_max=2, lo=0, hi=2).values(sort)


def _same_models(raw, simp):
    a = lfp(raw, _domain)
    b = lfp(simp, _domain)
    for p in simp.preds:
        assert a[p] == b[p], p


def test_chain_models_agree():
    raw = _chain()
    _same_models(raw, simplify(raw))


@pytest.mark.parametrize("name, mode", [("loop_ij", "cells1"), ("array_fill1", "cells1"),
                                        ("counterexample", "cells1"), ("counterexample", "cells2"),
                                        ("array_fill1_even_odd", "weakened")])
def test_simplification_preserves_least_model(name, mode):
    enc = encode_source(corpus.source(name), mode_config(name, mode))
    _same_models(enc.raw, enc.system)


@settings(max_examples=20)
@given(programs(3))
def test_simplification_preserves_least_model_random(src):
    for conf in (AbstractionConfig(default_cells=1), AbstractionConfig(default_cells=2)):
        enc = encode_source(src, conf)
        try:
            _same_models(enc.raw, enc.system)
        except BudgetExceeded:
            pass


@given(programs(3))
def test_protected_predicates_survive(src):
    enc = encode_source(src, AbstractionConfig())
    assert protected_preds(enc.cfg) <= set(enc.system.preds)
    enc.system.check()


def test_emit_is_deterministic():
    a = encode_source(corpus.source("find_minimum"), AbstractionConfig(default_cells=2)).smtlib()
    b = encode_source(corpus.source("find_minimum"), AbstractionConfig(default_cells=2)).smtlib()
    assert a == b
    assert emit_smtlib(_chain()) == emit_smtlib(_chain())
