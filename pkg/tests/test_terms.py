from fractions import Fraction

import pytest
import z3
from hypothesis import given, strategies as st

from cellmorph import terms as T

x, y = T.Var("x", T.INT), T.Var("y", T.INT)


def linear():
    leaf = st.one_of(st.sampled_from([x, y]), st.integers(-5, 5).map(T.const))
    return st.recursive(leaf, lambda s: st.one_of(
        st.tuples(s, s).map(lambda p: T.add(*p)),
        st.tuples(s, s).map(lambda p: T.sub(*p)),
        st.tuples(st.integers(-3, 3), s).map(lambda p: T.mul(T.const(p[0]), p[1]))), max_leaves=6)


def formulas():
    atom = st.tuples(st.sampled_from(sorted(T.CMP_OPS)), linear(), linear()).map(lambda p: T.cmp(*p))
    return st.recursive(atom, lambda s: st.one_of(
        st.lists(s, min_size=1, max_size=3).map(lambda ps: T.conj(*ps)),
        st.lists(s, min_size=1, max_size=3).map(lambda ps: T.disj(*ps)),
        s.map(T.negate)), max_leaves=5)


def z3_value(t, env):
    """Independent evaluation: hand the SMT-LIB rendering to z3."""
    decls = "".join(f"(declare-const {k} Int)(assert (= {k} {T.smt_literal(v, T.INT)}))" for k, v in env.items())
    sort = "Bool" if T.sort_of(t) == T.BOOL else "Int"
    f = z3.parse_smt2_string(decls + f"(declare-const r {sort})(assert (= r {T.to_smt(t)}))")
    s = z3.Solver()
    s.add(f)
    assert s.check() == z3.sat
    r = s.model().eval(z3.Const("r", z3.BoolSort() if sort == "Bool" else z3.IntSort()))
    return z3.is_true(r) if sort == "Bool" else r.as_long()


envs = st.fixed_dictionaries({"x": st.integers(-4, 4), "y": st.integers(-4, 4)})


@given(linear(), envs)
def test_arith_smt_agrees_with_evaluator(t, env):
    assert T.evaluate(t, env) == z3_value(t, env)


@given(formulas(), envs)
def test_formula_smt_agrees_with_evaluator(t, env):
    assert T.evaluate(t, env) == z3_value(t, env)


@given(formulas(), envs)
def test_negate_is_complement(t, env):
    assert T.evaluate(T.negate(t), env) == (not T.evaluate(t, env))


@given(formulas(), formulas(), envs)
def test_conj_disj_semantics(a, b, env):
    ea, eb = T.evaluate(a, env), T.evaluate(b, env)
    assert T.evaluate(T.conj(a, b), env) == (ea and eb)
    assert T.evaluate(T.disj(a, b), env) == (ea or eb)
    assert T.evaluate(T.implies(a, b), env) == ((not ea) or eb)


@given(linear(), linear(), envs)
def test_substitute_commutes_with_evaluation(t, u, env):
    inner = T.evaluate(u, env)
    assert T.evaluate(T.substitute(t, {"x": u}), env) == T.evaluate(t, dict(env, x=inner))


def test_literals():
    assert T.smt_literal(-3, T.INT) == "(- 3)"
    assert T.smt_literal(Fraction(-1, 2), T.REAL) == "(- (/ 1.0 2.0))"
    assert T.smt_literal(Fraction(2), T.REAL) == "2.0"
    assert T.to_smt(T.ne(x, y)) == "(not (= x y))"


def test_conj_flattens_and_drops_true():
    assert T.conj(T.TRUE, T.conj(T.lt(x, y), T.le(x, y)), T.lt(x, y)) == T.conj(T.lt(x, y), T.le(x, y))
    assert T.conj(T.lt(x, y), T.FALSE) == T.FALSE
    assert T.conjuncts(T.TRUE) == []


def test_select_evaluation_and_undefined():
    a = T.Select("a", (x,), T.INT)
    assert T.evaluate(a, {"x": 1, "a": {(1,): 7}}) == 7
    with pytest.raises(T.Undefined):
        T.evaluate(a, {"x": 2, "a": {(1,): 7}})


def test_real_coercion():
    r = T.Var("r", T.REAL)
    assert T.sort_of(T.add(r, T.const(1))) == T.REAL
    assert T.to_smt(T.add(r, T.const(1))) == "(+ r 1.0)"
