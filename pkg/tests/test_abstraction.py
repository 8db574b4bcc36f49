from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from cellmorph import corpus
from cellmorph import terms as T
from cellmorph.abstraction import AbstractionConfig, AbstractionError, Encoder
from cellmorph.frontend import build_cfg, parse_program
from cellmorph.multiset import count_frame_ok
from cellmorph.oracle import Bounds, check_oracle
from cellmorph.pipeline import encode_source

DATA = Path(__file__).parent / "data"
READ = "int i, n, v; int a[n]; r: v = a[i]; end: assert v >= 0;"


def raw(src, **kw):
    cfg = build_cfg(parse_program(src))
    return Encoder(cfg, AbstractionConfig(**kw)).run()


def index_part(c, names):
    """Conjuncts of the clause constraint that only mention ``names``."""
    return T.conj(*(p for p in T.conjuncts(c.constraint) if set(T.free_vars(p)) <= names))


def read_guards(cells):
    s = raw(READ, default_cells=cells)
    names = {"i", "a.k", "a.k1", "a.k2"}   # range guards on i and the cells hold for the values tested
    return {c.prov.rule: index_part(c, names) for c in s.clauses if c.prov.rule.startswith("read")}


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 6))
def test_two_cell_read_cases_are_total(k1, gap, i):
    g = read_guards(2)
    env = {"a.k1": k1, "a.k2": k1 + gap, "i": i}
    hold = {r for r, t in g.items() if T.evaluate(t, env)}
    assert hold, env
    if k1 < i < k1 + gap:
        # a fresh index strictly between the cells can replace either one
        assert {"read2-1", "read2-2"} <= hold
    if i == k1:
        assert hold & {"read2-3", "read2-4"}


@given(st.integers(0, 4), st.integers(0, 4))
def test_one_cell_read_cases(k, i):
    g = read_guards(1)
    env = {"a.k": k, "i": i}
    assert T.evaluate(g["read-diff"], env) == (k != i)
    assert T.evaluate(g["read-same"], env)


def test_weakened_read_is_linear():
    s = raw(READ, weakened=True)
    assert all(c.is_linear for c in s.clauses)
    assert any(c.prov.rule == "read-weak" for c in s.clauses)
    assert not all(c.is_linear for c in raw(READ).clauses)


def test_init_covers_pair_and_diagonal_per_array():
    src = "int n; int a[n], b[n]; end: assert n >= 0;"
    rules = {c.prov.rule for c in raw(src, default_cells=2).clauses if c.prov.rule.startswith("init")}
    assert rules == {"init-pair", "init-diag", "init-a:pair,b:diag", "init-a:diag,b:pair"}


@pytest.mark.parametrize("conf, msg", [
    (dict(default_cells=2, shared_index=True), "shared_index"),
    (dict(default_cells=2, ordered=False), "ordered"),
    (dict(default_cells=2, multiset="track"), "multiset"),
    (dict(default_cells=3), "cells"),
])
def test_layout_rejects_unsupported_configs(conf, msg):
    with pytest.raises(AbstractionError, match=msg):
        raw(corpus.source("array_fill1"), **conf)


def test_count_terms_need_multiset():
    with pytest.raises(AbstractionError):
        raw(corpus.source("selection_sort_multiset"))


def test_count_blocks_are_framed():
    s = raw(corpus.source("selection_sort_multiset"), multiset="track-orig")
    cfg = build_cfg(parse_program(corpus.source("selection_sort_multiset")))
    layout = Encoder(cfg, AbstractionConfig(multiset="track-orig")).layout
    writers = ("count-", "init")
    for c in s.clauses:
        if not c.prov.rule.startswith(writers):
            assert count_frame_ok(c, s, layout), c


def test_count_writes_go_through_decrement_and_increment():
    s = raw(corpus.source("selection_sort_multiset"), multiset="track")
    rules = [c.prov.rule for c in s.clauses]
    for r in ("count-decr", "count-decr-other", "count-incr", "count-incr-other",
              "count-write-diff", "count-write-same"):
        assert rules.count(r) == 2, r     # two writes in the program
    assert any(p.endswith("__decr") for p in s.preds)


@pytest.mark.parametrize("name", ["sets", "msum"])
def test_shared_index_set_operations(name):
    src = (DATA / f"{name}.arr").read_text()
    conf = AbstractionConfig(shared_index=True)
    enc = encode_source(src, conf)
    assert any(c.prov.rule in ("union", "intersection") for c in enc.raw.clauses)
    report = check_oracle(enc.cfg, conf, Bounds(n_max=2, lo=0, hi=2), props=enc.props)
    assert report.violations == [], report.render()


def test_set_operations_need_shared_index():
    with pytest.raises(AbstractionError, match="shared-index"):
        raw((DATA / "sets.arr").read_text())


def test_unranged_arrays_have_no_range_guard():
    s = raw(corpus.source("counterexample"))
    init = next(c for c in s.clauses if c.prov.rule.startswith("init"))
    assert "a.k" not in {n for p in T.conjuncts(init.constraint) for n in T.free_vars(p)} or \
        all(p.op != "lt" for p in T.conjuncts(init.constraint) if isinstance(p, T.App))
