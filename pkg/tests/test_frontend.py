import pytest
from hypothesis import given, strategies as st

from cellmorph import corpus
from cellmorph import terms as T
from cellmorph.frontend import (ArrayRead, ArrayWrite, FrontendError, Kill, ParseError, ScalarOp,
                                SortError, UndeclaredError, build_cfg, liveness, lower_to_cfg,
                                normalize, parse_program)
from cellmorph.frontend.cfg import is_normal
from cellmorph.oracle import Bounds, interpret

from conftest import PROGRAMS
from strategies import statements


@pytest.mark.parametrize("name", PROGRAMS)
def test_corpus_parses_and_normalizes(name):
    cfg = build_cfg(parse_program(corpus.source(name)))
    assert is_normal(cfg)
    assert cfg.entry in cfg.points and cfg.exit in cfg.points
    # every edge endpoint is a declared point
    for e in cfg.edges:
        assert e.src in cfg.points and e.dst in cfg.points


@pytest.mark.parametrize("src, err", [
    ("int x; x = y;", UndeclaredError),
    ("int x; bool b; x = b;", SortError),
    ("int x; x = ;", ParseError),
    ("int a[]; int x; x = a[1, 2];", SortError),
    ("int x; l: x = 1; l: x = 2;", ParseError),
    ("int x; int x;", ParseError),
    ("int x; if (x) { x = 1; }", SortError),
    ("int x; assert at nowhere x == 0;", UndeclaredError),
])
def test_frontend_errors(src, err):
    with pytest.raises(err):
        parse_program(src)
    assert issubclass(err, FrontendError)


def test_labels_become_points():
    cfg = build_cfg(parse_program(corpus.source("array_fill1")))
    assert {"loop", "write", "incr", "end"} <= set(cfg.points)


def test_reads_hoisted_out_of_guards():
    prog = parse_program("int x, n; int a[n]; if (a[x] < a[x + 1]) { x = a[0]; } end:")
    cfg = normalize(lower_to_cfg(prog))
    assert is_normal(cfg)
    guards = [e.tr.guard for e in cfg.edges if isinstance(e.tr, ScalarOp)]
    assert guards and not any(T.cells_of(g) for g in guards)
    # each branch re-reads both guard cells before testing, plus the body read
    assert sum(isinstance(e.tr, ArrayRead) for e in cfg.edges) == 5


def test_dead_variables_are_killed():
    src = "int x, y; int a[]; x = a[0]; y = x + 1; x = 0; end: assert y >= 0;"
    cfg = build_cfg(parse_program(src))
    assert any(isinstance(e.tr, Kill) for e in cfg.edges)
    assert [v.name for v in cfg.points[cfg.exit]] == ["y"]


def test_liveness_is_backward_closed():
    cfg = build_cfg(parse_program(corpus.source("find_minimum")))
    live = liveness(cfg)
    for e in cfg.edges:
        if isinstance(e.tr, ScalarOp):
            used = set(T.free_vars(e.tr.guard))
            for _, t in e.tr.assigns:
                used |= set(T.free_vars(t))
            assert used <= live[e.src] | {a.name for a in cfg.arrays}


# -- normalization and kill insertion keep the exit states ---------------------------

def _exit_projection(cfg, bounds, keep):
    reach = interpret(cfg, bounds)
    vec = [v.name for v in cfg.points[cfg.exit]]
    out = set()
    for s in reach[cfg.exit]:
        env = dict(zip(vec, s.scalars))
        out.add((tuple(env.get(k) for k in keep), s.arrays))
    return out


def _check_same_exit(src, bounds):
    prog = parse_program(src)
    raw, final = lower_to_cfg(prog), build_cfg(prog)
    keep = sorted({v.name for v in final.points[final.exit]} & {v.name for v in raw.points[raw.exit]})
    assert _exit_projection(raw, bounds, keep) == _exit_projection(final, bounds, keep)


@pytest.mark.parametrize("name", ["loop_ij", "array_fill1", "find_minimum", "array_reverse", "counterexample"])
def test_normalize_preserves_exit_states_corpus(name):
    _check_same_exit(corpus.source(name), Bounds(n_max=2, lo=0, hi=2))


@given(st.lists(statements(), min_size=1, max_size=4))
def test_normalize_preserves_exit_states_random(body):
    src = "int x, y, n; int a[n]; " + " ".join(body) + " end: assert x >= 0;"
    _check_same_exit(src, Bounds(n_max=2, lo=0, hi=1))


def test_write_edges_have_atomic_operands():
    cfg = build_cfg(parse_program("int x, n; int a[n]; a[x + 1] = a[x] + 1; end:"))
    w = [e.tr for e in cfg.edges if isinstance(e.tr, ArrayWrite)]
    assert len(w) == 1
    assert is_normal(cfg)
