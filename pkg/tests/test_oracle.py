import pytest

from cellmorph import corpus
from cellmorph.abstraction import AbstractionConfig
from cellmorph.frontend import build_cfg, parse_program, parse_properties
from cellmorph.oracle import (MUTATIONS, Bounds, Oracle, check_oracle, interpret, lfp, mutate,
                              validate_hints)
from cellmorph.pipeline import encode_source

SMALL = Bounds(n_max=2, lo=0, hi=2)


def cfg_of(name):
    return build_cfg(parse_program(corpus.source(name)))


def test_bounds_parse():
    assert Bounds.parse("n=2,lo=-1,hi=4") == Bounds(n_max=2, lo=-1, hi=4)
    with pytest.raises(ValueError):
        Bounds.parse("m=2")


def test_interpreter_fill_postcondition():
    cfg = cfg_of("array_fill1")
    reach = interpret(cfg, Bounds(n_max=3))
    ends = reach[cfg.exit]
    assert ends
    lengths = set()
    for s in ends:
        (arr,) = s.arrays
        lengths.add(len(arr))
        assert all(v == 42 for _, v in arr)
    assert lengths == {1, 2, 3}     # assume(n > 0)


def test_interpreter_out_of_range_reads_halt():
    cfg = build_cfg(parse_program("int x, n; int a[n]; x = a[n]; end: assert x >= 0;"))
    assert interpret(cfg, SMALL)[cfg.exit] == set()


def test_interpreter_reverse_is_reverse():
    cfg = cfg_of("array_reverse")
    for s in interpret(cfg, Bounds(n_max=3, hi=2))[cfg.exit]:
        a, b = (dict(x) for x in s.arrays)
        n = len(a)
        assert all(b[(k,)] == a[(n - 1 - k,)] for k in range(n))


@pytest.mark.parametrize("name", ["array_fill1", "find_minimum", "counterexample", "loop_ij"])
@pytest.mark.parametrize("cells", [1, 2])
def test_no_violations(name, cells):
    cfg = cfg_of(name)
    report = check_oracle(cfg, AbstractionConfig(default_cells=cells), SMALL)
    assert report.rule_violations == [], report.render()


def test_buggy_postcondition_is_reported_as_property_violation():
    report = check_oracle(cfg_of("array_fill1_bug"), AbstractionConfig(), SMALL)
    assert report.rule_violations == []
    assert report.property_violations
    assert "property violation" in report.render()


def test_counterexample_query_fails_abstractly_only():
    # the one-cell abstraction cannot prove v1 == v2, but the concrete states satisfy it
    cfg = cfg_of("counterexample")
    enc = encode_source(corpus.source("counterexample"), AbstractionConfig())
    tables = lfp(enc.raw, Oracle(cfg, AbstractionConfig(), SMALL).domain)
    assert any(r[0] != r[1] for r in tables["end"])
    assert all(s.scalars[0] == s.scalars[1] for s in interpret(cfg, SMALL)["end"])


@pytest.mark.parametrize("name, cells", [("counterexample", 1), ("counterexample", 2), ("loop_ij", 1)])
def test_abstract_least_model_covers_concrete(name, cells):
    """alpha of every reachable state lies in the least model of the raw clauses."""
    cfg, conf = cfg_of(name), AbstractionConfig(default_cells=cells)
    o = Oracle(cfg, conf, SMALL)
    tables = lfp(o.system, o.domain)
    for p, states in o.reach.items():
        for s in states:
            assert o.alpha(p, s) <= tables[p], p


def test_mutation_reported_with_provenance():
    enc = encode_source(corpus.source("array_fill1"), AbstractionConfig())
    m = MUTATIONS[0]
    report = check_oracle(enc.cfg, enc.conf, SMALL, system=mutate(enc.raw, m))
    assert report.rule_violations
    assert "write-diff" in report.violations[0].prov


def test_mutation_not_applicable():
    enc = encode_source(corpus.source("loop_ij"), AbstractionConfig())
    assert mutate(enc.raw, next(m for m in MUTATIONS if m.name == "count-decr")) is None


def test_mutation_changes_only_matching_rules():
    enc = encode_source(corpus.source("array_fill1"), AbstractionConfig())
    m = next(m for m in MUTATIONS if m.name == "write-same-value")
    out = mutate(enc.raw, m)
    changed = [a.prov.rule for a, b in zip(enc.raw.clauses, out.clauses) if a != b]
    assert changed == ["write-same"]


def test_hint_validation():
    src = corpus.source("selection_sort")
    prog = parse_program(src)
    cfg = build_cfg(prog)
    conf = AbstractionConfig(default_cells=2)
    good = parse_properties(corpus.hint_source("selection_sort"), prog)
    assert validate_hints(cfg, conf, good, Bounds(n_max=3, hi=2)) == []
    bad = parse_properties("hint at outerloop forall k: l0 <= k && k < h => a[k] == 0;", prog)
    assert validate_hints(cfg, conf, bad, Bounds(n_max=3, hi=2))
