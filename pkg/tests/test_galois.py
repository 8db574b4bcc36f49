"""Galois-connection laws for the cell and count abstractions, by enumeration."""

import itertools

import pytest
from hypothesis import given, strategies as st

from cellmorph.oracle import (alpha_cell1, alpha_cell2, alpha_cell2_ordered, alpha_count, gamma_cell1,
                              gamma_cell2, gamma_cell2_ordered, gamma_count, plain_universe)

VALUES = (0, 1)
N = 2


def subsets(xs):
    xs = list(xs)
    for bits in range(1 << len(xs)):
        yield {x for j, x in enumerate(xs) if bits >> j & 1}


def universe():
    # the length n is part of the scalar vector so arrays of different sizes stay apart
    return [s for n in range(N + 1) for s in plain_universe(n, VALUES, scalars=((n,),))]


def cell1_rows():
    return [(n, (k,), v) for n in range(N + 1) for k in range(N) for v in VALUES]


def cell2_rows(ordered):
    return [((k1,), v1, (k2,), v2) for k1, k2 in itertools.product(range(N), repeat=2)
            if k1 <= k2 or not ordered for v1 in VALUES for v2 in VALUES]


def count_rows():
    return [(z, c) for z in VALUES for c in range(N + 1)]


def orig_universe():
    flat = plain_universe(N, VALUES)
    return [((), a[1], b[1]) for a in flat for b in flat]


CASES = {
    "cell1": (alpha_cell1, gamma_cell1, universe, cell1_rows),
    "cell2<=": (alpha_cell2_ordered, gamma_cell2_ordered, lambda: plain_universe(N, VALUES),
                lambda: cell2_rows(True)),
    "cell2": (alpha_cell2, gamma_cell2, lambda: plain_universe(N, VALUES), lambda: cell2_rows(False)),
    "count": (lambda s: alpha_count(s, VALUES), lambda t, u: gamma_count(t, u, VALUES),
              lambda: plain_universe(N, VALUES), count_rows),
}


@pytest.mark.parametrize("kind", CASES)
def test_gamma_alpha_extensive(kind):
    alpha, gamma, uni, _ = CASES[kind]
    u = uni()
    bad = [S for S in subsets(u) if not S <= gamma(alpha(S), u)]
    assert bad == []


@pytest.mark.parametrize("kind", CASES)
def test_alpha_gamma_reductive(kind):
    alpha, gamma, uni, rows = CASES[kind]
    u = uni()
    bad = [T for T in subsets(rows()) if not alpha(gamma(T, u)) <= T]
    assert bad == []


def test_adjunction_cell1():
    u = universe()
    tables = list(subsets(cell1_rows()))[::7]
    for S in subsets(u):
        a = alpha_cell1(S)
        for T in tables:
            assert (a <= T) == (S <= gamma_cell1(T, u))


def test_count_with_original_contents():
    u = orig_universe()
    rows = [(z, c, c0) for z in VALUES for c in range(N + 1) for c0 in range(N + 1)]
    for S in subsets(u[:8]):
        assert S <= gamma_count(alpha_count(S, VALUES, orig=True), u, VALUES, orig=True)
    for T in itertools.islice(subsets(rows), 0, 1 << 18, 97):
        assert alpha_count(gamma_count(T, u, VALUES, orig=True), VALUES, orig=True) <= T


arrays = st.integers(0, 4).flatmap(lambda n: st.lists(st.integers(0, 3), min_size=n, max_size=n))


@given(arrays)
def test_counts_sum_to_length(vals):
    state = ((), tuple(((i,), v) for i, v in enumerate(vals)))
    rows = alpha_count([state], range(4))
    assert sum(c for _, c in rows) == len(vals)


@given(st.lists(arrays, min_size=1, max_size=4))
def test_alpha_is_monotone_and_additive(arrs):
    states = [((), tuple(((i,), v) for i, v in enumerate(vs))) for vs in arrs]
    for alpha in (alpha_cell1, alpha_cell2_ordered, lambda s: alpha_count(s, range(4))):
        whole = alpha(states)
        assert whole == set().union(*(alpha([s]) for s in states))


@given(arrays)
def test_ordered_pairs_are_a_subset(vals):
    state = ((), tuple(((i,), v) for i, v in enumerate(vals)))
    assert alpha_cell2_ordered([state]) <= alpha_cell2([state])
    # the diagonal of the pair table is the one-cell table
    diag = {(k1, v1) for k1, v1, k2, _ in alpha_cell2([state]) if k1 == k2}
    assert diag == alpha_cell1([state])
