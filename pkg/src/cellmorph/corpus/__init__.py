"""Example programs and the abstraction settings each one is meant to be run with."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Optional


@dataclass(frozen=True)
class Entry:
    name: str
    cells: dict = field(default_factory=dict)   # array -> 0/1/2; missing arrays use default_cells
    default_cells: int = 1
    multiset: Optional[str] = None
    hint: Optional[str] = None
    expect: str = "sat"                           # expected CHC verdict with these settings
    # modes exercised by the oracle suite
    modes: tuple = ("cells1", "weakened", "cells2")


CORPUS = {
    e.name: e for e in [
        Entry("loop_ij", modes=("cells1",)),
        Entry("array_fill1"),
        Entry("array_fill1_bug", expect="unsat"),
        Entry("array_fill1_even_odd"),
        Entry("real_indexed_map"),
        Entry("array_fill2"),
        Entry("array_reverse", cells={"a": 2, "b": 1},
              modes=("cells1", "weakened", "cells2", "mixed")),
        Entry("find_minimum"),
        Entry("selection_sort", default_cells=2, hint="selection_sort.hint", modes=("cells2",)),
        Entry("selection_sort_multiset", multiset="track-orig",
              modes=("cells1", "weakened", "multiset")),
        Entry("counterexample", expect="unsat"),
    ]
}


def source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.arr").read_text()


def hint_source(name: str) -> Optional[str]:
    e = CORPUS[name]
    if e.hint is None:
        return None
    return resources.files(__name__).joinpath(e.hint).read_text()


def path(name: str):
    return resources.files(__name__).joinpath(f"{name}.arr")
