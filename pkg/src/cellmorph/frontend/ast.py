"""Syntax tree of the ``.arr`` mini-language."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..terms import Const, Select, Term, Var


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class FrontendError(Exception):
    def __init__(self, msg: str, loc: Optional[Loc] = None):
        self.loc = loc
        super().__init__(f"{loc}: {msg}" if loc else msg)


class ParseError(FrontendError):
    pass


class SortError(FrontendError):
    pass


class UndeclaredError(FrontendError):
    pass


@dataclass(frozen=True)
class ScalarDecl:
    name: str
    sort: str
    loc: Optional[Loc] = None


@dataclass(frozen=True)
class ArrayDecl:
    """An array (map).  ``ranges[d]`` is the exclusive upper bound of dimension
    ``d`` (indices ``0 .. range-1``) or ``None`` for an unbounded index set of
    sort ``index_sorts[d]``."""
    name: str
    value_sort: str
    index_sorts: tuple[str, ...]
    ranges: tuple[Optional[Term], ...]
    init_value: Optional[Const] = None
    copy_of: Optional[str] = None
    loc: Optional[Loc] = None

    @property
    def dims(self) -> int:
        return len(self.index_sorts)

    @property
    def ranged(self) -> bool:
        return all(r is not None for r in self.ranges)


@dataclass
class Assign:
    target: str
    expr: Term
    label: Optional[str] = None
    loc: Optional[Loc] = None


@dataclass
class Store:
    array: str
    index: tuple
    expr: Term
    label: Optional[str] = None
    loc: Optional[Loc] = None


@dataclass
class Assume:
    cond: Term
    label: Optional[str] = None
    loc: Optional[Loc] = None


@dataclass
class Skip:
    label: Optional[str] = None
    loc: Optional[Loc] = None


@dataclass
class SetOp:
    """Whole-array ``target = union(lhs, rhs)`` or ``intersection``."""
    target: str
    kind: str
    lhs: str
    rhs: str
    label: Optional[str] = None
    loc: Optional[Loc] = None


@dataclass
class While:
    cond: Term
    body: list
    label: Optional[str] = None
    loc: Optional[Loc] = None


@dataclass
class If:
    cond: Term
    then: list
    orelse: list
    label: Optional[str] = None
    loc: Optional[Loc] = None


Stmt = Union[Assign, Store, Assume, Skip, SetOp, While, If]


@dataclass(frozen=True)
class PropertySpec:
    """``forall binders: guard => conclusion`` at a control point.

    ``pins`` are extra cell terms whose indices instantiate distinguished cells
    not otherwise mentioned (dropped when they exceed the configured cells)."""
    point: Optional[str]
    binders: tuple[Var, ...]
    guard: Term
    conclusion: Term
    pins: tuple[Select, ...] = ()
    hint: bool = False
    loc: Optional[Loc] = None
    text: str = ""

    def __str__(self) -> str:
        return self.text or f"{self.guard} => {self.conclusion}"


@dataclass
class Program:
    scalars: list[ScalarDecl]
    arrays: list[ArrayDecl]
    body: list
    properties: list[PropertySpec] = field(default_factory=list)
    exit_label: Optional[str] = None
    source: str = ""

    def scalar(self, name: str) -> Optional[ScalarDecl]:
        return next((d for d in self.scalars if d.name == name), None)

    def array(self, name: str) -> Optional[ArrayDecl]:
        return next((d for d in self.arrays if d.name == name), None)

    @property
    def scalar_sorts(self) -> dict[str, str]:
        return {d.name: d.sort for d in self.scalars}
