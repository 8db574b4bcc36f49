"""Quantifier-free arithmetic terms shared by the front-end, the Horn IR and the oracle.

Terms are immutable and hashable.  Integer literals are Python ints, real
literals are ``fractions.Fraction`` and boolean literals are ``bool``.
Only linear arithmetic is representable: multiplication requires a constant
factor and ``mod`` a positive constant divisor.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

INT = "Int"
REAL = "Real"
BOOL = "Bool"
SORTS = (INT, REAL, BOOL)

Value = Union[int, Fraction, bool]


class TermError(Exception):
    pass


@dataclass(frozen=True)
class Var:
    name: str
    sort: str = INT

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Value
    sort: str = INT

    def __str__(self) -> str:
        if self.sort == BOOL:
            return "true" if self.value else "false"
        return str(self.value)


@dataclass(frozen=True)
class App:
    op: str
    args: tuple

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Select:
    """Array cell ``array[index...]``; only in properties and un-normalized code."""
    array: str
    index: tuple
    sort: str = INT

    def __str__(self) -> str:
        return f"{self.array}[{', '.join(pretty(i) for i in self.index)}]"


@dataclass(frozen=True)
class Count:
    """Number of cells of ``array`` holding ``value`` (``orig``: in the initial array)."""
    array: str
    value: "Term"
    orig: bool = False

    sort = INT

    def __str__(self) -> str:
        fn = "orig_count" if self.orig else "count"
        return f"{fn}({self.array}, {pretty(self.value)})"


Term = Union[Var, Const, App, Select, Count]

ARITH_OPS = {"add", "sub", "neg", "mul", "mod"}
CMP_OPS = {"eq", "ne", "lt", "le", "gt", "ge"}
BOOL_OPS = {"and", "or", "not", "implies"}

TRUE = Const(True, BOOL)
FALSE = Const(False, BOOL)


def const(value: Value, sort: str | None = None) -> Const:
    if sort is None:
        if isinstance(value, bool):
            sort = BOOL
        elif isinstance(value, Fraction):
            sort = REAL
        else:
            sort = INT
    if sort == REAL:
        value = Fraction(value)
    return Const(value, sort)


def sort_of(t: Term) -> str:
    if isinstance(t, (Var, Const, Select)):
        return t.sort
    if isinstance(t, Count):
        return INT
    if t.op in CMP_OPS or t.op in BOOL_OPS:
        return BOOL
    sorts = {sort_of(a) for a in t.args}
    return REAL if REAL in sorts else INT


# -- smart constructors -------------------------------------------------------

def _coerce(a: Term, b: Term) -> tuple[Term, Term]:
    """Lift integer literals to reals when compared/added with a real term."""
    sa, sb = sort_of(a), sort_of(b)
    if sa == REAL and sb == INT and isinstance(b, Const):
        b = const(b.value, REAL)
    elif sb == REAL and sa == INT and isinstance(a, Const):
        a = const(a.value, REAL)
    return a, b


def add(a: Term, b: Term) -> Term:
    a, b = _coerce(a, b)
    if isinstance(b, Const) and b.value == 0:
        return a
    if isinstance(a, Const) and a.value == 0:
        return b
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value + b.value, sort_of(a))
    return App("add", (a, b))


def sub(a: Term, b: Term) -> Term:
    a, b = _coerce(a, b)
    if isinstance(b, Const) and b.value == 0:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return const(a.value - b.value, sort_of(a))
    return App("sub", (a, b))


def neg(a: Term) -> Term:
    if isinstance(a, Const):
        return const(-a.value, a.sort)
    return App("neg", (a,))


def mul(c: Term, a: Term) -> Term:
    if not isinstance(c, Const):
        c, a = a, c
    if not isinstance(c, Const):
        raise TermError("non-linear multiplication")
    c, a = _coerce(c, a)
    if isinstance(a, Const):
        return const(c.value * a.value, sort_of(a))
    if c.value == 1:
        return a
    return App("mul", (c, a))


def mod(a: Term, c: Term) -> Term:
    if not isinstance(c, Const) or c.sort != INT or c.value <= 0:
        raise TermError("mod requires a positive integer constant divisor")
    if isinstance(a, Const):
        return const(a.value % c.value, INT)
    return App("mod", (a, c))


def cmp(op: str, a: Term, b: Term) -> Term:
    a, b = _coerce(a, b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(_CMP[op](a.value, b.value), BOOL)
    if a == b and op in ("eq", "le", "ge"):
        return TRUE
    if a == b and op in ("ne", "lt", "gt"):
        return FALSE
    return App(op, (a, b))


def eq(a: Term, b: Term) -> Term:
    return cmp("eq", a, b)


def ne(a: Term, b: Term) -> Term:
    return cmp("ne", a, b)


def lt(a: Term, b: Term) -> Term:
    return cmp("lt", a, b)


def le(a: Term, b: Term) -> Term:
    return cmp("le", a, b)


def conj(*parts: Term) -> Term:
    out: list[Term] = []
    for p in parts:
        if isinstance(p, App) and p.op == "and":
            out.extend(p.args)
        elif p == TRUE:
            continue
        elif p == FALSE:
            return FALSE
        else:
            out.append(p)
    seen: list[Term] = []
    for p in out:
        if p not in seen:
            seen.append(p)
    if not seen:
        return TRUE
    if len(seen) == 1:
        return seen[0]
    return App("and", tuple(seen))


def disj(*parts: Term) -> Term:
    out: list[Term] = []
    for p in parts:
        if isinstance(p, App) and p.op == "or":
            out.extend(p.args)
        elif p == FALSE:
            continue
        elif p == TRUE:
            return TRUE
        elif p not in out:
            out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return App("or", tuple(out))


_NEGATED = {"eq": "ne", "ne": "eq", "lt": "ge", "ge": "lt", "le": "gt", "gt": "le"}


def negate(a: Term) -> Term:
    if isinstance(a, Const):
        return Const(not a.value, BOOL)
    if isinstance(a, App):
        if a.op == "not":
            return a.args[0]
        if a.op in _NEGATED:
            return App(_NEGATED[a.op], a.args)
        if a.op == "and":
            return disj(*(negate(x) for x in a.args))
        if a.op == "or":
            return conj(*(negate(x) for x in a.args))
    return App("not", (a,))


def implies(a: Term, b: Term) -> Term:
    return disj(negate(a), b)


def conjuncts(t: Term) -> list[Term]:
    if isinstance(t, App) and t.op == "and":
        return list(t.args)
    if t == TRUE:
        return []
    return [t]


# -- traversal ----------------------------------------------------------------

def free_vars(t: Term, acc: dict[str, Var] | None = None) -> dict[str, Var]:
    """Variables of ``t`` in first-occurrence order."""
    if acc is None:
        acc = {}
    if isinstance(t, Var):
        acc.setdefault(t.name, t)
    elif isinstance(t, App):
        for a in t.args:
            free_vars(a, acc)
    elif isinstance(t, Select):
        for a in t.index:
            free_vars(a, acc)
    elif isinstance(t, Count):
        free_vars(t.value, acc)
    return acc


def vars_of(terms: Iterable[Term]) -> dict[str, Var]:
    acc: dict[str, Var] = {}
    for t in terms:
        free_vars(t, acc)
    return acc


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    if not mapping:
        return t
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, Select):
        return Select(t.array, tuple(substitute(a, mapping) for a in t.index), t.sort)
    if isinstance(t, Count):
        return Count(t.array, substitute(t.value, mapping), t.orig)
    args = tuple(substitute(a, mapping) for a in t.args)
    return rebuild(t.op, args)


def rebuild(op: str, args: tuple) -> Term:
    """Re-apply the smart constructor for ``op`` (folds constants)."""
    if op == "add":
        out = args[0]
        for a in args[1:]:
            out = add(out, a)
        return out
    if op == "sub":
        return sub(*args)
    if op == "neg":
        return neg(args[0])
    if op == "mul":
        return mul(*args)
    if op == "mod":
        return mod(*args)
    if op in CMP_OPS:
        return cmp(op, *args)
    if op == "and":
        return conj(*args)
    if op == "or":
        return disj(*args)
    if op == "not":
        return negate(args[0])
    if op == "implies":
        return implies(*args)
    raise TermError(f"unknown operator {op}")


def map_cells(t: Term, fn) -> Term:
    """Rewrite every ``Select``/``Count`` node bottom-up with ``fn``."""
    if isinstance(t, (Var, Const)):
        return t
    if isinstance(t, Select):
        return fn(Select(t.array, tuple(map_cells(a, fn) for a in t.index), t.sort))
    if isinstance(t, Count):
        return fn(Count(t.array, map_cells(t.value, fn), t.orig))
    return rebuild(t.op, tuple(map_cells(a, fn) for a in t.args))


def cells_of(t: Term, acc: list | None = None) -> list:
    """``Select`` and ``Count`` nodes of ``t`` in first-occurrence order."""
    if acc is None:
        acc = []
    if isinstance(t, Select):
        for a in t.index:
            cells_of(a, acc)
        if t not in acc:
            acc.append(t)
    elif isinstance(t, Count):
        cells_of(t.value, acc)
        if t not in acc:
            acc.append(t)
    elif isinstance(t, App):
        for a in t.args:
            cells_of(a, acc)
    return acc


# -- evaluation ---------------------------------------------------------------

_CMP = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
}


class Undefined(TermError):
    """Raised when a term reads an array cell outside its defined index set."""


def evaluate(t: Term, env: Mapping[str, Value]) -> Value:
    """Evaluate ``t``; arrays are looked up in ``env`` as dicts keyed by index tuples."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Select):
        idx = tuple(evaluate(a, env) for a in t.index)
        try:
            return env[t.array][idx]
        except KeyError:
            raise Undefined(f"{t.array}{list(idx)} undefined") from None
    if isinstance(t, Count):
        key = ("#orig:" if t.orig else "") + t.array
        v = evaluate(t.value, env)
        return sum(1 for x in env[key].values() if x == v)
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise TermError(f"unbound variable {t.name}") from None
    op = t.op
    if op == "and":
        return all(evaluate(a, env) for a in t.args)
    if op == "or":
        return any(evaluate(a, env) for a in t.args)
    if op == "not":
        return not evaluate(t.args[0], env)
    if op == "implies":
        return (not evaluate(t.args[0], env)) or bool(evaluate(t.args[1], env))
    vals = [evaluate(a, env) for a in t.args]
    if op in _CMP:
        return _CMP[op](vals[0], vals[1])
    if op == "add":
        return sum(vals[1:], vals[0])
    if op == "sub":
        return vals[0] - vals[1]
    if op == "neg":
        return -vals[0]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "mod":
        return vals[0] % vals[1]
    raise TermError(f"unknown operator {op}")


# -- printing -----------------------------------------------------------------

_SMT_OP = {
    "add": "+", "sub": "-", "neg": "-", "mul": "*", "mod": "mod",
    "eq": "=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=",
    "and": "and", "or": "or", "not": "not", "implies": "=>",
}


def smt_literal(value: Value, sort: str) -> str:
    if sort == BOOL:
        return "true" if value else "false"
    if sort == REAL:
        f = Fraction(value)
        body = f"{abs(f.numerator)}.0" if f.denominator == 1 else \
            f"(/ {abs(f.numerator)}.0 {f.denominator}.0)"
        return f"(- {body})" if f < 0 else body
    return f"(- {-value})" if value < 0 else str(value)


def to_smt(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Select):
        return f"(select {t.array} {' '.join(to_smt(i) for i in t.index)})"
    if isinstance(t, Count):
        raise TermError("count terms have no SMT-LIB rendering")
    if isinstance(t, Const):
        return smt_literal(t.value, t.sort)
    if t.op == "ne":
        return f"(not (= {to_smt(t.args[0])} {to_smt(t.args[1])}))"
    return "(" + _SMT_OP[t.op] + " " + " ".join(to_smt(a) for a in t.args) + ")"


_INFIX = {
    "add": "+", "sub": "-", "mul": "*", "mod": "%",
    "eq": "==", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=",
    "and": "&&", "or": "||", "implies": "=>",
}


def pretty(t: Term) -> str:
    if isinstance(t, (Var, Const, Select, Count)):
        return str(t)
    if t.op == "neg":
        return f"-{_paren(t.args[0])}"
    if t.op == "not":
        return f"!{_paren(t.args[0])}"
    sep = f" {_INFIX[t.op]} "
    return sep.join(_paren(a) for a in t.args)


def _paren(t: Term) -> str:
    s = pretty(t)
    return f"({s})" if isinstance(t, App) and t.op not in ("mul",) else s
