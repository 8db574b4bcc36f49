"""Horn clause IR, the two simplification passes, and SMT-LIB 2 emission."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import terms as T
from .terms import BOOL, Term, Var


@dataclass(frozen=True)
class Pred:
    name: str
    slots: tuple          # tuple of Var: slot names and sorts

    @property
    def sorts(self) -> tuple:
        return tuple(v.sort for v in self.slots)

    @property
    def arity(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(T.pretty(a) for a in self.args)})"


@dataclass(frozen=True)
class Goal:
    conclusion: Term

    def __str__(self) -> str:
        return T.pretty(self.conclusion)


@dataclass(frozen=True)
class Provenance:
    edges: tuple          # CFG edge ids, in execution order
    rule: str
    hint: bool = False
    prop: int = -1        # index of the originating property (queries only)

    def __str__(self) -> str:
        es = ",".join(f"e{i}" for i in self.edges) or "-"
        return f"{es} {self.rule}" + (" [hint]" if self.hint else "")


@dataclass(frozen=True)
class HornClause:
    body: tuple
    constraint: Term
    head: Union[Atom, Goal]
    prov: Provenance = Provenance((), "")

    @property
    def universals(self) -> tuple:
        terms = [a for atom in self.body for a in atom.args] + [self.constraint]
        terms += list(self.head.args) if isinstance(self.head, Atom) else [self.head.conclusion]
        return tuple(T.vars_of(terms).values())

    @property
    def is_query(self) -> bool:
        return isinstance(self.head, Goal)

    @property
    def is_fact(self) -> bool:
        return not self.body

    @property
    def is_linear(self) -> bool:
        return len(self.body) <= 1

    def __str__(self) -> str:
        parts = [str(a) for a in self.body]
        if self.constraint != T.TRUE:
            parts.append(T.pretty(self.constraint))
        return f"{' & '.join(parts) or 'true'} => {self.head}"


def clause(body, constraint, head, prov=Provenance((), "")) -> HornClause:
    return HornClause(tuple(body), constraint, head, prov)


@dataclass
class HornSystem:
    preds: dict = field(default_factory=dict)     # name -> Pred
    clauses: list = field(default_factory=list)

    @property
    def rules(self) -> list:
        return [c for c in self.clauses if not c.is_query]

    @property
    def queries(self) -> list:
        return [c for c in self.clauses if c.is_query]

    def defining(self, name: str) -> list:
        return [c for c in self.clauses if isinstance(c.head, Atom) and c.head.pred == name]

    def copy(self, clauses=None) -> "HornSystem":
        return HornSystem(dict(self.preds), list(self.clauses if clauses is None else clauses))

    def check(self) -> None:
        """Arity and sort consistency of every atom."""
        for c in self.clauses:
            atoms = list(c.body) + ([c.head] if isinstance(c.head, Atom) else [])
            for a in atoms:
                p = self.preds.get(a.pred)
                if p is None:
                    raise ValueError(f"undeclared predicate {a.pred} in {c}")
                if len(a.args) != p.arity:
                    raise ValueError(f"arity mismatch for {a.pred} in {c}")
                for arg, s in zip(a.args, p.sorts):
                    if T.sort_of(arg) != s:
                        raise ValueError(f"sort mismatch for {a.pred} argument {T.pretty(arg)} in {c}")
            if T.sort_of(c.constraint) != BOOL:
                raise ValueError(f"non-boolean constraint in {c}")

    def __str__(self) -> str:
        return "\n".join(str(c) for c in self.clauses)


# -- substitution helpers ---------------------------------------------------------

def subst_atom(a: Atom, m) -> Atom:
    return Atom(a.pred, tuple(T.substitute(x, m) for x in a.args))


def subst_clause(c: HornClause, m) -> HornClause:
    head = subst_atom(c.head, m) if isinstance(c.head, Atom) else Goal(T.substitute(c.head.conclusion, m))
    return HornClause(tuple(subst_atom(a, m) for a in c.body), T.substitute(c.constraint, m), head, c.prov)


def _fresh_name(base: str, taken: set) -> str:
    k = 1
    while f"{base}!{k}" in taken:
        k += 1
    name = f"{base}!{k}"
    taken.add(name)
    return name


def rename_apart(c: HornClause, taken: set) -> HornClause:
    """Rename the universals of ``c`` that clash with ``taken`` (which is updated)."""
    m = {}
    for v in c.universals:
        if v.name in taken:
            m[v.name] = Var(_fresh_name(v.name.split("!")[0], taken), v.sort)
        else:
            taken.add(v.name)
    return subst_clause(c, m) if m else c


# -- coalescing -----------------------------------------------------------------------

def _occurrences(s: HornSystem) -> dict:
    occ = {}
    for c in s.clauses:
        for a in c.body:
            occ[a.pred] = occ.get(a.pred, 0) + 1
    return occ


def inline(use: HornClause, k: int, d: HornClause) -> HornClause:
    """Resolve body atom ``k`` of ``use`` with the head of ``d``."""
    target = use.body[k]
    taken = {v.name for v in use.universals}
    d = rename_apart(d, taken)
    m, eqs = {}, []
    for darg, uarg in zip(d.head.args, target.args):
        if isinstance(darg, Var) and darg.name not in m:
            m[darg.name] = uarg
        else:
            eqs.append(T.eq(darg, uarg))
    d = subst_clause(d, m)
    eqs = [T.substitute(e, m) for e in eqs]
    body = use.body[:k] + d.body + use.body[k + 1:]
    constraint = T.conj(d.constraint, *eqs, use.constraint)
    edges = d.prov.edges + use.prov.edges
    rule = "+".join(r for r in (d.prov.rule, use.prov.rule) if r)
    return HornClause(body, constraint, use.head, Provenance(edges, rule, use.prov.hint, use.prov.prop))


def coalesce(s: HornSystem, keep=frozenset()) -> HornSystem:
    """Inline predicates defined by a single linear clause and used exactly once.

    Predicates in ``keep`` and predicates occurring in queries are never inlined."""
    s = s.copy()
    while True:
        occ = _occurrences(s)
        in_queries = {a.pred for c in s.queries for a in c.body}
        victim = None
        for name in s.preds:
            if name in keep or name in in_queries or occ.get(name, 0) != 1:
                continue
            defs = s.defining(name)
            if len(defs) != 1 or not defs[0].is_linear:
                continue
            d = defs[0]
            if any(a.pred == name for a in d.body):
                continue
            victim = (name, d)
            break
        if victim is None:
            return s
        name, d = victim
        out = []
        for c in s.clauses:
            if c is d:
                continue
            k = next((j for j, a in enumerate(c.body) if a.pred == name), None)
            out.append(inline(c, k, d) if k is not None else c)
        s.clauses = out
        del s.preds[name]


# -- equality substitution ------------------------------------------------------------------

def _solvable(eq: Term, avoid: set) -> Optional[tuple]:
    if not (isinstance(eq, T.App) and eq.op == "eq"):
        return None
    a, b = eq.args
    for x, t in ((a, b), (b, a)):
        if isinstance(x, Var) and x.name not in avoid and x.name not in T.free_vars(t) \
                and x.sort == T.sort_of(t):
            return x, t
    return None


def substitute_clause_equalities(c: HornClause) -> HornClause:
    body_vars = {n for a in c.body for n in T.vars_of(a.args)}
    for avoid in (body_vars, set()):
        while True:
            parts = T.conjuncts(c.constraint)
            hit = None
            for j, p in enumerate(parts):
                sol = _solvable(p, avoid)
                if sol is not None:
                    hit = (j, sol)
                    break
            if hit is None:
                break
            j, (x, t) = hit
            rest = T.conj(*(parts[:j] + parts[j + 1:]))
            c = subst_clause(replace(c, constraint=rest), {x.name: t})
    return c


def substitute_equalities(s: HornSystem) -> HornSystem:
    return s.copy([substitute_clause_equalities(c) for c in s.clauses])


def simplify(s: HornSystem, keep=frozenset()) -> HornSystem:
    return substitute_equalities(coalesce(s, keep))


# -- SMT-LIB emission --------------------------------------------------------------------------

_RESERVED = {"exit", "assert", "push", "pop", "reset", "echo", "let", "forall", "exists",
             "par", "match", "as", "check-sat", "declare-fun", "define-fun", "true", "false",
             "not", "and", "or", "ite", "distinct", "select", "store", "mod", "div"}


def symbol(name: str) -> str:
    if name in _RESERVED:
        return f"|{name}|"
    return name


def _atom_smt(a: Atom) -> str:
    if not a.args:
        return symbol(a.pred)
    return f"({symbol(a.pred)} {' '.join(T.to_smt(x) for x in a.args)})"


def _conj_smt(parts: list) -> str:
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return f"(and {' '.join(parts)})"


def clause_smt(c: HornClause) -> str:
    body = [_atom_smt(a) for a in c.body]
    body += [T.to_smt(p) for p in T.conjuncts(c.constraint) if p != T.TRUE]
    if isinstance(c.head, Goal):
        if c.head.conclusion != T.TRUE:
            body.append(T.to_smt(T.negate(c.head.conclusion)))
        head = "false"
    else:
        head = _atom_smt(c.head)
    formula = f"(=> {_conj_smt(body)} {head})" if body else head
    us = c.universals
    if us:
        decls = " ".join(f"({v.name} {v.sort})" for v in us)
        formula = f"(forall ({decls}) {formula})"
    return f"(assert {formula})"


def emit_smtlib(s: HornSystem, header: Optional[str] = None) -> str:
    out = []
    if header:
        out += [f"; {line}" for line in header.splitlines()]
    out.append("(set-logic HORN)")
    for p in s.preds.values():
        slots = " ".join(v.name for v in p.slots)
        out.append(f"; {p.name}({slots})")
        out.append(f"(declare-fun {symbol(p.name)} ({' '.join(p.sorts)}) Bool)")
    for j, c in enumerate(s.clauses):
        kind = "query" if c.is_query else "rule"
        out.append(f"; {kind} {j}: {c.prov}")
        out.append(clause_smt(c))
    out.append("(check-sat)")
    return "\n".join(out) + "\n"
