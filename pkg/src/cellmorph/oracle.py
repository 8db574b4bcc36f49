"""Bounded brute-force oracle.

A concrete interpreter over small finite domains, the cell abstractions as
plain set comprehensions, and a clause checker that evaluates Horn clauses by
enumeration.  Nothing here calls an SMT solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from . import terms as T
from .frontend.cfg import (ArrayInit, ArrayRead, ArrayWrite, Cfg, Edge, Kill,
                           MultisetOp, ScalarOp)
from .terms import BOOL, INT, REAL, Var


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Bounds:
    n_max: int = 3            # largest array length (total cells for multi-dimensional arrays)
    lo: int = 0               # scalar and cell value range
    hi: int = 3
    max_states: int = 400_000

    def values(self, sort: str) -> tuple:
        if sort == BOOL:
            return (False, True)
        if sort == REAL:
            return tuple(Fraction(k, 2) for k in range(2 * self.lo, 2 * self.hi + 1))
        return tuple(range(self.lo, self.hi + 1))

    @classmethod
    def parse(cls, text: str) -> "Bounds":
        """``n=3,lo=0,hi=3`` style; missing keys keep their defaults."""
        kw = {}
        alias = {"n": "n_max", "states": "max_states"}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, val = part.partition("=")
            key = alias.get(key.strip(), key.strip())
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown bound {key!r}")
            kw[key] = int(val)
        return cls(**kw)


@dataclass(frozen=True)
class State:
    """Scalars in point-vector order; arrays (and their initial contents) in
    declaration order, each as a sorted tuple of ``(index, value)`` items."""
    scalars: tuple
    arrays: tuple
    orig: tuple = ()

    def env(self, vector, cfg: Cfg) -> dict:
        env = {v.name: x for v, x in zip(vector, self.scalars)}
        for a, items, o in itertools.zip_longest(cfg.arrays, self.arrays, self.orig):
            env[a.name] = dict(items)
            env["#orig:" + a.name] = dict(o if o is not None else items)
        return env


ReachSets = dict   # point -> set[State]


def _coerce(x, sort):
    if sort == REAL and not isinstance(x, bool):
        return Fraction(x)
    return x


def _freeze(d: dict) -> tuple:
    return tuple(sorted(d.items()))


def range_vars(cfg: Cfg) -> set:
    out = set()
    for a in cfg.arrays:
        out |= set(T.vars_of([r for r in a.ranges if r is not None]))
    return out


class Interpreter:
    def __init__(self, cfg: Cfg, bounds: Bounds = Bounds()):
        self.cfg, self.bounds = cfg, bounds

    # -- initial states

    def _domain(self, a, env) -> Optional[list]:
        dims = []
        for s, r in zip(a.index_sorts, a.ranges):
            if r is None:
                dims.append(self.bounds.values(s))
            else:
                dims.append(range(max(0, T.evaluate(r, env))))
        dom = list(itertools.product(*dims))
        if all(r is not None for r in a.ranges) and len(dom) > self.bounds.n_max:
            return None
        return dom

    def initial(self) -> set:
        cfg, b = self.cfg, self.bounds
        vec = cfg.points[cfg.entry]
        rv = range_vars(cfg)
        doms = [range(0, b.n_max + 1) if v.name in rv and v.sort == INT else b.values(v.sort) for v in vec]
        out = set()
        for xs in itertools.product(*doms):
            env = {v.name: x for v, x in zip(vec, xs)}
            contents = self._contents(env)
            if contents is None:
                continue
            for arrs in contents:
                out.add(State(xs, arrs, arrs))
        return out

    def _contents(self, env) -> Optional[list]:
        """Every combination of initial contents, or None when over budget."""
        per, fixed = [], {}
        for a in self.cfg.arrays:
            dom = self._domain(a, env)
            if dom is None:
                return None
            if a.init_value is not None:
                per.append([_freeze({i: a.init_value.value for i in dom})])
            elif a.copy_of is not None:
                per.append(None)
                fixed[a.name] = a.copy_of
            else:
                vals = self.bounds.values(a.value_sort)
                per.append([_freeze(dict(zip(dom, vs))) for vs in itertools.product(vals, repeat=len(dom))])
        names = [a.name for a in self.cfg.arrays]
        free = [p if p is not None else [None] for p in per]
        out = []
        for combo in itertools.product(*free):
            cur = dict(zip(names, combo))
            for n in names:
                src = n
                while cur[src] is None:
                    src = fixed[src]
                cur[n] = cur[src]
            out.append(tuple(cur[n] for n in names))
        return out

    # -- transitions

    def step(self, e: Edge, s: State) -> list:
        cfg = self.cfg
        env = s.env(cfg.points[e.src], cfg)
        arrays = {a.name: env[a.name] for a in cfg.arrays}
        orig = s.orig
        tr = e.tr
        try:
            if isinstance(tr, ScalarOp):
                if not T.evaluate(tr.guard, env):
                    return []
                new = {x: _coerce(T.evaluate(t, env), cfg.sorts.get(x, INT)) for x, t in tr.assigns}
                env.update(new)
            elif isinstance(tr, ArrayRead):
                idx = tuple(T.evaluate(i, env) for i in tr.index)
                arr = arrays[tr.array]
                if idx not in arr:
                    return []
                env[tr.target] = arr[idx]
            elif isinstance(tr, ArrayWrite):
                idx = tuple(T.evaluate(i, env) for i in tr.index)
                arr = arrays[tr.array]
                if idx not in arr:
                    return []
                arrays[tr.array] = {**arr, idx: _coerce(T.evaluate(tr.value, env), cfg.array(tr.array).value_sort)}
            elif isinstance(tr, ArrayInit):
                for n in tr.arrays:
                    a = cfg.array(n)
                    if a.init_value is not None:
                        arrays[n] = {i: a.init_value.value for i in arrays[n]}
                for a in cfg.arrays:
                    if a.name in tr.arrays and a.copy_of is not None:
                        arrays[a.name] = dict(arrays[a.copy_of])
                orig = tuple(_freeze(arrays[a.name]) for a in cfg.arrays)
            elif isinstance(tr, MultisetOp):
                lhs, rhs, out = arrays[tr.lhs], arrays[tr.rhs], {}
                for k in arrays[tr.target]:
                    if k not in lhs or k not in rhs:
                        return []
                    x, y = lhs[k], rhs[k]
                    if tr.kind == "union":
                        out[k] = (x or y) if isinstance(x, bool) else x + y
                    else:
                        out[k] = x and y
                arrays[tr.target] = out
            elif not isinstance(tr, Kill):
                raise TypeError(f"unknown transition {tr}")
        except (T.Undefined, ZeroDivisionError):
            return []
        arrs = tuple(_freeze(arrays[a.name]) for a in cfg.arrays)
        dst = cfg.points[e.dst]
        missing = [v for v in dst if v.name not in env]
        out = []
        for fill in itertools.product(*(self.bounds.values(v.sort) for v in missing)):
            env2 = dict(env, **{v.name: x for v, x in zip(missing, fill)})
            out.append(State(tuple(env2[v.name] for v in dst), arrs, orig))
        return out

    def run(self) -> ReachSets:
        cfg = self.cfg
        reach = {p: set() for p in cfg.points}
        reach[cfg.entry] = self.initial()
        work = [(cfg.entry, s) for s in reach[cfg.entry]]
        total = len(work)
        while work:
            p, s = work.pop()
            for e in cfg.out_edges(p):
                for s2 in self.step(e, s):
                    if s2 not in reach[e.dst]:
                        reach[e.dst].add(s2)
                        work.append((e.dst, s2))
                        total += 1
                        if total > self.bounds.max_states:
                            raise BudgetExceeded(f"more than {self.bounds.max_states} states")
        return reach


def interpret(cfg: Cfg, bounds: Bounds = Bounds()) -> ReachSets:
    return Interpreter(cfg, bounds).run()


# -- cell abstractions on single-array states ------------------------------------------
#
# A "plain" state is ``(xs, arr)``: a tuple of scalar values and a sorted tuple
# of ``(index, value)`` items.  Tables are sets of flat tuples.

def alpha_cell1(states: Iterable) -> set:
    return {xs + (k, v) for xs, arr in states for k, v in arr}


def alpha_cell2_ordered(states: Iterable) -> set:
    return {xs + (k1, v1, k2, v2) for xs, arr in states
            for k1, v1 in arr for k2, v2 in arr if k1 <= k2}


def alpha_cell2(states: Iterable) -> set:
    return {xs + (k1, v1, k2, v2) for xs, arr in states for k1, v1 in arr for k2, v2 in arr}


def alpha_count(states: Iterable, zs: Iterable, orig: bool = False) -> set:
    """``(xs, z, #a(z))`` for each sample ``z``; with ``orig`` the states are
    ``(xs, arr, arr0)`` and the original count is appended."""
    zs = tuple(zs)
    out = set()
    for st in states:
        xs, arr = st[0], st[1]
        vals = [v for _, v in arr]
        for z in zs:
            row = xs + (z, vals.count(z))
            if orig:
                row += (sum(1 for _, v in st[2] if v == z),)
            out.add(row)
    return out


# Concretizations, written from their universally quantified definitions.

def gamma_cell1(table: set, universe: Iterable) -> set:
    return {s for s in universe if all(s[0] + (k, v) in table for k, v in s[1])}


def gamma_cell2_ordered(table: set, universe: Iterable) -> set:
    return {s for s in universe
            if all(s[0] + (k1, v1, k2, v2) in table for k1, v1 in s[1] for k2, v2 in s[1] if k1 <= k2)}


def gamma_cell2(table: set, universe: Iterable) -> set:
    return {s for s in universe
            if all(s[0] + (k1, v1, k2, v2) in table for k1, v1 in s[1] for k2, v2 in s[1])}


def gamma_count(table: set, universe: Iterable, zs: Iterable, orig: bool = False) -> set:
    zs = tuple(zs)
    out = set()
    for st in universe:
        vals = [v for _, v in st[1]]
        ok = True
        for z in zs:
            row = st[0] + (z, vals.count(z))
            if orig:
                row += (sum(1 for _, v in st[2] if v == z),)
            if row not in table:
                ok = False
                break
        if ok:
            out.add(st)
    return out


def plain_universe(n: int, values: Iterable, scalars: Iterable = ((),)) -> list:
    """All single-array states of length ``n`` (1-D indices as 1-tuples)."""
    values = tuple(values)
    return [(xs, tuple(((i,), v) for i, v in enumerate(vs)))
            for xs in scalars for vs in itertools.product(values, repeat=n)]


# -- clause evaluation ------------------------------------------------------------------

def _ground(t, env) -> bool:
    return all(n in env for n in T.free_vars(t))


def _ev(t, env):
    try:
        return T.evaluate(t, env)
    except (T.Undefined, T.TermError, ZeroDivisionError, TypeError):
        return None


def _match(args, values, env: dict, pending: list) -> bool:
    """Unify atom arguments with a table row; non-variable arguments that are
    not yet ground are kept in ``pending`` as ``(term, value)`` pairs."""
    for a, v in zip(args, values):
        if isinstance(a, Var):
            if a.name in env:
                if env[a.name] != v:
                    return False
            else:
                env[a.name] = v
        else:
            pending.append((a, v))
    return _flush(env, pending)


def _flush(env: dict, pending: list) -> bool:
    rest = []
    for t, v in pending:
        if _ground(t, env):
            if _ev(t, env) != v:
                return False
        else:
            rest.append((t, v))
    pending[:] = rest
    return True


class ClauseEval:
    """Enumerates satisfying assignments of a clause body against finite tables.

    Universals left unbound by the body atoms are first bound through top-level
    equalities of the constraint, the rest range over ``domain(sort)``."""

    def __init__(self, domain):
        self.domain = domain
        self._univ = {}

    def universals(self, c) -> tuple:
        u = self._univ.get(id(c))
        if u is None:
            u = self._univ[id(c)] = (c, c.universals, T.conjuncts(c.constraint))
        return u[1], u[2]

    def solutions(self, c, tables: dict, env=None, pending=None):
        univ, parts = self.universals(c)
        yield from self._join(c, 0, tables, dict(env or {}), list(pending or []), univ, parts)

    def _join(self, c, j, tables, env, pending, univ, parts):
        if j == len(c.body):
            yield from self._close(env, pending, univ, parts)
            return
        atom = c.body[j]
        table = tables.get(atom.pred, ())
        if all(_ground(a, env) for a in atom.args):
            row = tuple(_ev(a, env) for a in atom.args)
            if row in table:
                yield from self._join(c, j + 1, tables, env, pending, univ, parts)
            return
        for row in table:
            e2, p2 = dict(env), list(pending)
            if _match(atom.args, row, e2, p2):
                yield from self._join(c, j + 1, tables, e2, p2, univ, parts)

    def _close(self, env, pending, univ, parts):
        env = dict(env)
        changed = True
        while changed:
            changed = False
            for p in parts:
                if isinstance(p, T.App) and p.op == "eq":
                    for x, t in (p.args, p.args[::-1]):
                        if isinstance(x, Var) and x.name not in env and _ground(t, env):
                            val = _ev(t, env)
                            if val is None:
                                return
                            env[x.name] = _coerce(val, x.sort)
                            changed = True
                            break
            for t, v in pending:
                if isinstance(t, T.App) and t.op in ("add", "sub") and not _ground(t, env):
                    # x + c = v  or  c + x = v, and x - c = v
                    free = [a for a in t.args if not _ground(a, env)]
                    if len(free) == 1 and isinstance(free[0], Var) and (t.op == "add" or t.args[0] is free[0]):
                        others = [_ev(a, env) for a in t.args if a is not free[0]]
                        if None in others:
                            return
                        x = v - sum(others) if t.op == "add" else v + others[0]
                        env[free[0].name] = _coerce(x, free[0].sort)
                        changed = True
        rest = [v for v in univ if v.name not in env]
        for fill in itertools.product(*(self.domain(v.sort) for v in rest)):
            e2 = dict(env, **{v.name: x for v, x in zip(rest, fill)})
            if all(_ev(t, e2) == v for t, v in pending) and _ev(T.conj(*parts), e2) is True:
                yield e2

    def heads(self, c, tables) -> set:
        out = set()
        for env in self.solutions(c, tables):
            row = tuple(_ev(a, env) for a in c.head.args)
            if None not in row:
                out.add(row)
        return out

    def derivable(self, clauses, tables, pred: str, row: tuple) -> bool:
        for c in clauses:
            if c.is_query or c.head.pred != pred:
                continue
            env, pending = {}, []
            if not _match(c.head.args, row, env, pending):
                continue
            if next(self.solutions(c, tables, env, pending), None) is not None:
                return True
        return False


@dataclass(frozen=True)
class Violation:
    kind: str           # "rule" or "property"
    clause: int         # index in the system; -1 for edge-level failures
    prov: str
    point: str
    assignment: str

    def __str__(self) -> str:
        where = f"clause {self.clause}" if self.clause >= 0 else "edge"
        return f"{self.kind} violation: {where} [{self.prov}] at {self.point}: {self.assignment}"


def check_rules(system, tables: dict, domain, queries: bool = True) -> list:
    """Every clause must map rows of ``tables`` into ``tables`` (or satisfy its goal)."""
    ev = ClauseEval(domain)
    out = []
    for j, c in enumerate(system.clauses):
        if c.is_query and not queries:
            continue
        for env in ev.solutions(c, tables):
            if c.is_query:
                ok = _ev(c.head.conclusion, env) is True
                point = c.body[0].pred if c.body else "-"
            else:
                row = tuple(_ev(a, env) for a in c.head.args)
                ok = row in tables.get(c.head.pred, ())
                point = c.head.pred
            if not ok:
                out.append(Violation("property" if c.is_query else "rule", j, str(c.prov), point,
                                     _fmt_env(env)))
                break
    return out


def _fmt_env(env: dict) -> str:
    return ", ".join(f"{k}={_fmt_val(v)}" for k, v in sorted(env.items()))


def _fmt_val(v) -> str:
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    return str(v)


# -- program-level oracle ------------------------------------------------------------------

def _consts(t, out: set) -> None:
    if isinstance(t, T.Const):
        out.add(t.value)
    elif isinstance(t, T.App):
        for a in t.args:
            _consts(a, out)
    elif isinstance(t, T.Select):
        for a in t.index:
            _consts(a, out)


def program_constants(cfg: Cfg) -> set:
    out = set()
    for e in cfg.edges:
        tr = e.tr
        if isinstance(tr, ScalarOp):
            _consts(tr.guard, out)
            for _, t in tr.assigns:
                _consts(t, out)
        elif isinstance(tr, ArrayWrite):
            _consts(tr.value, out)
    for a in cfg.arrays:
        if a.init_value is not None:
            out.add(a.init_value.value)
    return {c for c in out if not isinstance(c, bool)}


@dataclass
class OracleReport:
    violations: list = field(default_factory=list)
    states: int = 0
    checked: int = 0          # (state, successor) abstraction pairs checked

    @property
    def rule_violations(self) -> list:
        return [v for v in self.violations if v.kind == "rule"]

    @property
    def property_violations(self) -> list:
        return [v for v in self.violations if v.kind != "rule"]

    def render(self) -> str:
        lines = [f"states: {self.states}", f"checked: {self.checked}",
                 f"violations: {len(self.violations)}"]
        lines += [str(v) for v in self.violations]
        return "\n".join(lines) + "\n"


class Oracle:
    """Soundness check of an encoding against the bounded concrete semantics.

    For every reachable concrete step ``s -> s'`` along edge ``e``, every row of
    ``alpha({s'})`` must be derivable by the clauses of ``e`` from ``alpha({s})``.
    Intermediate predicates of an edge are evaluated forward.  Queries are
    evaluated on ``alpha({s})`` of every reachable state at their point."""

    def __init__(self, cfg: Cfg, conf, bounds: Bounds = Bounds(), props=None, hints=(), system=None):
        from .abstraction import Encoder
        enc = Encoder(cfg, conf, props, hints)
        raw = enc.run()
        self.cfg, self.conf, self.bounds = cfg, conf, bounds
        self.layout = enc.layout
        self.system = raw if system is None else system
        self.interp = Interpreter(cfg, bounds)
        consts = program_constants(cfg)
        self._zs = {}
        self._extra = consts
        self.ev = ClauseEval(self.domain)
        self._reach = None

    def domain(self, sort: str) -> tuple:
        base = self.bounds.values(sort)
        if sort == BOOL:
            return base
        extra = sorted({_coerce(c, sort) for c in self._extra if not isinstance(c, bool)} - set(base))
        return base + tuple(extra)

    def zs(self, sort: str) -> tuple:
        if sort not in self._zs:
            self._zs[sort] = self.domain(sort)
        return self._zs[sort]

    @property
    def reach(self) -> ReachSets:
        if self._reach is None:
            self._reach = self.interp.run()
        return self._reach

    # -- abstraction of one concrete state

    def alpha(self, point: str, s: State) -> frozenset:
        cfg, lay = self.cfg, self.layout
        env = s.env(cfg.points[point], cfg)
        comps = []
        if self.conf.shared_index and lay.blocks:
            first = lay.blocks[0]
            rows = []
            for k, _ in sorted(env[first.array.name].items()):
                if all(k in env[b.array.name] for b in lay.blocks):
                    row = dict(zip(first.idx[0], k))
                    row.update({b.val[0]: env[b.array.name][k] for b in lay.blocks})
                    rows.append(row)
            comps.append(rows)
        else:
            for blk in lay.blocks:
                items = sorted(env[blk.array.name].items())
                if blk.ncells == 1:
                    comps.append([{**dict(zip(blk.idx[0], k)), blk.val[0]: v} for k, v in items])
                else:
                    comps.append([{**dict(zip(blk.idx[0], k1)), blk.val[0]: v1,
                                   **dict(zip(blk.idx[1], k2)), blk.val[1]: v2}
                                  for k1, v1 in items for k2, v2 in items if k1 <= k2])
        for cb in lay.counts:
            cur = list(env[cb.array.name].values())
            org = list(env["#orig:" + cb.array.name].values())
            rows = []
            for z in self.zs(cb.array.value_sort):
                row = {cb.z: z, cb.cnt: cur.count(z)}
                if cb.cnt0:
                    row[cb.cnt0] = org.count(z)
                rows.append(row)
            comps.append(rows)
        slots = self.system.preds[point].slots
        out = set()
        for combo in itertools.product(*comps):
            m = dict(env)
            for c in combo:
                m.update(c)
            out.add(tuple(m[v.name] for v in slots))
        return frozenset(out)

    # -- checks

    def _by_edge(self) -> dict:
        out = {}
        for c in self.system.clauses:
            if not c.is_query and len(c.prov.edges) == 1:
                out.setdefault(c.prov.edges[0], []).append(c)
        return out

    def _intermediates(self, clauses, tables: dict) -> dict:
        tables = dict(tables)
        points = set(self.cfg.points)
        inter = [c for c in clauses if c.head.pred not in points]
        names = list(dict.fromkeys(c.head.pred for c in inter))
        while names:
            ready = [n for n in names
                     if all(a.pred not in names or a.pred == n for c in inter if c.head.pred == n for a in c.body)]
            if not ready:
                raise ValueError("cyclic intermediate predicates")
            for n in ready:
                rows = set()
                for c in inter:
                    if c.head.pred == n:
                        rows |= self.ev.heads(c, tables)
                tables[n] = rows
                names.remove(n)
        return tables

    def check_edges(self, report: OracleReport, limit: int = 3) -> None:
        cfg, sys_ = self.cfg, self.system
        index = {id(c): j for j, c in enumerate(sys_.clauses)}
        groups = self._by_edge()
        facts = [c for c in sys_.clauses if not c.is_query and not c.body and c.head.pred == cfg.entry]
        seen = set()
        for s in self.reach[cfg.entry]:
            A = self.alpha(cfg.entry, s)
            if A in seen:
                continue
            seen.add(A)
            for row in sorted(A, key=repr):
                if not self.ev.derivable(facts, {}, cfg.entry, row):
                    report.violations.append(Violation("rule", -1, "entry", cfg.entry, self._row(cfg.entry, row)))
                    break
        for e in cfg.edges:
            clauses = groups.get(e.id, [])
            final = [c for c in clauses if c.head.pred == e.dst]
            seen, found = set(), 0
            for s in sorted(self.reach[e.src], key=repr):
                succ = self.interp.step(e, s)
                if not succ:
                    continue
                A = self.alpha(e.src, s)
                tables = None
                for s2 in succ:
                    B = self.alpha(e.dst, s2)
                    if (A, B) in seen:
                        continue
                    seen.add((A, B))
                    report.checked += 1
                    if tables is None:
                        tables = self._intermediates(clauses, {e.src: A})
                    for row in sorted(B, key=repr):
                        if not self.ev.derivable(final, tables, e.dst, row):
                            rules = "+".join(dict.fromkeys(c.prov.rule for c in clauses)) or "-"
                            ids = ",".join(str(index[id(c)]) for c in final) or "-"
                            report.violations.append(Violation(
                                "rule", -1, f"e{e.id} {rules} clauses {ids}", e.dst, self._row(e.dst, row)))
                            found += 1
                            break
                    if found >= limit:
                        break
                if found >= limit:
                    break

    def check_queries(self, report: OracleReport, hints_only: bool = False) -> None:
        for j, c in enumerate(self.system.clauses):
            if not c.is_query or (hints_only and not c.prov.hint):
                continue
            point = c.body[0].pred if c.body else self.cfg.entry
            seen = set()
            for s in sorted(self.reach.get(point, ()), key=repr):
                A = self.alpha(point, s)
                if A in seen:
                    continue
                seen.add(A)
                bad = next((env for env in self.ev.solutions(c, {point: A})
                            if _ev(c.head.conclusion, env) is not True), None)
                if bad is not None:
                    kind = "hint" if c.prov.hint else "property"
                    report.violations.append(Violation(kind, j, str(c.prov), point, _fmt_env(bad)))
                    break

    def _row(self, pred: str, row: tuple) -> str:
        slots = self.system.preds[pred].slots
        return ", ".join(f"{v.name}={_fmt_val(x)}" for v, x in zip(slots, row))

    def run(self, queries: bool = True) -> OracleReport:
        report = OracleReport(states=sum(len(v) for v in self.reach.values()))
        self.check_edges(report)
        if queries:
            self.check_queries(report)
        return report


def check_oracle(cfg: Cfg, conf, bounds: Bounds = Bounds(), props=None, hints=(),
                 system=None, queries: bool = True) -> OracleReport:
    return Oracle(cfg, conf, bounds, props, hints, system).run(queries)


def validate_hints(cfg: Cfg, conf, hints, bounds: Bounds = Bounds()) -> list:
    """Hint violations at ``bounds``: a hint that fails on reachable concrete states."""
    o = Oracle(cfg, conf, bounds, props=[], hints=hints)
    report = OracleReport()
    o.check_queries(report, hints_only=True)
    return report.violations


# -- least fixpoint over a finite domain ---------------------------------------------------

def lfp(system, domain, max_rows: int = 200_000) -> dict:
    """Least model of the rules; unconstrained variables range over ``domain``,
    values computed from bound ones are kept as they are."""
    ev = ClauseEval(domain)
    tables = {p: set() for p in system.preds}
    total, changed = 0, True
    while changed:
        changed = False
        for c in system.rules:
            for row in ev.heads(c, tables):
                if row not in tables[c.head.pred]:
                    tables[c.head.pred].add(row)
                    total += 1
                    changed = True
                    if total > max_rows:
                        raise BudgetExceeded(f"more than {max_rows} rows")
    return tables


# -- clause mutations ---------------------------------------------------------------------

@dataclass(frozen=True)
class Mutation:
    name: str
    rule: str             # provenance rule the mutation applies to
    description: str
    op: str               # "flip": negate the first conjunct with op ``arg``; "bump": add ``delta`` to head slot ``arg``
    arg: str
    delta: int = 1


MUTATIONS = [
    Mutation("write-diff-flip", "write-diff", "k != i becomes k == i", "flip", "ne"),
    Mutation("write-same-value", "write-same", "written cell holds v + 1", "bump", ".v"),
    Mutation("read-diff-flip", "read-diff", "k != i becomes k == i", "flip", "ne"),
    Mutation("scalar-bump", "scalar", "first assigned scalar is off by one", "bump", "*"),
    Mutation("init-value", "init", "initial cell value negated", "flip", "eq"),
    Mutation("init-range", "init", "cell index bound k < n becomes k < n - 1", "shrink", "lt"),
    Mutation("read2-guard", "read2-3", "guard i < k2 negated", "flip", "lt"),
    Mutation("count-decr", "count-decr", "count of the overwritten value not decremented", "bump", ".cnt"),
    Mutation("count-incr", "count-incr", "count of the written value not incremented", "bump", ".cnt", -1),
    Mutation("write2-both", "write2-4", "second cell keeps v + 1 on a diagonal overwrite", "bump", ".v2"),
]


def _flip_first(constraint, op: str):
    parts = T.conjuncts(constraint)
    for j, p in enumerate(parts):
        if isinstance(p, T.App) and p.op == op:
            new = T.negate(p)
            return T.conj(*(parts[:j] + [new] + parts[j + 1:]))
    return None


def _shrink_first(constraint):
    parts = T.conjuncts(constraint)
    for j, p in enumerate(parts):
        if isinstance(p, T.App) and p.op == "lt" and not isinstance(p.args[1], T.Const):
            new = T.lt(p.args[0], T.sub(p.args[1], T.const(1)))
            return T.conj(*(parts[:j] + [new] + parts[j + 1:]))
    return None


def mutate_clause(m: Mutation, c, slots):
    """The mutated clause, or None when ``m`` does not apply to ``c``."""
    from dataclasses import replace
    from .horn import Atom
    if c.prov.rule != m.rule:
        return None
    if m.op == "flip":
        new = _flip_first(c.constraint, m.arg)
        return None if new is None else replace(c, constraint=new)
    if m.op == "shrink":
        new = _shrink_first(c.constraint)
        return None if new is None else replace(c, constraint=new)
    args = list(c.head.args)
    for j, (v, a) in enumerate(zip(slots, args)):
        if v.sort == BOOL:
            continue
        hit = v.name.endswith(m.arg) if m.arg != "*" else not isinstance(a, Var)
        if hit:
            args[j] = T.add(a, T.const(m.delta))
            return replace(c, head=Atom(c.head.pred, tuple(args)))
    return None


def mutate(system, m: Mutation):
    """``system`` with every applicable clause mutated; None if nothing applied."""
    out, hit = [], False
    for c in system.clauses:
        new = None if c.is_query else mutate_clause(m, c, system.preds[c.head.pred].slots)
        hit |= new is not None
        out.append(new if new is not None else c)
    return system.copy(out) if hit else None
