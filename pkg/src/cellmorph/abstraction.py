"""Distinguished-cell abstraction of normalized CFGs into array-free Horn clauses.

Each control point ``p`` gets a predicate whose slots are, in order:

* the scalar variables of ``p`` (declaration order, temporaries last),
* one block per array with cells > 0, in declaration order:
  ``a.k, a.v`` for one cell, ``a.k1, a.v1, a.k2, a.v2`` for two cells
  (``k1 <= k2``); multi-dimensional indices use ``a.k.0, a.k.1``...;
  with ``shared_index`` all arrays share ``shared.k`` and keep their own ``a.v``,
* one count block ``a.z, a.cnt[, a.cnt0]`` per multiset-tracked array.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

from . import multiset
from . import terms as T
from .frontend.ast import ArrayDecl, PropertySpec
from .frontend.cfg import (ENTRY, ArrayInit, ArrayRead, ArrayWrite, Cfg, Edge,
                           Kill, MultisetOp, ScalarOp, defs)
from .horn import Atom, Goal, HornClause, HornSystem, Pred, Provenance
from .terms import BOOL, INT, Count, Select, Term, Var


class AbstractionError(Exception):
    pass


@dataclass(frozen=True)
class AbstractionConfig:
    cells: dict = field(default_factory=dict)      # array -> 0, 1 or 2
    default_cells: int = 1
    ordered: bool = True
    weakened: bool = False
    multiset: Optional[str] = None                 # None, "track" or "track-orig"
    shared_index: bool = False
    bounds_guards: bool = True

    def cells_of(self, array: str) -> int:
        return self.cells.get(array, self.default_cells)

    def with_cells(self, array: str, n: int) -> "AbstractionConfig":
        return replace(self, cells={**self.cells, array: n})

    def describe(self) -> str:
        parts = [f"cells={self.default_cells}"]
        parts += [f"{a}={n}" for a, n in sorted(self.cells.items())]
        for flag in ("weakened", "shared_index"):
            if getattr(self, flag):
                parts.append(flag)
        if self.multiset:
            parts.append(f"multiset={self.multiset}")
        if not self.bounds_guards:
            parts.append("no-bounds")
        return " ".join(parts)


def _lex(op: str, a: tuple, b: tuple) -> Term:
    """Lexicographic comparison of index tuples (``op`` is lt or le)."""
    if len(a) == 1:
        return T.cmp(op, a[0], b[0])
    head = T.lt(a[0], b[0])
    return T.disj(head, T.conj(T.eq(a[0], b[0]), _lex(op, a[1:], b[1:])))


def idx_eq(a: tuple, b: tuple) -> Term:
    return T.conj(*(T.eq(x, y) for x, y in zip(a, b)))


def idx_ne(a: tuple, b: tuple) -> Term:
    return T.disj(*(T.ne(x, y) for x, y in zip(a, b)))


def idx_lt(a: tuple, b: tuple) -> Term:
    return _lex("lt", a, b)


def idx_le(a: tuple, b: tuple) -> Term:
    return _lex("le", a, b)


# -- layout -----------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    """Slot names of one array's cells: ``idx[j]`` is a tuple of names, ``val[j]`` a name."""
    array: ArrayDecl
    idx: tuple
    val: tuple

    @property
    def ncells(self) -> int:
        return len(self.val)


@dataclass(frozen=True)
class CountBlock:
    array: ArrayDecl
    z: str
    cnt: str
    cnt0: Optional[str]


class Layout:
    def __init__(self, cfg: Cfg, conf: AbstractionConfig, props=()):
        self.cfg, self.conf = cfg, conf
        self.blocks: list[Block] = []
        self.counts: list[CountBlock] = []
        tracked = [a for a in cfg.arrays if conf.cells_of(a.name) > 0]
        for a in cfg.arrays:
            n = conf.cells_of(a.name)
            if n not in (0, 1, 2):
                raise AbstractionError(f"{a.name}: cells must be 0, 1 or 2")
            if BOOL in a.index_sorts:
                raise AbstractionError(f"{a.name}: boolean indices are not supported")
        if conf.shared_index and tracked:
            ref = tracked[0]
            for a in tracked:
                if conf.cells_of(a.name) != 1:
                    raise AbstractionError("shared_index requires one cell per array")
                if (a.index_sorts, a.ranges) != (ref.index_sorts, ref.ranges):
                    raise AbstractionError("shared_index requires arrays with identical index sets")
        if not conf.ordered and any(conf.cells_of(a.name) == 2 for a in tracked):
            raise AbstractionError("two-cell encoding is only defined for ordered cells (k1 <= k2)")
        for a in tracked:
            n = conf.cells_of(a.name)
            if conf.shared_index:
                base = ["shared.k"]
            elif n == 1:
                base = [f"{a.name}.k"]
            else:
                base = [f"{a.name}.k1", f"{a.name}.k2"]
            idx = tuple(tuple(b if a.dims == 1 else f"{b}.{d}" for d in range(a.dims)) for b in base)
            val = (f"{a.name}.v",) if n == 1 else (f"{a.name}.v1", f"{a.name}.v2")
            self.blocks.append(Block(a, idx, val))
        orig = {c.array for p in props for c in _counts(p) if c.orig}
        mentioned = {c.array for p in props for c in _counts(p)}
        if mentioned and not conf.multiset:
            raise AbstractionError("count terms need multiset tracking")
        if conf.multiset:
            if conf.multiset not in ("track", "track-orig"):
                raise AbstractionError(f"unknown multiset mode {conf.multiset!r}")
            for a in cfg.arrays:
                if conf.cells_of(a.name) == 0:
                    continue
                if conf.cells_of(a.name) != 1 or conf.shared_index:
                    raise AbstractionError("multiset tracking needs exactly one separate cell")
                if a.dims != 1 or not a.ranged:
                    raise AbstractionError(f"{a.name}: multiset tracking needs a one-dimensional ranged array")
                with_orig = conf.multiset == "track-orig" or a.name in orig
                self.counts.append(CountBlock(a, f"{a.name}.z", f"{a.name}.cnt",
                                              f"{a.name}.cnt0" if with_orig else None))
        for c in orig:
            if not any(cb.array.name == c and cb.cnt0 for cb in self.counts):
                raise AbstractionError(f"orig_count({c}, ...) needs the original-contents copy")

    def block(self, array: str) -> Optional[Block]:
        return next((b for b in self.blocks if b.array.name == array), None)

    def count(self, array: str) -> Optional[CountBlock]:
        return next((c for c in self.counts if c.array.name == array), None)

    def array_slots(self) -> list:
        out, seen = [], set()
        for b in self.blocks:
            for j in range(b.ncells):
                for d, name in enumerate(b.idx[j]):
                    if name not in seen:
                        seen.add(name)
                        out.append(Var(name, b.array.index_sorts[d]))
                out.append(Var(b.val[j], b.array.value_sort))
        if self.conf.shared_index and self.blocks:
            # shared index slots first, then the values
            idx = [v for v in out if v.name.startswith("shared.")]
            out = idx + [v for v in out if not v.name.startswith("shared.")]
        for c in self.counts:
            out += [Var(c.z, c.array.value_sort), Var(c.cnt, INT)]
            if c.cnt0:
                out.append(Var(c.cnt0, INT))
        return out

    def slots(self, point: str) -> tuple:
        return tuple(self.cfg.points[point]) + tuple(self.array_slots())


def _counts(p: PropertySpec) -> list:
    out = []
    for t in (p.guard, p.conclusion):
        out += [c for c in T.cells_of(t) if isinstance(c, Count)]
    return out


# -- encoder ------------------------------------------------------------------------

class Encoder:
    def __init__(self, cfg: Cfg, conf: AbstractionConfig, props=None, hints=()):
        self.cfg, self.conf = cfg, conf
        self.props = list(cfg.properties if props is None else props)
        self.hints = [replace(h, hint=True) for h in hints]
        self.layout = Layout(cfg, conf, self.props + self.hints)
        self.system = HornSystem()
        self.assigned = set().union(*(defs(e.tr) for e in cfg.edges)) if cfg.edges else set()
        for p in cfg.points:
            self.system.preds[p] = Pred(p, self.layout.slots(p))

    # state helpers: a state maps slot names to terms

    def base(self, point: str) -> dict:
        return {v.name: v for v in self.system.preds[point].slots}

    def atom(self, point: str, st: dict) -> Atom:
        return Atom(point, tuple(st[v.name] for v in self.system.preds[point].slots))

    def set_cell(self, st: dict, blk: Block, j: int, idx: tuple = None, val: Term = None) -> dict:
        st = dict(st)
        if idx is not None:
            for name, t in zip(blk.idx[j], idx):
                st[name] = t
        if val is not None:
            st[blk.val[j]] = val
        return st

    def cell_idx(self, st: dict, blk: Block, j: int) -> tuple:
        return tuple(st[n] for n in blk.idx[j])

    def moved(self, st: dict, blk: Block, j: int, idx: tuple, val: Term, tag: str) -> dict:
        """``st`` with cell ``j`` of ``blk`` moved to ``idx`` holding ``val``; in
        shared-index mode the other arrays' values at the new index are fresh."""
        st = self.set_cell(st, blk, j, idx, val)
        if self.conf.shared_index:
            for other in self.layout.blocks:
                if other is not blk:
                    st[other.val[0]] = Var(f"{other.array.name}.{tag}", other.array.value_sort)
        return st

    def guards(self, point: str, st: dict) -> list:
        """Index range guards for the cells of one body atom."""
        if not self.conf.bounds_guards:
            return []
        names = {v.name for v in self.system.preds[point].slots}
        out = []
        for blk in self.layout.blocks:
            a = blk.array
            rvars = set(T.vars_of([r for r in a.ranges if r is not None]))
            if not rvars <= names or rvars & self.assigned:
                continue
            for j in range(blk.ncells):
                if self.conf.shared_index and blk is not self.layout.blocks[0]:
                    break
                for d, r in enumerate(a.ranges):
                    if r is None:
                        continue
                    k = st[blk.idx[j][d]]
                    out += [T.le(T.const(0), k), T.lt(k, T.substitute(r, st))]
        return out

    def emit(self, edge: Optional[Edge], rule: str, body: list, constraint, head, hint=False):
        """``body`` is a list of (point, state) pairs."""
        atoms = [self.atom(p, st) for p, st in body]
        parts = [constraint] if isinstance(constraint, (T.Var, T.Const, T.App)) else list(constraint)
        for p, st in body:
            parts += self.guards(p, st)
        prov = Provenance((edge.id,) if edge is not None else (), rule, hint)
        self.system.clauses.append(HornClause(tuple(atoms), T.conj(*_dedup(parts)), head, prov))

    # -- encoding

    def run(self) -> HornSystem:
        cfg = self.cfg
        self.emit(None, "entry", [], T.TRUE, self.atom(ENTRY, self.base(ENTRY)))
        for e in cfg.edges:
            tr = e.tr
            if isinstance(tr, ScalarOp):
                self.scalar(e)
            elif isinstance(tr, Kill):
                st = self.base(e.src)
                self.emit(e, "kill", [(e.src, st)], T.TRUE, self.atom(e.dst, st))
            elif isinstance(tr, ArrayInit):
                self.init(e)
            elif isinstance(tr, ArrayRead):
                self.read(e)
            elif isinstance(tr, ArrayWrite):
                self.write(e)
            elif isinstance(tr, MultisetOp):
                multiset.abstract_setop(self, e)
            else:
                raise AbstractionError(f"unsupported transition {tr}")
        for j, p in enumerate(self.props + self.hints):
            if _counts(p):
                multiset.encode_count_property(self, p, j)
            else:
                self.query(p, j)
        return self.system

    def scalar(self, e: Edge) -> None:
        st = self.base(e.src)
        head = dict(st)
        for x, t in e.tr.assigns:
            head[x] = t
        self.emit(e, "scalar", [(e.src, st)], e.tr.guard, self.atom(e.dst, head))

    def init(self, e: Edge) -> None:
        """Fresh cells for every array; ranged indices are bounded, cells=2 splits
        into the strictly ordered pair and the diagonal."""
        st = self.base(e.src)
        two = [b for b in self.layout.blocks if b.ncells == 2]
        variants = [("init", {})]
        if two:
            # every array independently gets the ordered pair or the diagonal
            variants = []
            for flags in itertools.product((False, True), repeat=len(two)):
                rule = "init-diag" if all(flags) else "init-pair" if not any(flags) else "init-" + \
                    ",".join(f"{b.array.name}:{'diag' if f else 'pair'}" for b, f in zip(two, flags))
                variants.append((rule, {b.array.name: f for b, f in zip(two, flags)}))
        for rule, diag in variants:
            head = {v.name: v for v in self.system.preds[e.dst].slots}
            head.update({k: v for k, v in st.items()})
            parts = []
            for blk in self.layout.blocks:
                a = blk.array
                if diag.get(a.name):
                    head = self.set_cell(head, blk, 1, self.cell_idx(head, blk, 0), head[blk.val[0]])
                elif blk.ncells == 2:
                    parts.append(idx_lt(self.cell_idx(head, blk, 0), self.cell_idx(head, blk, 1)))
                for j in range(blk.ncells):
                    k = self.cell_idx(head, blk, j)
                    for d, r in enumerate(a.ranges):
                        if r is not None:
                            parts += [T.le(T.const(0), k[d]), T.lt(k[d], r)]
                    if a.init_value is not None:
                        parts.append(T.eq(head[blk.val[j]], a.init_value))
            parts += self.copy_constraints(head)
            for cb in self.layout.counts:
                parts += multiset.count_init(self, cb, head)
            self.emit(e, rule, [(e.src, st)], _dedup(parts), self.atom(e.dst, head))

    def copy_constraints(self, st: dict) -> list:
        """``b = a`` declarations: cells of a copy agree with the original where indices coincide."""
        out = []
        for blk in self.layout.blocks:
            src = blk.array.copy_of
            while src is not None:
                other = self.layout.block(src)
                if other is not None:
                    for j in range(blk.ncells):
                        for i in range(other.ncells):
                            ki, kj = self.cell_idx(st, other, i), self.cell_idx(st, blk, j)
                            if ki == kj:
                                out.append(T.eq(st[other.val[i]], st[blk.val[j]]))
                            else:
                                out.append(T.implies(idx_eq(ki, kj), T.eq(st[other.val[i]], st[blk.val[j]])))
                    break
                src = self.cfg.array(src).copy_of
        return out

    # -- reads

    def read(self, e: Edge) -> None:
        tr: ArrayRead = e.tr
        blk = self.layout.block(tr.array)
        a = self.cfg.array(tr.array)
        st = self.base(e.src)
        if tr.target in st:
            raise AbstractionError(f"read target {tr.target} is not fresh at {e.src}")
        w = Var(tr.target, a.value_sort)
        i = tuple(tr.index)
        if blk is None:
            head = dict(st, **{tr.target: w})
            self.emit(e, "read0", [(e.src, st)], T.TRUE, self.atom(e.dst, head))
            return
        if blk.ncells == 1:
            k = self.cell_idx(st, blk, 0)
            at_i = self.moved(st, blk, 0, i, w, "r")
            head_same = dict(at_i, **{tr.target: w})
            if self.conf.weakened:
                head = dict(st, **{tr.target: w})
                self.emit(e, "read-weak", [(e.src, st)], idx_ne(k, i), self.atom(e.dst, head))
            else:
                head = dict(st, **{tr.target: w})
                self.emit(e, "read-diff", [(e.src, st), (e.src, at_i)], idx_ne(k, i),
                          self.atom(e.dst, head))
            self.emit(e, "read-same", [(e.src, at_i)], T.TRUE, self.atom(e.dst, head_same))
            return
        k1, k2 = self.cell_idx(st, blk, 0), self.cell_idx(st, blk, 1)
        head = dict(st, **{tr.target: w})
        s1 = self.set_cell(st, blk, 0, i, w)
        s2 = self.set_cell(st, blk, 1, i, w)
        self.emit(e, "read2-1", [(e.src, st), (e.src, s1)], [idx_ne(k1, i), idx_lt(i, k2)],
                  self.atom(e.dst, head))
        self.emit(e, "read2-2", [(e.src, st), (e.src, s2)], [idx_ne(k2, i), idx_lt(k1, i)],
                  self.atom(e.dst, head))
        self.emit(e, "read2-3", [(e.src, s1)], idx_lt(i, k2), self.atom(e.dst, dict(s1, **{tr.target: w})))
        self.emit(e, "read2-4", [(e.src, s2)], idx_le(k1, i), self.atom(e.dst, dict(s2, **{tr.target: w})))

    # -- writes

    def write(self, e: Edge) -> None:
        tr: ArrayWrite = e.tr
        blk = self.layout.block(tr.array)
        st = self.base(e.src)
        i, v = tuple(tr.index), tr.value
        if blk is None:
            self.emit(e, "write0", [(e.src, st)], T.TRUE, self.atom(e.dst, st))
            return
        cb = self.layout.count(tr.array)
        if cb is not None:
            multiset.abstract_write_count(self, e, blk, cb)
            return
        if blk.ncells == 1:
            k = self.cell_idx(st, blk, 0)
            self.emit(e, "write-diff", [(e.src, st)], idx_ne(k, i), self.atom(e.dst, st))
            body = self.set_cell(st, blk, 0, i)
            self.emit(e, "write-same", [(e.src, body)], T.TRUE,
                      self.atom(e.dst, self.set_cell(body, blk, 0, val=v)))
            return
        k1, k2 = self.cell_idx(st, blk, 0), self.cell_idx(st, blk, 1)
        self.emit(e, "write2-1", [(e.src, st)], [idx_ne(i, k1), idx_ne(i, k2)], self.atom(e.dst, st))
        b2 = self.set_cell(st, blk, 0, i)
        self.emit(e, "write2-2", [(e.src, b2)], idx_ne(i, k2),
                  self.atom(e.dst, self.set_cell(b2, blk, 0, val=v)))
        b3 = self.set_cell(st, blk, 1, i)
        self.emit(e, "write2-3", [(e.src, b3)], idx_ne(i, k1),
                  self.atom(e.dst, self.set_cell(b3, blk, 1, val=v)))
        b4 = self.set_cell(self.set_cell(st, blk, 0, i), blk, 1, i, st[blk.val[0]])
        h4 = self.set_cell(self.set_cell(b4, blk, 0, val=v), blk, 1, val=v)
        self.emit(e, "write2-4", [(e.src, b4)], T.TRUE, self.atom(e.dst, h4))

    # -- properties

    def query(self, p: PropertySpec, index: int = -1) -> None:
        point = self.cfg.point_of(p)
        st = self.base(point)
        for b in p.binders:
            if b.name in st:
                raise AbstractionError(f"binder {b.name} clashes with a slot")
        guard, concl = p.guard, p.conclusion
        cells = [c for t in (guard, concl) for c in T.cells_of(t)]
        selects = [c for c in cells if isinstance(c, Select)]
        counts = [c for c in cells if isinstance(c, Count)]
        for c in counts:
            cb = self.layout.count(c.array)
            if cb is None:
                raise AbstractionError(f"count({c.array}, ...) without multiset tracking")
            if st[cb.z] != Var(cb.z, cb.array.value_sort) and st[cb.z] != c.value:
                raise AbstractionError(f"several count samples for {c.array} in one property")
            st[cb.z] = c.value
        by_array: dict = {}
        for s in list(dict.fromkeys(selects)) + list(p.pins):
            lst = by_array.setdefault(s.array, [])
            if s.index not in [x.index for x in lst]:
                lst.append(s)
        n_real = {a: len({s.index for s in selects if s.array == a}) for a in by_array}
        variants = [(st, [])]
        repl = {}
        for a, terms_ in by_array.items():
            blk = self.layout.block(a)
            n = blk.ncells if blk else 0
            if n_real[a] > n:
                raise AbstractionError(f"property uses {n_real[a]} cells of {a}, configured {n}")
            terms_ = terms_[:n]
            new = []
            for s0, extra in variants:
                if len(terms_) == 1:
                    s1 = self.set_cell(s0, blk, 0, terms_[0].index)
                    if n == 2:
                        s1 = self.set_cell(s1, blk, 1, terms_[0].index, s1[blk.val[0]])
                    new.append((s1, extra))
                    repl[terms_[0]] = s1[blk.val[0]]
                elif len(terms_) == 2:
                    e1, e2 = terms_
                    s1 = self.set_cell(self.set_cell(s0, blk, 0, e1.index), blk, 1, e2.index)
                    new.append((s1, extra + [idx_le(e1.index, e2.index)]))
                    if not _guard_orders(guard, e1.index, e2.index):
                        s2 = self.set_cell(self.set_cell(s0, blk, 0, e2.index), blk, 1, e1.index)
                        new.append((s2, extra + [idx_le(e2.index, e1.index), ("swap", a)]))
                else:
                    new.append((s0, extra))
            variants = new
        for st_v, extra in variants:
            swapped = {x[1] for x in extra if isinstance(x, tuple)}
            extra = [x for x in extra if not isinstance(x, tuple)]

            def cell_value(c, st_v=st_v, swapped=swapped):
                if isinstance(c, Count):
                    cb = self.layout.count(c.array)
                    return Var(cb.cnt0 if c.orig else cb.cnt, INT)
                blk = self.layout.block(c.array)
                terms_ = by_array[c.array]
                j = [x.index for x in terms_].index(c.index)
                if blk.ncells == 2 and len(terms_) >= 2:
                    j = 1 - j if c.array in swapped else j
                else:
                    j = 0
                return st_v[blk.val[j]]

            g = T.map_cells(guard, cell_value)
            cc = T.map_cells(concl, cell_value)
            rule = "hint" if p.hint else "query"
            self.emit(None, rule, [(point, st_v)], [g] + extra, Goal(cc), hint=p.hint)
            c = self.system.clauses[-1]
            self.system.clauses[-1] = replace(c, prov=replace(c.prov, prop=index))


def _guard_orders(guard: Term, a: tuple, b: tuple) -> bool:
    """Whether the guard syntactically requires index ``a`` before ``b``."""
    if len(a) != 1:
        return False
    for c in T.conjuncts(guard):
        if isinstance(c, T.App) and c.op in ("lt", "le") and c.args == (a[0], b[0]):
            return True
        if isinstance(c, T.App) and c.op in ("gt", "ge") and c.args == (b[0], a[0]):
            return True
    return False


def _dedup(parts) -> list:
    out = []
    for p in parts:
        if p not in out:
            out.append(p)
    return out


def encode(cfg: Cfg, conf: AbstractionConfig = AbstractionConfig(), props=None, hints=()) -> HornSystem:
    system = Encoder(cfg, conf, props, hints).run()
    system.check()
    return system


def protected_preds(cfg: Cfg) -> frozenset:
    """Predicates kept by coalescing: user-named points other than the entry."""
    return frozenset(p for p in cfg.named if p != ENTRY) | {cfg.exit}


def expand_1_to_2(src: Pred, dst: Pred, scalars: int) -> list:
    """Clauses turning a one-cell predicate ``src(x, k, a_k)`` into a two-cell
    ``dst(x, k1, a_k1, k2, a_k2)``: the strictly ordered pair and the diagonal."""
    xs = src.slots[:scalars]
    k, v = src.slots[scalars:scalars + 2]
    k1, v1 = Var("k1", k.sort), Var("v1", v.sort)
    k2, v2 = Var("k2", k.sort), Var("v2", v.sort)
    pair = HornClause((Atom(src.name, xs + (k1, v1)), Atom(src.name, xs + (k2, v2))), T.lt(k1, k2),
                      Atom(dst.name, xs + (k1, v1, k2, v2)), Provenance((), "expand-pair"))
    diag = HornClause((Atom(src.name, xs + (k, v)),), T.TRUE,
                      Atom(dst.name, xs + (k, v, k, v)), Provenance((), "expand-diag"))
    return [pair, diag]
