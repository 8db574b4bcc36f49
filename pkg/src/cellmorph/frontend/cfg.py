"""Control-flow graphs of normalized transitions.

Pipeline: ``lower_to_cfg`` (one edge per statement) -> ``normalize`` (array
accesses become standalone reads/writes over variables or literals) ->
``insert_kills`` (scalar liveness fixes each point's variable vector and adds
``Kill`` edges where variables die).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .. import terms as T
from ..terms import BOOL, Const, Select, Term, Var
from .ast import (ArrayDecl, Assign, Assume, If, Program, PropertySpec, SetOp,
                  Skip, Store, While)

ENTRY = "init"


@dataclass(frozen=True)
class ScalarOp:
    """``assume(guard); (x1, ..., xn) := (e1, ..., en)`` with parallel assignment."""
    guard: Term = T.TRUE
    assigns: tuple = ()

    def __str__(self) -> str:
        parts = [] if self.guard == T.TRUE else [T.pretty(self.guard)]
        parts += [f"{x} := {T.pretty(e)}" for x, e in self.assigns]
        return "; ".join(parts) or "skip"


@dataclass(frozen=True)
class ArrayRead:
    target: str
    array: str
    index: tuple

    def __str__(self) -> str:
        return f"{self.target} := {self.array}[{', '.join(map(T.pretty, self.index))}]"


@dataclass(frozen=True)
class ArrayWrite:
    array: str
    index: tuple
    value: Term

    def __str__(self) -> str:
        return f"{self.array}[{', '.join(map(T.pretty, self.index))}] := {T.pretty(self.value)}"


@dataclass(frozen=True)
class Kill:
    vars: tuple

    def __str__(self) -> str:
        return f"kill({', '.join(self.vars)})"


@dataclass(frozen=True)
class ArrayInit:
    arrays: tuple

    def __str__(self) -> str:
        return f"init({', '.join(self.arrays)})"


@dataclass(frozen=True)
class MultisetOp:
    kind: str
    target: str
    lhs: str
    rhs: str

    def __str__(self) -> str:
        return f"{self.target} := {self.kind}({self.lhs}, {self.rhs})"


Transition = Union[ScalarOp, ArrayRead, ArrayWrite, Kill, ArrayInit, MultisetOp]


@dataclass(frozen=True)
class Edge:
    id: int
    src: str
    tr: Transition
    dst: str

    def __str__(self) -> str:
        return f"e{self.id}: {self.src} -[{self.tr}]-> {self.dst}"


@dataclass
class Cfg:
    prog: Program
    points: dict          # name -> tuple of Var (the point's scalar vector)
    edges: list
    exit: str
    named: frozenset      # points with user-facing names
    sorts: dict           # scalar name -> sort, temporaries included
    properties: list = field(default_factory=list)
    entry: str = ENTRY

    @property
    def arrays(self) -> list[ArrayDecl]:
        return self.prog.arrays

    def array(self, name: str) -> ArrayDecl:
        a = self.prog.array(name)
        if a is None:
            raise KeyError(name)
        return a

    def out_edges(self, p: str) -> list[Edge]:
        return [e for e in self.edges if e.src == p]

    def in_edges(self, p: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == p]

    def edge(self, eid: int) -> Edge:
        return next(e for e in self.edges if e.id == eid)

    def point_of(self, prop: PropertySpec) -> str:
        return prop.point or self.exit

    def dump(self) -> str:
        lines = [f"{p}({', '.join(v.name for v in vs)})" for p, vs in self.points.items()]
        lines += [str(e) for e in self.edges]
        return "\n".join(lines)


# -- uses / defs ----------------------------------------------------------------

def _names(terms) -> set[str]:
    return set(T.vars_of(terms))


def uses(tr: Transition, prog: Optional[Program] = None) -> set[str]:
    if isinstance(tr, ScalarOp):
        return _names([tr.guard] + [e for _, e in tr.assigns])
    if isinstance(tr, ArrayRead):
        return _names(tr.index)
    if isinstance(tr, ArrayWrite):
        return _names(tr.index + (tr.value,))
    if isinstance(tr, ArrayInit) and prog is not None:
        return _names([r for a in tr.arrays for r in prog.array(a).ranges if r is not None])
    return set()


def defs(tr: Transition) -> set[str]:
    if isinstance(tr, ScalarOp):
        return {x for x, _ in tr.assigns}
    if isinstance(tr, ArrayRead):
        return {tr.target}
    return set()


def property_uses(p: PropertySpec) -> set[str]:
    bound = {b.name for b in p.binders}
    return _names([p.guard, p.conclusion, *p.pins]) - bound


# -- lowering -------------------------------------------------------------------

class _Builder:
    def __init__(self, prog: Program):
        self.prog = prog
        self.edges: list[tuple[str, Transition, str]] = []
        self.n_auto = 0
        self.n_loops = 0
        self.named = {ENTRY}
        self.alias: dict[str, str] = {}

    def fresh(self) -> str:
        self.n_auto += 1
        return f"_{self.n_auto}"

    def edge(self, src: str, tr: Transition, dst: str) -> None:
        self.edges.append((src, tr, dst))

    def name(self, point: str, label: str) -> str:
        """Give ``point`` a user name, or route to a new named point."""
        if point.startswith("_") and point not in self.alias:
            self.alias[point] = label
            self.named.add(label)
            return point
        self.named.add(label)
        self.edge(point, ScalarOp(), label)
        return label

    def block(self, stmts: list, cur: str, final: Optional[str] = None) -> str:
        if not stmts:
            if final is not None and final != cur:
                self.edge(cur, ScalarOp(), final)
                return final
            return cur
        for k, s in enumerate(stmts):
            dst = final if k == len(stmts) - 1 else None
            cur = self.stmt(s, cur, dst)
        return cur

    def stmt(self, s, cur: str, dst: Optional[str]) -> str:
        if s.label:
            cur = self.name(cur, s.label)
        if isinstance(s, While):
            return self.loop(s, cur, dst)
        if isinstance(s, If):
            join = dst or self.fresh()
            for cond, body in ((s.cond, s.then), (T.negate(s.cond), s.orelse)):
                if body:
                    entry = self.fresh()
                    self.edge(cur, ScalarOp(guard=cond), entry)
                    self.block(body, entry, join)
                else:
                    self.edge(cur, ScalarOp(guard=cond), join)
            return join
        nxt = dst or self.fresh()
        if isinstance(s, Assign):
            tr = ScalarOp(assigns=((s.target, s.expr),))
        elif isinstance(s, Store):
            tr = ArrayWrite(s.array, s.index, s.expr)
        elif isinstance(s, Assume):
            tr = ScalarOp(guard=s.cond)
        elif isinstance(s, Skip):
            tr = ScalarOp()
        elif isinstance(s, SetOp):
            tr = MultisetOp(s.kind, s.target, s.lhs, s.rhs)
        else:
            raise TypeError(s)
        self.edge(cur, tr, nxt)
        return nxt

    def loop(self, s: While, cur: str, dst: Optional[str]) -> str:
        head = cur
        if head == ENTRY or self.resolve(head) in self.named and not s.label:
            # keep loop heads distinct from the entry and from other named points
            head = self.fresh()
            self.edge(cur, ScalarOp(), head)
        if self.resolve(head).startswith("_"):
            name = "loop" if self.n_loops == 0 else f"loop_{self.n_loops}"
            while name in self.named:
                self.n_loops += 1
                name = f"loop_{self.n_loops}"
            self.n_loops += 1
            self.alias[head] = name
            self.named.add(name)
        after = dst or self.fresh()
        if s.body:
            entry = self.fresh()
            self.edge(head, ScalarOp(guard=s.cond), entry)
            self.block(s.body, entry, head)
        else:
            self.edge(head, ScalarOp(guard=s.cond), head)
        self.edge(head, ScalarOp(guard=T.negate(s.cond)), after)
        return after

    def resolve(self, p: str) -> str:
        return self.alias.get(p, p)


def lower_to_cfg(prog: Program) -> Cfg:
    b = _Builder(prog)
    cur = ENTRY
    if prog.arrays:
        cur = b.fresh()
        b.edge(ENTRY, ArrayInit(tuple(a.name for a in prog.arrays)), cur)
    end = b.block(prog.body, cur)
    exit_name = prog.exit_label or "exit"
    if end != ENTRY or b.edges:
        if end.startswith("_") and end not in b.alias:
            b.alias[end] = exit_name
        elif b.resolve(end) != exit_name:
            b.edge(end, ScalarOp(), exit_name)
        b.named.add(exit_name)
    else:
        exit_name = ENTRY
    edges = [(b.resolve(s), tr, b.resolve(d)) for s, tr, d in b.edges]
    cfg = _assemble(prog, edges, exit_name, frozenset(b.named), dict(prog.scalar_sorts))
    cfg.properties = list(prog.properties)
    for p in cfg.properties:
        if cfg.point_of(p) not in cfg.points:
            raise ValueError(f"property attached to unknown point {p.point!r}")
    return cfg


def _assemble(prog, edges, exit_name, named, sorts, vectors=None) -> Cfg:
    """Number edges, give anonymous points stable names and collect points."""
    order = [ENTRY]
    seen = {ENTRY}
    succ = defaultdict(list)
    for s, _, d in edges:
        succ[s].append(d)
    stack = [ENTRY]
    while stack:  # discovery order, deterministic in edge order
        p = stack.pop(0)
        for q in succ[p]:
            if q not in seen:
                seen.add(q)
                order.append(q)
                stack.append(q)
    for s, _, d in edges:
        for q in (s, d):
            if q not in seen:
                seen.add(q)
                order.append(q)
    if exit_name not in seen:
        order.append(exit_name)
    rename, k = {}, 0
    for p in order:
        if p in named:
            rename[p] = p
        else:
            k += 1
            while f"p{k}" in named:
                k += 1
            rename[p] = f"p{k}"
    full = tuple(Var(n, s) for n, s in sorts.items())
    points = {rename[p]: (vectors.get(p, full) if vectors else full) for p in order}
    out = [Edge(i, rename[s], tr, rename[d]) for i, (s, tr, d) in enumerate(edges)]
    return Cfg(prog, points, out, rename[exit_name], named, sorts)


def _rebuild(cfg: Cfg, edges, sorts=None, vectors=None) -> Cfg:
    new = _assemble(cfg.prog, edges, cfg.exit, cfg.named, sorts or cfg.sorts, vectors)
    new.properties = cfg.properties
    return new


# -- normalization --------------------------------------------------------------

def _atomic(t: Term) -> bool:
    return isinstance(t, (Var, Const))


class _Normalizer:
    def __init__(self, cfg: Cfg):
        self.cfg = cfg
        self.sorts = dict(cfg.sorts)
        self.n_tmp = 0
        self.n_pt = 0
        self.edges = []

    def temp(self, sort: str) -> Var:
        self.n_tmp += 1
        name = f"t!{self.n_tmp}"
        self.sorts[name] = sort
        return Var(name, sort)

    def point(self) -> str:
        self.n_pt += 1
        return f"_n{self.n_pt}"

    def chain(self, src: str, trs: list, dst: str) -> None:
        cur = src
        for k, tr in enumerate(trs):
            nxt = dst if k == len(trs) - 1 else self.point()
            self.edges.append((cur, tr, nxt))
            cur = nxt

    def hoist_reads(self, t: Term, pre: list) -> Term:
        """Replace every array cell in ``t`` by a temporary read beforehand."""
        def fn(c):
            if isinstance(c, T.Count):
                raise ValueError("count terms are only allowed in properties")
            idx = tuple(self.atom(i, pre) for i in c.index)
            v = self.temp(c.sort)
            pre.append(ArrayRead(v.name, c.array, idx))
            return v
        return T.map_cells(t, fn)

    def atom(self, t: Term, pre: list) -> Term:
        t = self.hoist_reads(t, pre)
        if _atomic(t):
            return t
        v = self.temp(T.sort_of(t))
        pre.append(ScalarOp(assigns=((v.name, t),)))
        return v

    def run(self) -> Cfg:
        for e in self.cfg.edges:
            tr, pre = e.tr, []
            if isinstance(tr, ScalarOp):
                direct = (tr.guard == T.TRUE and len(tr.assigns) == 1
                          and isinstance(tr.assigns[0][1], Select))
                if direct:
                    x, sel = tr.assigns[0]
                    idx = tuple(self.atom(i, pre) for i in sel.index)
                    if x in _names(idx):
                        v = self.temp(sel.sort)
                        pre += [ArrayRead(v.name, sel.array, idx), ScalarOp(assigns=((x, v),))]
                    else:
                        pre.append(ArrayRead(x, sel.array, idx))
                    self.chain(e.src, pre, e.dst)
                    continue
                g = self.hoist_reads(tr.guard, pre)
                assigns = tuple((x, self.hoist_reads(t, pre)) for x, t in tr.assigns)
                pre.append(ScalarOp(g, assigns))
            elif isinstance(tr, ArrayWrite):
                idx = tuple(self.atom(i, pre) for i in tr.index)
                val = self.atom(tr.value, pre)
                pre.append(ArrayWrite(tr.array, idx, val))
            else:
                pre.append(tr)
            self.chain(e.src, pre, e.dst)
        return _rebuild(self.cfg, self.edges, self.sorts)


def normalize(cfg: Cfg) -> Cfg:
    return _Normalizer(cfg).run()


def is_normal(cfg: Cfg) -> bool:
    for e in cfg.edges:
        tr = e.tr
        if isinstance(tr, ScalarOp):
            if T.cells_of(tr.guard) or any(T.cells_of(t) for _, t in tr.assigns):
                return False
        elif isinstance(tr, ArrayRead):
            if not all(_atomic(i) for i in tr.index):
                return False
        elif isinstance(tr, ArrayWrite):
            if not all(_atomic(i) for i in tr.index + (tr.value,)):
                return False
    return True


# -- liveness and kills ------------------------------------------------------------

def liveness(cfg: Cfg) -> dict[str, set[str]]:
    gen = defaultdict(set)
    for p in cfg.properties:
        gen[cfg.point_of(p)] |= property_uses(p)
    live = {p: set(gen[p]) for p in cfg.points}
    changed = True
    while changed:
        changed = False
        for e in reversed(cfg.edges):
            new = uses(e.tr, cfg.prog) | (live[e.dst] - defs(e.tr))
            if not new <= live[e.src]:
                live[e.src] |= new
                changed = True
    return live


def _ordered(names, sorts) -> tuple:
    return tuple(n for n in sorts if n in names)


def insert_kills(cfg: Cfg, sink: bool = True) -> Cfg:
    live = liveness(cfg)
    sorts = cfg.sorts
    edges: list[list] = []
    n = 0
    for e in cfg.edges:
        dead = (live[e.src] | defs(e.tr)) - live[e.dst]
        if isinstance(e.tr, Kill) or not dead:
            edges.append([e.src, e.tr, e.dst])
            continue
        n += 1
        mid = f"_k{n}"
        edges.append([e.src, e.tr, mid])
        edges.append([mid, Kill(_ordered(dead, sorts)), e.dst])
    if sink:
        edges = _sink_kills(edges, cfg.named, sorts)
    vectors = _vectors(cfg, edges, live)
    return _rebuild(cfg, [tuple(x) for x in edges], vectors=vectors)


def _sink_kills(edges: list, named, sorts) -> list:
    """Delay kills past edges that do not touch the killed variables, merging
    adjacent kills, so that dead variables are dropped in one step."""
    def preds(p):
        return [x for x in edges if x[2] == p]

    def succs(p):
        return [x for x in edges if x[0] == p]

    progress = True
    while progress:
        progress = False
        for k in edges:
            if not isinstance(k[1], Kill):
                continue
            m, d = k[0], k[2]
            # merge with a following kill
            nxt = succs(d)
            if d not in named and len(preds(d)) == 1 and len(nxt) == 1 and isinstance(nxt[0][1], Kill):
                merged = set(k[1].vars) | set(nxt[0][1].vars)
                k[1] = Kill(_ordered(merged, sorts))
                k[2] = nxt[0][2]
                edges.remove(nxt[0])
                progress = True
                break
            if m in named or len(preds(m)) != 1 or len(succs(m)) != 1:
                continue
            if len(nxt) != 1 or len(preds(d)) != 1:
                continue
            e2 = nxt[0]
            d2 = e2[2]
            if len(preds(d2)) != 1 or d2 == d or isinstance(e2[1], Kill):
                continue
            touched = uses(e2[1]) | defs(e2[1])
            if touched & set(k[1].vars):
                continue
            # m -kill-> d -e2-> d2   becomes   m -e2-> d -kill-> d2, m inherits d's name
            e2[0], e2[2] = m, d
            k[0], k[2] = d, d2
            _swap_names(edges, m, d)
            edges.remove(e2)
            edges.insert(edges.index(k), e2)
            progress = True
            break
    return edges


def _swap_names(edges: list, a: str, b: str) -> None:
    for x in edges:
        for j in (0, 2):
            if x[j] == a:
                x[j] = b
            elif x[j] == b:
                x[j] = a


def _vectors(cfg: Cfg, edges: list, live) -> dict:
    """Forward propagation of variable vectors from the entry's live set."""
    sorts = cfg.sorts
    vec = {ENTRY: set(live.get(ENTRY, set()))}
    work = [ENTRY]
    while work:
        p = work.pop(0)
        for s, tr, d in edges:
            if s != p:
                continue
            out = vec[p] | defs(tr)
            if isinstance(tr, Kill):
                out -= set(tr.vars)
            if d in vec:
                if vec[d] != out:
                    raise AssertionError(f"inconsistent variable vectors at {d}: {vec[d]} vs {out}")
                continue
            vec[d] = out
            work.append(d)
    return {p: tuple(Var(n, sorts[n]) for n in _ordered(v, sorts)) for p, v in vec.items()}


def build_cfg(prog: Program, sink: bool = True) -> Cfg:
    return insert_kills(normalize(lower_to_cfg(prog)), sink=sink)
