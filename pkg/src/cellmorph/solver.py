"""External CHC solvers and the counterexample loop.

``run_solver`` drives Spacer, legacy Z3/PDR or Eldarica as subprocesses.
``verify`` runs encode, solve, derivation search, concrete replay and
refinement until a definitive answer or the budget is exhausted.
"""

from __future__ import annotations

import itertools
import logging
import os
import shutil
import subprocess
import tempfile
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import z3

from . import terms as T
from .horn import HornClause, HornSystem

log = logging.getLogger(__name__)

SOLVERS = ("spacer", "z3pdr", "eldarica")


@dataclass(frozen=True)
class SolverVerdict:
    status: str                 # sat, unsat, unknown, timeout, crash
    solver: str = ""
    model: str = ""
    raw: str = ""
    diagnostic: str = ""
    seconds: float = 0.0

    @property
    def definitive(self) -> bool:
        return self.status in ("sat", "unsat")

    def __str__(self) -> str:
        return f"{self.solver}: {self.status} ({self.seconds:.2f}s)"


def binary(kind: str) -> Optional[str]:
    """Path of the solver binary, from the environment or PATH."""
    if kind == "spacer":
        return shutil.which(os.environ.get("CELLMORPH_Z3", "z3"))
    if kind == "z3pdr":
        return shutil.which(os.environ.get("CELLMORPH_Z3_PDR", "z3-pdr"))
    if kind == "eldarica":
        return shutil.which(os.environ.get("CELLMORPH_ELDARICA", "eld"))
    raise ValueError(f"unknown solver {kind!r}")


def available(kind: str) -> bool:
    return binary(kind) is not None


def command(kind: str, path: str, timeout: float) -> list:
    exe = binary(kind)
    if exe is None:
        raise FileNotFoundError(f"no binary for {kind}; set the matching CELLMORPH_* variable")
    t = max(1, int(timeout + 0.999))
    if kind == "spacer":
        return [exe, "fp.engine=spacer", f"-T:{t}", path]
    if kind == "z3pdr":
        return [exe, "fp.engine=pdr", f"-T:{t}", path]
    flags = os.environ.get("CELLMORPH_ELDARICA_FLAGS", "-splitClauses").split()
    return [exe, *flags, f"-t:{t}", path]


def parse_output(kind: str, out: str, err: str = "", code: int = 0) -> tuple:
    """``(status, model)`` from solver output."""
    lines = [l.strip() for l in out.splitlines() if l.strip()]
    for j, l in enumerate(lines):
        if l in ("sat", "unsat", "unknown", "timeout"):
            return l, "\n".join(lines[j + 1:]) if l == "sat" else ""
        if l.startswith("(error") and "timeout" in l:
            return "timeout", ""
    if "timeout" in (out + err).lower():
        return "timeout", ""
    return "crash", ""


def run_solver(smt: str, kind: str = "spacer", timeout: float = 60.0, model: bool = False,
               cancel: Optional[threading.Event] = None) -> SolverVerdict:
    """Run one solver on SMT-LIB text; the process is killed at ``timeout``."""
    if model and kind != "eldarica":
        smt = smt.rstrip("\n") + "\n(get-model)\n"
    t0 = time.monotonic()
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(smt)
        path = fh.name
    try:
        try:
            cmd = command(kind, path, timeout)
        except FileNotFoundError as ex:
            return SolverVerdict("crash", kind, diagnostic=str(ex))
        log.debug("running %s", " ".join(cmd))
        proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        deadline = t0 + timeout + 2.0
        while True:
            try:
                out, err = proc.communicate(timeout=0.2)
                break
            except subprocess.TimeoutExpired:
                if time.monotonic() > deadline or (cancel is not None and cancel.is_set()):
                    proc.kill()
                    out, err = proc.communicate()
                    status = "timeout" if time.monotonic() > deadline else "unknown"
                    return SolverVerdict(status, kind, raw=out, diagnostic="killed",
                                         seconds=time.monotonic() - t0)
        status, mdl = parse_output(kind, out, err, proc.returncode)
        diag = err.strip() if status == "crash" else ""
        if status == "crash":
            log.warning("%s exited with %s: %s", kind, proc.returncode, diag or out.strip()[:200])
        return SolverVerdict(status, kind, mdl, out, diag, time.monotonic() - t0)
    finally:
        os.unlink(path)


def solve_portfolio(smt: str, kinds=("spacer",), timeout: float = 60.0) -> SolverVerdict:
    """Run several solvers at once; the first definitive answer wins."""
    kinds = [k for k in kinds if available(k)] or list(kinds)[:1]
    if len(kinds) == 1:
        return run_solver(smt, kinds[0], timeout)
    cancel = threading.Event()
    with ThreadPoolExecutor(len(kinds)) as pool:
        futs = {pool.submit(run_solver, smt, k, timeout, False, cancel): k for k in kinds}
        pending, results = set(futs), []
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for f in done:
                v = f.result()
                results.append(v)
                if v.definitive:
                    cancel.set()
                    return v
    order = ("unknown", "timeout", "crash")
    return min(results, key=lambda v: order.index(v.status))


# -- terms to z3 ---------------------------------------------------------------------------

def z3_sort(sort: str):
    return {T.INT: z3.IntSort(), T.REAL: z3.RealSort(), T.BOOL: z3.BoolSort()}[sort]


def z3_const(name: str, sort: str):
    return z3.Const(name, z3_sort(sort))


def z3_value(value, sort: str):
    if sort == T.BOOL:
        return z3.BoolVal(bool(value))
    if sort == T.REAL:
        f = Fraction(value)
        return z3.RealVal(f"{f.numerator}/{f.denominator}")
    return z3.IntVal(int(value))


def to_z3(t, var, arr=None):
    """``var(name, sort)`` maps variables; ``arr(name)`` maps array names."""
    if isinstance(t, T.Var):
        return var(t.name, t.sort)
    if isinstance(t, T.Const):
        return z3_value(t.value, t.sort)
    if isinstance(t, T.Select):
        a = arr(t.array)
        idx = [to_z3(i, var, arr) for i in t.index]
        return z3.Select(a, *idx) if len(idx) > 1 else z3.Select(a, idx[0])
    if isinstance(t, T.Count):
        raise T.TermError("count terms have no concrete array rendering")
    args = [to_z3(a, var, arr) for a in t.args]
    op = t.op
    if op == "and":
        return z3.And(*args)
    if op == "or":
        return z3.Or(*args)
    if op == "not":
        return z3.Not(args[0])
    if op == "implies":
        return z3.Implies(args[0], args[1])
    if op == "eq":
        return args[0] == args[1]
    if op == "ne":
        return args[0] != args[1]
    if op == "lt":
        return args[0] < args[1]
    if op == "le":
        return args[0] <= args[1]
    if op == "gt":
        return args[0] > args[1]
    if op == "ge":
        return args[0] >= args[1]
    if op == "add":
        return z3.Sum(*args)
    if op == "sub":
        return args[0] - args[1]
    if op == "neg":
        return -args[0]
    if op == "mul":
        return args[0] * args[1]
    if op == "mod":
        return args[0] % args[1]
    raise T.TermError(f"unknown operator {op}")


def from_z3(v, sort: str):
    if sort == T.BOOL:
        return z3.is_true(v)
    if sort == T.REAL:
        f = v.as_fraction()
        return Fraction(f.numerator, f.denominator)
    return v.as_long()


# -- derivation trees ----------------------------------------------------------------------

@dataclass
class DerivationNode:
    index: int                  # clause index in the system
    clause: HornClause
    assignment: dict            # universal name -> value
    children: list = field(default_factory=list)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=0)

    def head_values(self) -> tuple:
        return tuple(T.evaluate(a, self.assignment) for a in self.clause.head.args)

    def render(self, indent: int = 0) -> str:
        c = self.clause
        what = "false" if c.is_query else f"{c.head.pred}({', '.join(_fmt(x) for x in self.head_values())})"
        line = "  " * indent + f"{what}  <- clause {self.index} [{c.prov}]"
        return "\n".join([line] + [ch.render(indent + 1) for ch in self.children])


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


@dataclass
class DerivationTree:
    root: DerivationNode

    def render(self) -> str:
        return self.root.render()


def validate_tree(system: HornSystem, tree: DerivationTree) -> list:
    """Problems with ``tree``; empty when every node is locally valid."""
    problems = []

    def visit(node: DerivationNode, expected: Optional[tuple], path: str):
        c = node.clause
        if node.index >= len(system.clauses) or system.clauses[node.index] != c:
            problems.append(f"{path}: clause {node.index} not in system")
            return
        try:
            if T.evaluate(c.constraint, node.assignment) is not True:
                problems.append(f"{path}: constraint false")
            if c.is_query and T.evaluate(c.head.conclusion, node.assignment) is not False:
                problems.append(f"{path}: query conclusion holds")
            if expected is not None and node.head_values() != expected:
                problems.append(f"{path}: head does not match parent atom")
        except (T.TermError, T.Undefined) as ex:
            problems.append(f"{path}: {ex}")
            return
        if len(node.children) != len(c.body):
            problems.append(f"{path}: {len(node.children)} children for {len(c.body)} body atoms")
            return
        for j, (atom, ch) in enumerate(zip(c.body, node.children)):
            if ch.clause.is_query or ch.clause.head.pred != atom.pred:
                problems.append(f"{path}.{j}: child derives the wrong predicate")
                continue
            visit(ch, tuple(T.evaluate(a, node.assignment) for a in atom.args), f"{path}.{j}")

    if not tree.root.clause.is_query:
        problems.append("root is not a query")
    visit(tree.root, None, "root")
    return problems


class _Search:
    """Depth-first construction of derivation trees, pruned by incremental SMT checks."""

    def __init__(self, system: HornSystem, depth: int, deadline: float):
        self.s, self.depth, self.deadline = system, depth, deadline
        self.solver = z3.Solver()
        self.counter = 0
        self.defining = {}
        for j, c in enumerate(system.clauses):
            if not c.is_query:
                self.defining.setdefault(c.head.pred, []).append(j)

    def instance(self, j: int):
        self.counter += 1
        tag = self.counter
        c = self.s.clauses[j]
        names = {}

        def var(name, sort):
            if name not in names:
                names[name] = z3_const(f"{name}#{tag}", sort)
            return names[name]

        for v in c.universals:
            var(v.name, v.sort)
        return names, var

    def run(self):
        for j, c in enumerate(self.s.clauses):
            if not c.is_query:
                continue
            node = {"index": j, "names": None, "children": []}
            self.solver.push()
            names, var = self.instance(j)
            node["names"] = names
            self.solver.add(to_z3(c.constraint, var), z3.Not(to_z3(c.head.conclusion, var)))
            opens = [(node, k, tuple(to_z3(a, var) for a in atom.args), 1) for k, atom in enumerate(c.body)]
            if self.solver.check() != z3.unsat and self.expand(opens):
                return self.build(node, self.solver.model())
            self.solver.pop()
        return None

    def expand(self, opens) -> bool:
        if time.monotonic() > self.deadline:
            raise TimeoutError
        if not opens:
            return True
        (parent, k, args, level), rest = opens[0], opens[1:]
        if level > self.depth:
            return False
        atom = self.s.clauses[parent["index"]].body[k]
        for j in self.defining.get(atom.pred, []):
            c = self.s.clauses[j]
            if level >= self.depth and c.body:
                continue
            self.solver.push()
            names, var = self.instance(j)
            node = {"index": j, "names": names, "children": []}
            self.solver.add(to_z3(c.constraint, var),
                            *(x == to_z3(a, var) for x, a in zip(args, c.head.args)))
            kids = [(node, m, tuple(to_z3(a, var) for a in b.args), level + 1) for m, b in enumerate(c.body)]
            if self.solver.check() != z3.unsat:
                parent["children"].append(node)
                if self.expand(kids + rest):
                    return True
                parent["children"].pop()
            self.solver.pop()
        return False

    def build(self, node, model) -> DerivationNode:
        c = self.s.clauses[node["index"]]
        sorts = {v.name: v.sort for v in c.universals}
        asg = {n: from_z3(model.eval(x, model_completion=True), sorts[n]) for n, x in node["names"].items()}
        return DerivationNode(node["index"], c, asg, [self.build(ch, model) for ch in node["children"]])


def find_unfolding(system: HornSystem, depth: int, timeout: float = 120.0) -> Optional[DerivationTree]:
    """A derivation of a query violation with at most ``depth`` levels of
    predicate atoms below the query root, or None."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    search = _Search(system, depth, time.monotonic() + timeout)
    try:
        root = search.run()
    except TimeoutError:
        return None
    return DerivationTree(root) if root is not None else None


def find_unfolding_deepening(system: HornSystem, cap: int = 8, timeout: float = 120.0):
    """Iterative deepening over depths 1, 2, 4, ... up to ``cap``; ``(tree, depth)``."""
    d = 1
    while True:
        tree = find_unfolding(system, min(d, cap), timeout)
        if tree is not None or d >= cap:
            return tree, min(d, cap)
        d *= 2


# -- traces and concrete trace formulas ----------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    edges: tuple                # CFG edge ids, execution order
    rule: str
    point: str                  # predicate derived by this step
    assignment: tuple           # sorted (name, value) pairs of the abstract assignment


@dataclass
class Trace:
    steps: list                 # leaf first
    query: DerivationNode       # the violated query at the end

    @property
    def edges(self) -> list:
        return [e for s in self.steps for e in s.edges]


def extract_branch(tree: DerivationTree) -> Trace:
    """The leftmost root-to-leaf branch, in execution order."""
    nodes = [tree.root]
    while nodes[-1].children:
        nodes.append(nodes[-1].children[0])
    steps = [TraceStep(n.clause.prov.edges, n.clause.prov.rule, n.clause.head.pred,
                       tuple(sorted(n.assignment.items()))) for n in reversed(nodes[1:])]
    return Trace(steps, tree.root)


def trace_is_path(trace: Trace, cfg) -> bool:
    es = [cfg.edge(i) for i in trace.edges]
    if any(a.dst != b.src for a, b in zip(es, es[1:])):
        return False
    if es and es[0].src != cfg.entry:
        return False
    end = es[-1].dst if es else cfg.entry
    return not trace.query.clause.body or trace.query.clause.body[0].pred == end


class ReplayError(Exception):
    pass


@dataclass
class TraceFormula:
    text: str
    parts: list                 # (label, z3 formula, arrays involved)
    entry: dict                 # scalar name -> z3 const at the entry point
    arrays0: dict               # array name -> z3 array at the entry point
    touched: list               # (array, z3 index tuple) over the whole trace
    versions: list              # per edge: dict scalar name -> z3 const after the edge
    binders: dict               # property binder name -> z3 const
    status: str = ""
    model: object = None
    core_arrays: frozenset = frozenset()

    def check(self, timeout: float = 60.0) -> str:
        s = z3.Solver()
        s.set("timeout", int(timeout * 1000))
        s.set("unsat_core", True)
        tracks = {}
        for j, (label, f, arrays) in enumerate(self.parts):
            b = z3.Bool(f"t{j}|{label}")
            tracks[str(b)] = arrays
            s.assert_and_track(f, b)
        r = s.check()
        self.status = "sat" if r == z3.sat else "unsat" if r == z3.unsat else "unknown"
        if r == z3.sat:
            self.model = s.model()
        elif r == z3.unsat:
            core = [str(b) for b in s.unsat_core()]
            self.core_arrays = frozenset(a for b in core for a in tracks.get(b, ()))
        return self.status


def _z3_array(a, name: str):
    dom = [z3_sort(s) for s in a.index_sorts]
    return z3.Array(name, *dom, z3_sort(a.value_sort)) if len(dom) > 1 else \
        z3.Array(name, dom[0], z3_sort(a.value_sort))


def trace_to_concrete_formula(trace: Trace, cfg, props) -> TraceFormula:
    """SSA conjunction of the concrete transitions along ``trace`` and the
    negated property; raises TermError for properties over counts."""
    from .frontend.cfg import ArrayInit, ArrayRead, ArrayWrite, MultisetOp, ScalarOp
    counter = {}
    cur, arrs = {}, {}

    def fresh(name, sort):
        k = counter.get(name, 0)
        counter[name] = k + 1
        return z3_const(f"{name}@{k}", sort)

    def fresh_array(a):
        k = counter.get(a.name, 0)
        counter[a.name] = k + 1
        return _z3_array(a, f"{a.name}@{k}")

    def var(name, sort):
        if name not in cur:
            cur[name] = fresh(name, sort)
        return cur[name]

    def arr(name):
        return arrs[name]

    for v in cfg.points[cfg.entry]:
        var(v.name, v.sort)
    for a in cfg.arrays:
        arrs[a.name] = fresh_array(a)
    entry, arrays0 = dict(cur), dict(arrs)
    parts, touched, versions = [], [], []

    def bounds(a, idx, label):
        if a.ranged:
            for i, r in zip(idx, a.ranges):
                parts.append((label + ":bounds", z3.And(0 <= i, i < to_z3(r, var)), {a.name}))

    for eid in trace.edges:
        e = cfg.edge(eid)
        tr = e.tr
        label = f"e{eid}"
        if isinstance(tr, ScalarOp):
            if tr.guard != T.TRUE:
                parts.append((label + ":guard", to_z3(tr.guard, var, arr), set()))
            vals = [(x, to_z3(t, var, arr)) for x, t in tr.assigns]
            for x, val in vals:
                cur[x] = fresh(x, cfg.sorts[x])
                parts.append((label + f":{x}", cur[x] == val, set()))
        elif isinstance(tr, ArrayRead):
            a = cfg.array(tr.array)
            idx = tuple(to_z3(i, var, arr) for i in tr.index)
            bounds(a, idx, label)
            touched.append((a.name, idx))
            val = z3.Select(arrs[a.name], *idx)
            cur[tr.target] = fresh(tr.target, a.value_sort)
            parts.append((label + ":read", cur[tr.target] == val, {a.name}))
        elif isinstance(tr, ArrayWrite):
            a = cfg.array(tr.array)
            idx = tuple(to_z3(i, var, arr) for i in tr.index)
            bounds(a, idx, label)
            touched.append((a.name, idx))
            val = to_z3(tr.value, var, arr)
            new = fresh_array(a)
            parts.append((label + ":write", new == z3.Store(arrs[a.name], *idx, val), {a.name}))
            arrs[a.name] = new
        elif isinstance(tr, ArrayInit):
            for n in tr.arrays:
                a = cfg.array(n)
                if a.init_value is not None:
                    new = fresh_array(a)
                    dom = new.domain() if a.dims == 1 else [new.domain_n(d) for d in range(a.dims)]
                    k = z3.K(dom, z3_value(a.init_value.value, a.value_sort)) if a.dims == 1 else \
                        z3.Lambda([z3.Const(f"_d{d}", new.domain_n(d)) for d in range(a.dims)],
                                  z3_value(a.init_value.value, a.value_sort))
                    parts.append((label + f":init {n}", new == k, {n}))
                    arrs[n] = new
            for a in cfg.arrays:
                if a.name in tr.arrays and a.copy_of is not None:
                    new = fresh_array(a)
                    parts.append((label + f":copy {a.name}", new == arrs[a.copy_of], {a.name, a.copy_of}))
                    arrs[a.name] = new
        elif isinstance(tr, MultisetOp):
            a = cfg.array(tr.target)
            ks = [z3.Const(f"_k{d}", z3_sort(s)) for d, s in enumerate(a.index_sorts)]
            x, y = z3.Select(arrs[tr.lhs], *ks), z3.Select(arrs[tr.rhs], *ks)
            if a.value_sort == T.BOOL:
                body = z3.Or(x, y) if tr.kind == "union" else z3.And(x, y)
            else:
                body = x + y
            new = fresh_array(a)
            parts.append((label + f":{tr.kind}", new == z3.Lambda(ks, body), {tr.target, tr.lhs, tr.rhs}))
            arrs[a.name] = new
        versions.append(dict(cur))

    prop = props[trace.query.clause.prov.prop]
    binders = {b.name: z3_const(f"{b.name}!prop", b.sort) for b in prop.binders}

    def pvar(name, sort):
        return binders[name] if name in binders else var(name, sort)

    for c in T.cells_of(prop.guard) + T.cells_of(prop.conclusion):
        if isinstance(c, T.Select):
            touched.append((c.array, tuple(to_z3(i, pvar, arr) for i in c.index)))
    neg = z3.Not(to_z3(prop.conclusion, pvar, arr))
    if prop.guard != T.TRUE:
        neg = z3.And(to_z3(prop.guard, pvar, arr), neg)
    names = {c.array for c in T.cells_of(prop.guard) + T.cells_of(prop.conclusion)}
    parts.append(("property", neg, names))
    return TraceFormula(_render(trace, parts, cfg), parts, entry, arrays0, touched, versions, binders)


def _render(trace: Trace, parts, cfg) -> str:
    real = any(s == T.REAL for s in cfg.sorts.values()) or \
        any(T.REAL in a.index_sorts or a.value_sort == T.REAL for a in cfg.arrays)
    lines = ["; concrete trace formula", f"; edges: {' '.join(f'e{i}' for i in trace.edges)}"]
    for j, st in enumerate(trace.steps):
        asg = ", ".join(f"{k}={_fmt(v)}" for k, v in st.assignment)
        lines.append(f"; step {j}: {','.join(f'e{i}' for i in st.edges)} {st.rule} -> {st.point}")
        lines.append(f";   abstract values (hints only): {asg}")
    s = z3.Solver()
    for label, f, _ in parts:
        s.add(f)
    quantified = any(z3.is_quantifier(x) or "Lambda" in str(x) for _, f, _ in parts for x in [f])
    logic = "ALL" if quantified else "QF_AUFLIRA" if real else "QF_AUFLIA"
    lines.append(f"(set-logic {logic})")
    lines.append(s.sexpr().rstrip())
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# -- concrete replay -------------------------------------------------------------------------

@dataclass
class Witness:
    """A concrete run along the trace ending in a property violation."""
    states: list                # (point, oracle State) pairs, entry first
    binders: dict               # property binder values at the failure

    def render(self, cfg) -> str:
        out = []
        for point, st in self.states:
            env = st.env(cfg.points[point], cfg)
            scal = ", ".join(f"{v.name}={_fmt(env[v.name])}" for v in cfg.points[point])
            arrs = "; ".join(f"{a.name}={_fmt_array(env[a.name])}" for a in cfg.arrays)
            out.append(f"{point}: {scal}" + (f" | {arrs}" if arrs else ""))
        if self.binders:
            out.append("violated at " + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.binders.items())))
        return "\n".join(out) + "\n"


def _fmt_array(d: dict) -> str:
    items = sorted(d.items())
    return "[" + ", ".join(f"{','.join(_fmt(i) for i in k)}:{_fmt(v)}" for k, v in items) + "]"


def replay(tf: TraceFormula, trace: Trace, cfg, props, bounds=None) -> Witness:
    """Re-run the model of a satisfiable trace formula on the oracle interpreter."""
    from .oracle import Bounds, Interpreter, State, _freeze
    m = tf.model
    if m is None:
        raise ReplayError("no model")

    def val(x, sort):
        return from_z3(m.eval(x, model_completion=True), sort)

    vec = cfg.points[cfg.entry]
    xs = tuple(val(tf.entry[v.name], v.sort) for v in vec)
    env = {v.name: x for v, x in zip(vec, xs)}
    arrays = []
    for a in cfg.arrays:
        if a.ranged:
            dims = [range(max(0, T.evaluate(r, env))) for r in a.ranges]
            dom = list(itertools.product(*dims))
        else:
            dom = []
            for name, idx in tf.touched:
                if name == a.name or name == a.copy_of:
                    k = tuple(val(i, s) for i, s in zip(idx, a.index_sorts))
                    if k not in dom:
                        dom.append(k)
        src = a.name if a.copy_of is None else a.copy_of
        z = tf.arrays0[src]
        arrays.append(_freeze({k: val(z3.Select(z, *(z3_value(i, s) for i, s in zip(k, a.index_sorts))),
                                          a.value_sort) for k in dom}))
    arrays = tuple(arrays)
    state = State(xs, arrays, arrays)
    interp = Interpreter(cfg, bounds or Bounds())
    states = [(cfg.entry, state)]
    for j, eid in enumerate(trace.edges):
        e = cfg.edge(eid)
        want = tf.versions[j]
        dst = cfg.points[e.dst]
        match = None
        for s2 in interp.step(e, state):
            if all(v.name not in want or val(want[v.name], v.sort) == x for v, x in zip(dst, s2.scalars)):
                match = s2
                break
        if match is None:
            raise ReplayError(f"replay diverges at e{eid}")
        state = match
        states.append((e.dst, state))
    prop = props[trace.query.clause.prov.prop]
    point = states[-1][0]
    env = state.env(cfg.points[point], cfg)
    bvals = {b.name: val(tf.binders[b.name], b.sort) for b in prop.binders}
    env.update(bvals)
    try:
        holds = T.evaluate(T.implies(prop.guard, prop.conclusion), env)
    except T.Undefined as ex:
        raise ReplayError(f"property undefined on the replayed state: {ex}") from None
    if holds:
        raise ReplayError("replayed run satisfies the property")
    return Witness(states, bvals)


# -- refinement and the verification loop --------------------------------------------------

def refine(conf, arrays):
    """``conf`` with one more cell for each of ``arrays``; None when none can grow."""
    new = conf
    for a in sorted(arrays):
        if new.cells_of(a) < 2 and not new.multiset:
            new = new.with_cells(a, 2)
    return None if new == conf else new


@dataclass
class Outcome:
    verdict: str                # proved, violated, exhausted, budget
    conf: object
    refinements: int = 0
    solver: Optional[SolverVerdict] = None
    tree: Optional[DerivationTree] = None
    trace: Optional[Trace] = None
    formula: Optional[TraceFormula] = None
    witness: Optional[Witness] = None
    log: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {"proved": 0, "violated": 1}.get(self.verdict, 2)


def verify(src: str, conf, hint_src: Optional[str] = None, kinds=("spacer",), timeout: float = 60.0,
           depth: int = 8, refine_arrays: bool = True) -> Outcome:
    from .pipeline import encode_source
    refinements = 0
    history = []
    while True:
        enc = encode_source(src, conf, hint_src)
        v = solve_portfolio(enc.smtlib(), kinds, timeout)
        history.append(f"[{conf.describe()}] {v}")
        out = Outcome("budget", conf, refinements, v, log=history)
        if v.status == "sat":
            out.verdict = "proved"
            return out
        if v.status != "unsat":
            return out
        tree, d = find_unfolding_deepening(enc.system, depth, timeout)
        if tree is None:
            history.append(f"no counterexample unfolding up to depth {d}")
            return out
        out.tree = tree
        out.trace = trace = extract_branch(tree)
        try:
            tf = trace_to_concrete_formula(trace, enc.cfg, enc.props)
        except T.TermError as ex:
            history.append(f"trace formula unavailable: {ex}")
            return out
        out.formula = tf
        status = tf.check(timeout)
        history.append(f"trace formula over {len(trace.edges)} edges: {status}")
        if status == "sat":
            out.witness = replay(tf, trace, enc.cfg, enc.props)
            out.verdict = "violated"
            return out
        if status != "unsat":
            return out
        flagged = tf.core_arrays or {a.name for a in enc.cfg.arrays}
        new = refine(conf, flagged) if refine_arrays else None
        if new is None:
            out.verdict = "exhausted"
            return out
        history.append(f"refine {', '.join(sorted(flagged))}")
        conf, refinements = new, refinements + 1
