"""Multiset-of-contents tracking and whole-array set operations.

A tracked array ``a`` carries a count block ``(a.z, a.cnt[, a.cnt0])`` in every
predicate: a sample value, the number of cells holding it, and optionally the
same number for the initial contents.  These functions emit clauses through an
``abstraction.Encoder`` and return the clauses they added.
"""

from __future__ import annotations

from . import terms as T
from .horn import Pred
from .terms import BOOL, Var


def count_init(enc, cb, st: dict) -> list:
    """Constraints on a fresh count block right after initialization."""
    a = cb.array
    n = a.ranges[0]
    z, c = st[cb.z], st[cb.cnt]
    blk = enc.layout.block(a.name)
    if a.init_value is not None:
        out = [T.implies(T.eq(z, a.init_value), T.eq(c, n)),
               T.implies(T.ne(z, a.init_value), T.eq(c, T.const(0)))]
    else:
        out = [T.le(T.const(0), c), T.le(c, n)]
        if blk is not None:
            v = st[blk.val[0]]
            out += [T.implies(T.eq(v, z), T.le(T.const(1), c)),
                    T.implies(T.ne(v, z), T.le(c, T.sub(n, T.const(1))))]
    if cb.cnt0:
        out.append(T.eq(st[cb.cnt0], c))
    return out


def intermediate(enc, e, suffix: str) -> str:
    name = f"{e.dst}__{suffix}"
    if name in enc.system.preds:
        name = f"{e.dst}__{suffix}{e.id}"
    enc.system.preds[name] = Pred(name, enc.system.preds[e.src].slots)
    return name


def abstract_read_count(enc, e) -> list:
    """Reads leave the count block alone: the one-cell read clauses thread it through."""
    n = len(enc.system.clauses)
    enc.read(e)
    return enc.system.clauses[n:]


def abstract_write_count(enc, e, blk, cb) -> list:
    """``#a(a[i])--; a[i] := v; #a(v)++`` via two intermediate predicates."""
    from .abstraction import idx_ne
    n0 = len(enc.system.clauses)
    tr = e.tr
    i, v = tuple(tr.index), tr.value
    st = enc.base(e.src)
    old = Var(f"{blk.array.name}.old", blk.array.value_sort)
    z, c, k = st[cb.z], st[cb.cnt], enc.cell_idx(st, blk, 0)
    pa, pb = intermediate(enc, e, "decr"), intermediate(enc, e, "incr")
    at_i = enc.set_cell(st, blk, 0, i, old)
    # decrement at the old value a[i]
    enc.emit(e, "count-decr-other", [(e.src, st), (e.src, at_i)], T.ne(old, z), enc.atom(pa, st))
    za = dict(st, **{cb.z: old})
    enc.emit(e, "count-decr", [(e.src, za), (e.src, dict(at_i, **{cb.z: old}))], T.TRUE,
             enc.atom(pa, dict(za, **{cb.cnt: T.sub(c, T.const(1))})))
    # increment at the new value v
    enc.emit(e, "count-incr-other", [(pa, st), (pa, at_i)], T.ne(v, z), enc.atom(pb, st))
    zv = dict(st, **{cb.z: v})
    enc.emit(e, "count-incr", [(pa, zv), (pa, dict(at_i, **{cb.z: v}))], T.TRUE,
             enc.atom(pb, dict(zv, **{cb.cnt: T.add(c, T.const(1))})))
    # the cell update itself
    enc.emit(e, "count-write-diff", [(pb, st)], idx_ne(k, i), enc.atom(e.dst, st))
    body = enc.set_cell(st, blk, 0, i)
    enc.emit(e, "count-write-same", [(pb, body)], T.TRUE,
             enc.atom(e.dst, enc.set_cell(body, blk, 0, val=v)))
    return enc.system.clauses[n0:]


def abstract_setop(enc, e) -> list:
    """``a := union(b, c)`` or ``intersection`` over the shared-index abstraction."""
    from .abstraction import AbstractionError
    n0 = len(enc.system.clauses)
    tr = e.tr
    st = enc.base(e.src)
    blks = [enc.layout.block(n) for n in (tr.target, tr.lhs, tr.rhs)]
    if any(b is None for b in blks):
        enc.emit(e, tr.kind + "0", [(e.src, st)], T.TRUE, enc.atom(e.dst, st))
        return enc.system.clauses[n0:]
    if not enc.conf.shared_index:
        raise AbstractionError(f"{tr.kind} needs the shared-index abstraction")
    tgt, lhs, rhs = blks
    bv, cv = st[lhs.val[0]], st[rhs.val[0]]
    sort = tgt.array.value_sort
    if tr.kind == "union":
        val = T.disj(bv, cv) if sort == BOOL else T.add(bv, cv)
    else:
        if sort != BOOL:
            raise AbstractionError("intersection is only defined for sets (boolean maps)")
        val = T.conj(bv, cv)
    enc.emit(e, tr.kind, [(e.src, st)], T.TRUE, enc.atom(e.dst, dict(st, **{tgt.val[0]: val})))
    return enc.system.clauses[n0:]


abstract_union = abstract_setop
abstract_intersection = abstract_setop


def encode_count_property(enc, p, index: int = -1) -> list:
    """Goal clause(s) for a property over ``count``/``orig_count`` terms."""
    from .abstraction import AbstractionError, _counts
    for c in _counts(p):
        cb = enc.layout.count(c.array)
        if cb is None or (c.orig and not cb.cnt0):
            raise AbstractionError(f"{c.array}: original-contents copy absent")
    n0 = len(enc.system.clauses)
    enc.query(p, index)
    return enc.system.clauses[n0:]


def count_frame_ok(clause, system, layout) -> bool:
    """Count slots are passed unchanged from the (single) body atom to the head."""
    if clause.is_query or len(clause.body) != 1:
        return True
    names = {v for cb in layout.counts for v in (cb.z, cb.cnt, cb.cnt0) if v}

    def counts(atom):
        return [a for v, a in zip(system.preds[atom.pred].slots, atom.args) if v.name in names]

    return counts(clause.body[0]) == counts(clause.head)
