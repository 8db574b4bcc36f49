"""Tokenizer and recursive-descent parser for ``.arr`` programs.

Declarations come first, then statements; ``assert``/``hint`` properties may
appear anywhere at top level.  A trailing ``NAME:`` labels the exit point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .. import terms as T
from ..terms import BOOL, INT, REAL, Count, Select, Term, Var
from .ast import (ArrayDecl, Assign, Assume, If, Loc, ParseError, Program,
                  PropertySpec, ScalarDecl, SetOp, Skip, SortError, Store,
                  UndeclaredError, While)

KEYWORDS = {"int", "real", "bool", "while", "if", "else", "assume", "skip",
            "assert", "hint", "at", "forall", "with", "true", "false",
            "count", "orig_count", "union", "intersection"}
SORT_WORDS = {"int": INT, "real": REAL, "bool": BOOL}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>=>|==|!=|<=|>=|&&|\|\||[-+*%<>=!()\[\]{},;:])
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    loc: Loc


def tokenize(src: str) -> list[Tok]:
    out, pos, line, col = [], 0, 1, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", Loc(line, col))
        text = m.group()
        kind = m.lastgroup
        if kind != "ws":
            if kind == "id" and text in KEYWORDS:
                kind = "kw"
            out.append(Tok(kind, text, Loc(line, col)))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(Tok("eof", "", Loc(line, col)))
    return out


class Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.scalars: dict[str, ScalarDecl] = {}
        self.arrays: dict[str, ArrayDecl] = {}
        self.bound: dict[str, Var] = {}
        self.labels: set[str] = set()

    # -- token helpers

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text in texts

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}",
                             self.tok.loc)
        return self.advance()

    def ident(self) -> Tok:
        if self.tok.kind != "id":
            raise ParseError(f"expected identifier, found {self.tok.text!r}", self.tok.loc)
        return self.advance()

    # -- program

    def program(self) -> Program:
        while self.at("int", "real", "bool"):
            self.declaration()
        body, props, exit_label = [], [], None
        while self.tok.kind != "eof":
            if self.at("assert", "hint"):
                props.append(self.property())
            elif self.tok.kind == "id" and self.peek().text == ":" and self._trailing_label():
                exit_label = self.advance().text
                self.advance()
                self._add_label(exit_label, self.toks[self.i - 2].loc)
            else:
                body.append(self.statement())
        prog = Program(list(self.scalars.values()), list(self.arrays.values()), body,
                       props, exit_label, self.src)
        for p in props:
            if p.point is not None and p.point not in self.labels and p.point not in ("init", "exit"):
                raise UndeclaredError(f"unknown label {p.point!r}", p.loc)
        return prog

    def _trailing_label(self) -> bool:
        nxt = self.peek(2)
        return nxt.kind == "eof" or (nxt.kind == "kw" and nxt.text in ("assert", "hint"))

    def _add_label(self, name: str, loc: Loc) -> None:
        if name in self.labels or name in ("init",):
            raise ParseError(f"duplicate label {name!r}", loc)
        self.labels.add(name)

    def _check_fresh(self, name: str, loc: Loc) -> None:
        if name in self.scalars or name in self.arrays:
            raise ParseError(f"redeclaration of {name!r}", loc)
        if "!" in name or "." in name:
            raise ParseError(f"reserved name {name!r}", loc)

    def declaration(self) -> None:
        sort = SORT_WORDS[self.advance().text]
        while True:
            name_tok = self.ident()
            name = name_tok.text
            self._check_fresh(name, name_tok.loc)
            if self.at("["):
                self.arrays[name] = self.array_rest(name, sort, name_tok.loc)
            else:
                self.scalars[name] = ScalarDecl(name, sort, name_tok.loc)
            if not self.at(","):
                break
            self.advance()
        self.expect(";")

    def array_rest(self, name: str, sort: str, loc: Loc) -> ArrayDecl:
        self.expect("[")
        idx_sorts, ranges = [], []
        if self.at("]"):
            idx_sorts.append(INT)
            ranges.append(None)
        else:
            while True:
                if self.at("int", "real"):
                    idx_sorts.append(SORT_WORDS[self.advance().text])
                    ranges.append(None)
                else:
                    r = self.expr()
                    if T.sort_of(r) != INT or T.cells_of(r):
                        raise SortError("array range must be an integer scalar expression", loc)
                    idx_sorts.append(INT)
                    ranges.append(r)
                if not self.at(","):
                    break
                self.advance()
        self.expect("]")
        init, copy_of = None, None
        if self.at("="):
            self.advance()
            if self.tok.kind == "id":
                src = self.advance()
                other = self.arrays.get(src.text)
                if other is None:
                    raise UndeclaredError(f"unknown array {src.text!r}", src.loc)
                if other.index_sorts != tuple(idx_sorts) or other.value_sort != sort \
                        or other.ranges != tuple(ranges):
                    raise SortError(f"{name} and {src.text} have different shapes", src.loc)
                copy_of = src.text
            else:
                c = self.expr()
                if not isinstance(c, T.Const):
                    raise ParseError("array initializer must be a literal or an array", loc)
                init = self._fit(c, sort, loc)
        return ArrayDecl(name, sort, tuple(idx_sorts), tuple(ranges), init, copy_of, loc)

    # -- statements

    def block(self) -> list:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise ParseError("unterminated block", self.tok.loc)
            out.append(self.statement())
        self.advance()
        return out

    def statement(self):
        label = None
        if self.tok.kind == "id" and self.peek().text == ":":
            lt = self.advance()
            self.advance()
            self._add_label(lt.text, lt.loc)
            label = lt.text
        loc = self.tok.loc
        if self.at("while"):
            self.advance()
            cond = self.paren_cond()
            return While(cond, self.block(), label, loc)
        if self.at("if"):
            self.advance()
            cond = self.paren_cond()
            then = self.block()
            orelse = []
            if self.at("else"):
                self.advance()
                orelse = [self.statement()] if self.at("if") else self.block()
            return If(cond, then, orelse, label, loc)
        if self.at("assume"):
            self.advance()
            cond = self.paren_cond()
            self.expect(";")
            return Assume(cond, label, loc)
        if self.at("skip"):
            self.advance()
            self.expect(";")
            return Skip(label, loc)
        name = self.ident()
        if self.at("["):
            arr = self._array(name)
            index = self.index_list(arr)
            self.expect("=")
            val = self._fit(self.expr(), arr.value_sort, loc)
            self.expect(";")
            return Store(arr.name, index, val, label, loc)
        self.expect("=")
        if self.at("union", "intersection"):
            kind = self.advance().text
            self.expect("(")
            lhs = self._array(self.ident())
            self.expect(",")
            rhs = self._array(self.ident())
            self.expect(")")
            self.expect(";")
            tgt = self._array(name)
            for a in (lhs, rhs):
                if (a.index_sorts, a.value_sort, a.ranges) != (tgt.index_sorts, tgt.value_sort, tgt.ranges):
                    raise SortError(f"{a.name} and {tgt.name} have different shapes", loc)
            return SetOp(tgt.name, kind, lhs.name, rhs.name, label, loc)
        decl = self.scalars.get(name.text)
        if decl is None:
            if name.text in self.arrays:
                raise SortError(f"cannot assign whole array {name.text!r}", name.loc)
            raise UndeclaredError(f"undeclared variable {name.text!r}", name.loc)
        val = self._fit(self.expr(), decl.sort, loc)
        self.expect(";")
        return Assign(name.text, val, label, loc)

    def paren_cond(self) -> Term:
        self.expect("(")
        c = self.expr()
        self.expect(")")
        if T.sort_of(c) != BOOL:
            raise SortError("condition must be boolean", self.tok.loc)
        return c

    def _array(self, tok: Tok) -> ArrayDecl:
        arr = self.arrays.get(tok.text)
        if arr is None:
            raise UndeclaredError(f"undeclared array {tok.text!r}", tok.loc)
        return arr

    def _fit(self, e: Term, sort: str, loc: Loc) -> Term:
        s = T.sort_of(e)
        if s == sort:
            return e
        if sort == REAL and s == INT and isinstance(e, T.Const):
            return T.const(e.value, REAL)
        raise SortError(f"expected {sort}, got {s} in {T.pretty(e)}", loc)

    def index_list(self, arr: ArrayDecl) -> tuple:
        loc = self.expect("[").loc
        idx = [self.expr()]
        while self.at(","):
            self.advance()
            idx.append(self.expr())
        self.expect("]")
        if len(idx) != arr.dims:
            raise SortError(f"{arr.name} has {arr.dims} dimension(s), got {len(idx)}", loc)
        return tuple(self._fit(e, s, loc) for e, s in zip(idx, arr.index_sorts))

    # -- properties

    def property(self) -> PropertySpec:
        start = self.advance()
        hint = start.text == "hint"
        point = None
        if self.at("at"):
            self.advance()
            point = self.ident().text
        names = []
        if self.at("forall"):
            self.advance()
            while True:
                sort = None
                if self.at("int", "real"):
                    sort = SORT_WORDS[self.advance().text]
                nt = self.ident()
                if nt.text in self.scalars or nt.text in self.arrays:
                    raise ParseError(f"binder {nt.text!r} shadows a program variable", nt.loc)
                names.append((nt.text, sort))
                if not self.at(","):
                    break
                self.advance()
            self.expect(":")
        body_start = self.i
        sorts = {n: s or INT for n, s in names}
        for _ in range(2):
            self.i = body_start
            self.bound = {n: Var(n, s) for n, s in sorts.items()}
            try:
                pins, guard, concl = self.property_body()
                break
            except SortError:
                inferred = self._infer_real(body_start, [n for n, s in names if s is None])
                if not inferred or all(sorts[n] == REAL for n in inferred):
                    raise
                sorts.update({n: REAL for n in inferred})
        self.bound = {}
        end = self.expect(";")
        text = self.src_slice(start, end)
        binders = tuple(Var(n, sorts[n]) for n, _ in names)
        return PropertySpec(point, binders, guard, concl, pins, hint, start.loc, text)

    def property_body(self):
        pins = []
        if self.at("with"):
            self.advance()
            while True:
                name = self.ident()
                arr = self._array(name)
                pins.append(Select(arr.name, self.index_list(arr), arr.value_sort))
                if not self.at(","):
                    break
                self.advance()
            self.expect(":")
        first = self.expr()
        if self.at("=>"):
            self.advance()
            guard, concl = first, self.expr()
        else:
            guard, concl = T.TRUE, first
        for part in (guard, concl):
            if T.sort_of(part) != BOOL:
                raise SortError("property parts must be boolean", self.tok.loc)
        return tuple(pins), guard, concl

    def _infer_real(self, start: int, names: list[str]) -> list[str]:
        """Binders written directly as an index of a real-indexed array."""
        found = []
        toks = self.toks
        for j in range(start, len(toks) - 2):
            if toks[j].text == ";":
                break
            if toks[j].kind == "id" and toks[j].text in self.arrays and toks[j + 1].text == "[":
                arr = self.arrays[toks[j].text]
                k, d = j + 2, 0
                while k < len(toks) and toks[k].text != "]" and d < arr.dims:
                    if toks[k].kind == "id" and toks[k].text in names \
                            and toks[k + 1].text in (",", "]") and arr.index_sorts[d] == REAL:
                        found.append(toks[k].text)
                    if toks[k].text == ",":
                        d += 1
                    k += 1
        return found

    def src_slice(self, a: Tok, b: Tok) -> str:
        lines = self.src.splitlines()
        if a.loc.line == b.loc.line:
            return lines[a.loc.line - 1][a.loc.col - 1:b.loc.col]
        parts = [lines[a.loc.line - 1][a.loc.col - 1:]]
        parts += lines[a.loc.line:b.loc.line - 1]
        parts.append(lines[b.loc.line - 1][:b.loc.col])
        return " ".join(p.strip() for p in parts)

    # -- expressions

    def expr(self) -> Term:
        return self.disjunction()

    def disjunction(self) -> Term:
        e = self.conjunction()
        while self.at("||"):
            self.advance()
            e = T.disj(self._bool(e), self._bool(self.conjunction()))
        return e

    def conjunction(self) -> Term:
        e = self.negation()
        while self.at("&&"):
            self.advance()
            e = T.conj(self._bool(e), self._bool(self.negation()))
        return e

    def negation(self) -> Term:
        if self.at("!"):
            self.advance()
            return T.negate(self._bool(self.negation()))
        return self.comparison()

    _CMP = {"==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}

    def comparison(self) -> Term:
        e = self.additive()
        if self.tok.kind == "op" and self.tok.text in self._CMP:
            loc = self.tok.loc
            op = self._CMP[self.advance().text]
            rhs = self.additive()
            sa, sb = T.sort_of(e), T.sort_of(rhs)
            if op in ("eq", "ne"):
                ok = sa == sb or {sa, sb} == {INT, REAL} and (isinstance(e, T.Const) or isinstance(rhs, T.Const))
            else:
                ok = sa != BOOL and sb != BOOL and (sa == sb or isinstance(e, T.Const) or isinstance(rhs, T.Const))
            if not ok:
                raise SortError(f"cannot compare {sa} with {sb}", loc)
            e = T.cmp(op, e, rhs)
        return e

    def additive(self) -> Term:
        e = self.multiplicative()
        while self.at("+", "-"):
            loc, op = self.tok.loc, self.advance().text
            rhs = self.multiplicative()
            self._numeric(e, rhs, loc)
            e = T.add(e, rhs) if op == "+" else T.sub(e, rhs)
        return e

    def multiplicative(self) -> Term:
        e = self.unary()
        while self.at("*", "%"):
            loc, op = self.tok.loc, self.advance().text
            rhs = self.unary()
            self._numeric(e, rhs, loc)
            try:
                e = T.mul(e, rhs) if op == "*" else T.mod(e, rhs)
            except T.TermError as ex:
                raise SortError(str(ex), loc) from None
        return e

    def _numeric(self, a: Term, b: Term, loc: Loc) -> None:
        sa, sb = T.sort_of(a), T.sort_of(b)
        if BOOL in (sa, sb):
            raise SortError("arithmetic on a boolean", loc)
        if sa != sb and not (isinstance(a, T.Const) or isinstance(b, T.Const)):
            raise SortError(f"mixed {sa}/{sb} arithmetic", loc)

    def _bool(self, e: Term) -> Term:
        if T.sort_of(e) != BOOL:
            raise SortError(f"expected a boolean, got {T.pretty(e)}", self.tok.loc)
        return e

    def unary(self) -> Term:
        if self.at("-"):
            loc = self.advance().loc
            e = self.unary()
            if T.sort_of(e) == BOOL:
                raise SortError("negation of a boolean", loc)
            return T.neg(e)
        return self.primary()

    def primary(self) -> Term:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return T.const(Fraction(t.text), REAL) if "." in t.text else T.const(int(t.text))
        if self.at("true", "false"):
            self.advance()
            return T.TRUE if t.text == "true" else T.FALSE
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("count", "orig_count"):
            self.advance()
            self.expect("(")
            arr = self._array(self.ident())
            self.expect(",")
            v = self._fit(self.expr(), arr.value_sort, t.loc)
            self.expect(")")
            if arr.dims != 1 or not arr.ranged:
                raise SortError("count needs a one-dimensional ranged array", t.loc)
            return Count(arr.name, v, t.text == "orig_count")
        if t.kind == "id":
            self.advance()
            if self.at("["):
                arr = self._array(t)
                return Select(arr.name, self.index_list(arr), arr.value_sort)
            if t.text in self.bound:
                return self.bound[t.text]
            if t.text in self.scalars:
                return Var(t.text, self.scalars[t.text].sort)
            if t.text in self.arrays:
                raise SortError(f"array {t.text!r} used as a scalar", t.loc)
            raise UndeclaredError(f"undeclared variable {t.text!r}", t.loc)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.loc)


def parse_program(src: str) -> Program:
    return Parser(src).program()


def parse_properties(src: str, prog: Program) -> list[PropertySpec]:
    """Parse a hint/property file against the declarations of ``prog``."""
    p = Parser(src)
    p.scalars = {d.name: d for d in prog.scalars}
    p.arrays = {d.name: d for d in prog.arrays}
    p.labels = set(_labels(prog.body))
    if prog.exit_label:
        p.labels.add(prog.exit_label)
    out = []
    while p.tok.kind != "eof":
        if not p.at("assert", "hint"):
            raise ParseError("expected 'assert' or 'hint'", p.tok.loc)
        out.append(p.property())
    for q in out:
        if q.point is not None and q.point not in p.labels and q.point not in ("init", "exit"):
            raise UndeclaredError(f"unknown label {q.point!r}", q.loc)
    return out


def _labels(body: list):
    for s in body:
        if s.label:
            yield s.label
        if isinstance(s, While):
            yield from _labels(s.body)
        elif isinstance(s, If):
            yield from _labels(s.then)
            yield from _labels(s.orelse)
