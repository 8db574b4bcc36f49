"""Program text to simplified Horn system, in one call."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import corpus
from .abstraction import AbstractionConfig, Encoder, protected_preds
from .frontend import build_cfg, parse_program, parse_properties
from .horn import HornSystem, emit_smtlib, simplify


@dataclass
class Encoded:
    cfg: object
    conf: AbstractionConfig
    raw: HornSystem
    system: HornSystem
    props: list = field(default_factory=list)   # properties then hints, as indexed by query provenance

    def smtlib(self, header: Optional[str] = None) -> str:
        return emit_smtlib(self.system, header)


def config_for(name: str, **over) -> AbstractionConfig:
    e = corpus.CORPUS[name]
    kw = dict(cells=dict(e.cells), default_cells=e.default_cells, multiset=e.multiset)
    kw.update(over)
    return AbstractionConfig(**kw)


def encode_source(src: str, conf: AbstractionConfig, hint_src: Optional[str] = None,
                  coalesce: bool = True, sink: bool = True) -> Encoded:
    prog = parse_program(src)
    cfg = build_cfg(prog, sink=sink)
    hints = parse_properties(hint_src, prog) if hint_src else ()
    enc = Encoder(cfg, conf, hints=hints)
    raw = enc.run()
    raw.check()
    system = simplify(raw, protected_preds(cfg)) if coalesce else raw
    return Encoded(cfg, conf, raw, system, enc.props + enc.hints)


def encode_corpus(name: str, conf: Optional[AbstractionConfig] = None, **kw) -> Encoded:
    conf = conf or config_for(name)
    return encode_source(corpus.source(name), conf, corpus.hint_source(name), **kw)


def mode_config(name: str, mode: str) -> AbstractionConfig:
    """Named abstraction modes used by the oracle suite and the experiment runner."""
    if mode == "default":
        return config_for(name)
    if mode == "cells1":
        return AbstractionConfig(default_cells=1)
    if mode == "weakened":
        return AbstractionConfig(default_cells=1, weakened=True)
    if mode == "cells2":
        return AbstractionConfig(default_cells=2)
    if mode == "mixed":
        return config_for(name, multiset=None)
    if mode == "multiset":
        return config_for(name)
    raise ValueError(f"unknown mode {mode!r}")
