#!/usr/bin/env python3
"""Bounded soundness check of every corpus program under every abstraction mode,
followed by the clause-mutation sanity check."""

from __future__ import annotations

import argparse
import sys
import time

from cellmorph import corpus
from cellmorph.abstraction import AbstractionError, encode
from cellmorph.frontend import build_cfg, parse_program
from cellmorph.oracle import MUTATIONS, Bounds, check_oracle, mutate
from cellmorph.pipeline import encode_corpus, mode_config

MODES = ("cells1", "weakened", "cells2", "mixed", "multiset")


def sweep(bounds: Bounds, modes) -> int:
    bad = 0
    for name, e in corpus.CORPUS.items():
        cfg = build_cfg(parse_program(corpus.source(name)))
        for mode in modes:
            if mode in ("mixed", "multiset") and mode not in e.modes:
                continue
            conf = mode_config(name, mode)
            props = None
            try:
                encode(cfg, conf)
            except AbstractionError:
                props = []          # property not expressible here; check the transitions only
            t0 = time.monotonic()
            r = check_oracle(cfg, conf, bounds, props=props)
            n = len(r.rule_violations)
            bad += n
            print(f"{name:26s} {mode:9s} props={'no ' if props == [] else 'yes'} states={r.states:7d} "
                  f"rule={n} property={len(r.property_violations)} {time.monotonic() - t0:6.2f}s", flush=True)
            for v in r.violations[:2]:
                print("    ", v)
    return bad


def mutations(bounds: Bounds) -> int:
    missed = 0
    for m in MUTATIONS:
        hit = None
        for name in corpus.CORPUS:
            for mode in ("cells1", "cells2", "multiset"):
                try:
                    enc = encode_corpus(name, mode_config(name, mode))
                except AbstractionError:
                    continue
                mutant = mutate(enc.raw, m)
                if mutant is None:
                    continue
                r = check_oracle(enc.cfg, enc.conf, bounds, props=[], system=mutant)
                if r.rule_violations:
                    hit = (name, mode, r.rule_violations[0])
                    break
            if hit:
                break
        missed += hit is None
        print(f"mutation {m.name:18s} " + (f"caught on {hit[0]} ({hit[1]}): {hit[2]}" if hit else "NOT CAUGHT"))
    return missed


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bounds", type=Bounds.parse, default=Bounds())
    ap.add_argument("--modes", nargs="*", default=list(MODES), choices=MODES)
    ap.add_argument("--skip-mutations", action="store_true")
    args = ap.parse_args(argv)
    t0 = time.monotonic()
    bad = sweep(args.bounds, args.modes)
    missed = 0 if args.skip_mutations else mutations(args.bounds)
    print(f"rule violations: {bad}, uncaught mutations: {missed}, {time.monotonic() - t0:.1f}s")
    return 1 if bad or missed else 0


if __name__ == "__main__":
    sys.exit(main())
