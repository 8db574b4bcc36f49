#!/usr/bin/env python3
"""Solve every corpus program with each available solver and tabulate verdicts and times.

    python scripts/run_experiments.py --solvers spacer z3pdr --timeout 60 --out results.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict, dataclass, field

from cellmorph import corpus
from cellmorph.pipeline import encode_corpus
from cellmorph.solver import SOLVERS, available, run_solver


@dataclass
class ExperimentConfig:
    programs: list = field(default_factory=lambda: list(corpus.CORPUS))
    solvers: list = field(default_factory=lambda: ["spacer", "z3pdr"])
    timeout: float = 60.0
    out: str = ""


@dataclass
class Row:
    program: str
    abstraction: str
    solver: str
    expected: str
    status: str
    seconds: float

    @property
    def ok(self) -> bool:
        return self.status == self.expected


def run(cfg: ExperimentConfig) -> list:
    rows = []
    for name in cfg.programs:
        enc = encode_corpus(name)
        smt = enc.smtlib()
        for kind in cfg.solvers:
            if not available(kind):
                print(f"{name:26s} {kind:9s} not installed", file=sys.stderr)
                continue
            v = run_solver(smt, kind, cfg.timeout)
            row = Row(name, enc.conf.describe(), kind, corpus.CORPUS[name].expect, v.status, round(v.seconds, 2))
            rows.append(row)
            mark = "ok" if row.ok else "--"
            print(f"{name:26s} {kind:9s} {v.status:8s} {v.seconds:8.2f}s  {mark}", flush=True)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--programs", nargs="*", default=list(corpus.CORPUS), choices=list(corpus.CORPUS))
    ap.add_argument("--solvers", nargs="*", default=["spacer", "z3pdr"], choices=SOLVERS)
    ap.add_argument("--timeout", type=float, default=60.0)
    ap.add_argument("--out", default="", help="CSV file for the results")
    cfg = ExperimentConfig(**vars(ap.parse_args(argv)))
    rows = run(cfg)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(asdict(rows[0]))) if rows else None
            if w:
                w.writeheader()
                w.writerows(asdict(r) for r in rows)
    return 0 if all(r.ok for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
