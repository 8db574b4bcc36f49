"""Command-line driver: ``cellmorph <emit|solve|check-oracle|cex> FILE [options]``.

Exit codes: 0 proved / clean, 1 violated, 2 unknown or budget exhausted, 3 usage
or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import corpus
from .abstraction import AbstractionConfig, AbstractionError
from .frontend import FrontendError
from .oracle import MUTATIONS, Bounds, BudgetExceeded, check_oracle, mutate, validate_hints

EXIT_OK, EXIT_VIOLATED, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str
    conf: AbstractionConfig = field(default_factory=AbstractionConfig)
    bounds: Bounds = field(default_factory=Bounds)
    solvers: tuple = ("spacer",)
    timeout: float = 60.0
    hint: Optional[str] = None
    output: Optional[str] = None
    depth: int = 8
    refine: bool = True
    mutate: Optional[int] = None

    def source(self) -> str:
        p = Path(self.input)
        if p.exists():
            return p.read_text()
        if self.input in corpus.CORPUS:
            return corpus.source(self.input)
        raise UsageError(f"no such file or corpus program: {self.input}")

    def hint_source(self) -> Optional[str]:
        if self.hint is None:
            return None
        p = Path(self.hint)
        if not p.exists():
            raise UsageError(f"no such hint file: {self.hint}")
        return p.read_text()


def _cells(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(",")):
        name, _, n = part.partition("=")
        if not n.isdigit():
            raise argparse.ArgumentTypeError(f"expected NAME=CELLS, got {part!r}")
        out[name.strip()] = int(n)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cellmorph", description="Array programs to Horn clauses.")
    ap.add_argument("command", choices=["emit", "solve", "check-oracle", "cex"])
    ap.add_argument("file", help="program file, or the name of a bundled example")
    ap.add_argument("--cells", type=int, choices=[0, 1, 2], default=1, help="cells per array")
    ap.add_argument("--array-cells", type=_cells, default={}, metavar="A=N,...",
                    help="per-array cell counts overriding --cells")
    ap.add_argument("--ordered", action=argparse.BooleanOptionalAction, default=True,
                    help="order the two cells (k1 <= k2)")
    ap.add_argument("--weakened", action="store_true", help="linear read clauses")
    ap.add_argument("--multiset", choices=["track", "track-orig"])
    ap.add_argument("--shared-index", action="store_true")
    ap.add_argument("--no-bounds-guards", action="store_true", help="omit index range guards")
    ap.add_argument("--solver", action="append", choices=["spacer", "z3pdr", "eldarica"],
                    help="repeat for a portfolio (default: spacer)")
    ap.add_argument("--timeout", type=float, default=60.0)
    ap.add_argument("--hint", help="file of hint/assert lines")
    ap.add_argument("--bounds", type=Bounds.parse, default=Bounds(), help="oracle bounds, e.g. n=3,lo=0,hi=3")
    ap.add_argument("--depth", type=int, default=8, help="derivation search depth cap")
    ap.add_argument("--no-refine", action="store_true")
    ap.add_argument("--mutate", type=int, metavar="N", help=f"check-oracle on mutation N (0..{len(MUTATIONS) - 1})")
    ap.add_argument("-o", "--output")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run_config(ns) -> RunConfig:
    conf = AbstractionConfig(cells=dict(ns.array_cells), default_cells=ns.cells, ordered=ns.ordered,
                             weakened=ns.weakened, multiset=ns.multiset, shared_index=ns.shared_index,
                             bounds_guards=not ns.no_bounds_guards)
    return RunConfig(ns.command, ns.file, conf, ns.bounds, tuple(ns.solver or ("spacer",)), ns.timeout,
                     ns.hint, ns.output, ns.depth, not ns.no_refine, ns.mutate)


def _write(rc: RunConfig, text: str) -> None:
    if rc.output:
        Path(rc.output).write_text(text)
    else:
        sys.stdout.write(text)


def _encode(rc: RunConfig, check_hints: bool = True):
    from .pipeline import encode_source
    enc = encode_source(rc.source(), rc.conf, rc.hint_source())
    hints = [p for p in enc.props if p.hint]
    if hints and check_hints:
        bad = validate_hints(enc.cfg, rc.conf, hints, rc.bounds)
        if bad:
            raise UsageError("hint fails on reachable states: " + "; ".join(str(v) for v in bad))
    return enc


def cmd_emit(rc: RunConfig) -> int:
    enc = _encode(rc)
    header = f"cellmorph {rc.input}\nabstraction: {rc.conf.describe()}"
    _write(rc, enc.smtlib(header))
    return EXIT_OK


def cmd_solve(rc: RunConfig) -> int:
    from .solver import verify
    _encode(rc)     # input and hint validation
    out = verify(rc.source(), rc.conf, rc.hint_source(), rc.solvers, rc.timeout, rc.depth, rc.refine)
    for line in out.log:
        logging.getLogger("cellmorph").info(line)
    if out.verdict == "proved":
        extra = f" (after {out.refinements} refinement{'s' if out.refinements != 1 else ''})" \
            if out.refinements else ""
        print(f"proved{extra} [{out.conf.describe()}]")
    elif out.verdict == "violated":
        print("violated")
        from .pipeline import encode_source
        cfg = encode_source(rc.source(), out.conf, rc.hint_source()).cfg
        text = out.witness.render(cfg)
        if rc.output:
            Path(rc.output).write_text(text)
            print(f"witness written to {rc.output}")
        else:
            sys.stdout.write(text)
    elif out.verdict == "exhausted":
        print("unknown (refinement exhausted)")
    else:
        status = out.solver.status if out.solver else "unknown"
        print(f"unknown ({status})")
    return out.exit_code


def cmd_check_oracle(rc: RunConfig) -> int:
    from .pipeline import encode_source
    enc = encode_source(rc.source(), rc.conf, rc.hint_source())
    system = None
    if rc.mutate is not None:
        if not 0 <= rc.mutate < len(MUTATIONS):
            raise UsageError(f"mutation index must be in 0..{len(MUTATIONS) - 1}")
        m = MUTATIONS[rc.mutate]
        system = mutate(enc.raw, m)
        if system is None:
            print(f"mutation {m.name} does not apply to this program")
            return EXIT_USAGE
        print(f"mutation {m.name}: {m.description}")
    hints = [p for p in enc.props if p.hint]
    props = [p for p in enc.props if not p.hint]
    report = check_oracle(enc.cfg, rc.conf, rc.bounds, props=props, hints=hints, system=system)
    _write(rc, report.render())
    return EXIT_OK if not report.violations else EXIT_VIOLATED


def cmd_cex(rc: RunConfig) -> int:
    from .solver import extract_branch, find_unfolding_deepening, trace_to_concrete_formula
    enc = _encode(rc)
    tree, depth = find_unfolding_deepening(enc.system, rc.depth, rc.timeout)
    if tree is None:
        print(f"no counterexample at depth {depth}")
        return EXIT_OK
    print(f"counterexample unfolding (depth {depth}):")
    print(tree.render())
    trace = extract_branch(tree)
    print("trace: " + " ; ".join(f"{','.join(f'e{i}' for i in s.edges)} {s.rule} -> {s.point}"
                                 for s in trace.steps))
    tf = trace_to_concrete_formula(trace, enc.cfg, enc.props)
    status = tf.check(rc.timeout)
    if rc.output:
        Path(rc.output).write_text(tf.text)
        print(f"trace formula written to {rc.output}")
    else:
        sys.stdout.write(tf.text)
    print(f"trace formula: {status}")
    if status == "sat":
        return EXIT_VIOLATED
    if status == "unsat":
        print("spurious; arrays in the refutation: " + ", ".join(sorted(tf.core_arrays)))
    return EXIT_UNKNOWN


COMMANDS = {"emit": cmd_emit, "solve": cmd_solve, "check-oracle": cmd_check_oracle, "cex": cmd_cex}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    rc = run_config(ns)
    try:
        return COMMANDS[rc.command](rc)
    except (UsageError, FrontendError, AbstractionError, OSError) as ex:
        print(f"cellmorph: error: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as ex:
        print(f"cellmorph: budget exceeded: {ex}", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
