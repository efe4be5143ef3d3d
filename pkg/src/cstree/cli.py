"""Command line front end.  Every subcommand writes line-delimited JSON.

Exit codes: 0 success or all verdicts agree, 2 the solver reported Fail
(or an oracle ran out of budget), 3 a disagreement or discrepancy was
found, 4 the input was rejected.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from pathlib import Path
from typing import Callable, TextIO

from . import dp, euclid, harness, oracle, reduce, relax
from .core import (
    CONSTRAINT_KINDS,
    Diameter,
    InvariantViolation,
    MinDegree,
    ProblemInstance,
    Size,
    SolveOutcome,
    Status,
)

EXIT_OK, EXIT_FAIL, EXIT_DISAGREE, EXIT_INPUT = 0, 2, 3, 4
ENV_TREES, ENV_SECONDS, ENV_VERTICES = "CSTREE_BUDGET_TREES", "CSTREE_BUDGET_SECONDS", "CSTREE_BUDGET_VERTICES"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = ", ".join(x for x in (f"line {line}" if line else "", f"field {field!r}" if field else "") if x)
        super().__init__(f"{where}: {message}" if where else message)
        self.line, self.field = line, field


def _line_of(text: str, key: str) -> int | None:
    m = re.search(rf'"{re.escape(key)}"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_schema(obj, text: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError("top level must be a JSON object", 1)

    def need(key: str, ok: Callable[[object], bool], what: str) -> None:
        if key not in obj:
            raise ParseError("missing", None, key)
        if not ok(obj[key]):
            raise ParseError(f"expected {what}", _line_of(text, key), key)

    need("n", _is_int, "an integer")
    need("directed", lambda x: isinstance(x, bool), "true or false")
    need(
        "weights",
        lambda x: isinstance(x, list) and all(isinstance(r, list) and all(v is None or _is_int(v) for v in r) for r in x),
        "a list of rows of integers or null",
    )
    need("terminals", lambda x: isinstance(x, list) and all(_is_int(v) for v in x), "a list of integers")
    if "root" in obj and not (obj["root"] is None or _is_int(obj["root"])):
        raise ParseError("expected an integer or null", _line_of(text, "root"), "root")
    need("constraint", lambda x: isinstance(x, dict), "an object")
    c = obj["constraint"]
    line = _line_of(text, "constraint")
    if c.get("kind") not in CONSTRAINT_KINDS:
        raise ParseError(f"kind must be one of {sorted(CONSTRAINT_KINDS)}", line, "constraint.kind")
    if not _is_int(c.get("value")):
        raise ParseError("expected an integer", line, "constraint.value")


def parse_instance(path: str | Path) -> ProblemInstance:
    """Read and validate an instance file.

    Malformed JSON or fields of the wrong shape raise :class:`ParseError`;
    well-formed files that break a model rule raise ``InvariantViolation``.
    """
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    _check_schema(obj, text)
    return ProblemInstance.from_json(obj)


def budget_from(args: argparse.Namespace) -> oracle.EnumerationBudget:
    default = oracle.EnumerationBudget()
    trees = args.budget_trees if args.budget_trees is not None else os.environ.get(ENV_TREES)
    seconds = args.budget_seconds if args.budget_seconds is not None else os.environ.get(ENV_SECONDS)
    verts = args.max_vertices if args.max_vertices is not None else os.environ.get(ENV_VERTICES)
    return oracle.EnumerationBudget(
        max_vertices=int(verts) if verts is not None else default.max_vertices,
        max_trees=int(trees) if trees is not None else default.max_trees,
        seconds=float(seconds) if seconds is not None else default.seconds,
    )


def _emit(out: TextIO, record: dict) -> None:
    out.write(json.dumps(record) + "\n")
    out.flush()


def _exit_for(outcome: SolveOutcome) -> int:
    return {Status.OPTIMAL: EXIT_OK, Status.FAIL: EXIT_FAIL, Status.DISCREPANCY: EXIT_DISAGREE}[outcome.status]


def _require(inst: ProblemInstance, ctype: type, directed: bool) -> None:
    if not isinstance(inst.constraint, ctype) or inst.directed != directed:
        kind = "directed" if directed else "undirected"
        raise InvariantViolation(f"this solver needs a {kind} instance with a {ctype.kind} constraint")


# --- subcommands ------------------------------------------------------------


def cmd_solve(args, out) -> int:
    inst = parse_instance(args.file)
    start = time.perf_counter()
    if args.problem == "ddcst":
        _require(inst, Diameter, True)
        outcome = dp.solve_ddcst(inst, early_stop=not args.no_early_stop)
    elif args.problem == "dcst":
        _require(inst, Diameter, False)
        outcome = reduce.solve_dcst(inst, early_stop=not args.no_early_stop)
    else:
        _require(inst, MinDegree if args.problem == "mcst-oracle" else Size, False)
        try:
            outcome = oracle.brute_solve(inst, budget_from(args))
        except oracle.BudgetExceeded as exc:
            _emit(out, {"command": f"solve {args.problem}", "digest": harness.digest(inst),
                        "outcome": {"status": "budget_exceeded", "detail": str(exc)}})
            return EXIT_FAIL
    _emit(out, {
        "command": f"solve {args.problem}",
        "digest": harness.digest(inst),
        "outcome": outcome.to_json(),
        "elapsed_s": round(time.perf_counter() - start, 6),
    })
    return _exit_for(outcome)


def cmd_reduce(args, out) -> int:
    inst = parse_instance(args.file)
    if args.kind == "dcst-ddcst":
        if args.relax:
            inst = relax.relax(inst).instance
        red = reduce.dcst_to_ddcst(inst)
    else:
        red = reduce.scst_to_mcst(inst)
    text = json.dumps(red.reduced.to_json())
    if args.output:
        target = Path(args.output)
        target.write_text(text + "\n")
        meta = target.with_name(target.stem + ".meta.json")
        meta.write_text(json.dumps(red.metadata()) + "\n")
        _emit(out, {"command": f"reduce {args.kind}", "digest": harness.digest(inst),
                    "reduced": str(target), "metadata": str(meta), **red.metadata()})
    else:
        out.write(text + "\n")
        print(json.dumps(red.metadata()), file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    inst = parse_instance(args.file)
    start = time.perf_counter()
    try:
        outcome = oracle.brute_solve(inst, budget_from(args))
    except oracle.BudgetExceeded as exc:
        _emit(out, {"command": "oracle", "digest": harness.digest(inst),
                    "outcome": {"status": "budget_exceeded", "detail": str(exc)},
                    "elapsed_s": round(time.perf_counter() - start, 6)})
        return EXIT_FAIL
    _emit(out, {"command": "oracle", "digest": harness.digest(inst), "outcome": outcome.to_json(),
                "elapsed_s": round(time.perf_counter() - start, 6)})
    return _exit_for(outcome)


def cmd_conformance(args, out) -> int:
    records = []
    for record in harness.conformance(args.suite, args.seeds, budget_from(args), args.workers, args.first_seed):
        records.append(record)
        if not args.summary_only:
            _emit(out, record)
    summary = harness.summarize(records)
    if args.summary or args.summary_only:
        _emit(out, {"suite": args.suite, **summary})
    return EXIT_DISAGREE if summary["verdicts"].get(harness.DISAGREE) else EXIT_OK


def _t_range(text: str) -> range:
    m = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if not m or int(m[1]) > int(m[2]):
        raise argparse.ArgumentTypeError("expected A..B with A <= B")
    return range(int(m[1]), int(m[2]) + 1)


def cmd_bench(args, out) -> int:
    records = []
    for record in harness.bench(args.n, args.t_range, args.depth, args.repeats, args.seed, args.halve_splits):
        records.append(record)
        _emit(out, record)
    if args.plot:
        from .plotting import plot_bench

        plot_bench(records, args.plot)
    return EXIT_OK


def cmd_gen(args, out) -> int:
    inst = harness.gen_random(
        args.seed, args.n, args.t, directed=args.directed, constraint_kind=args.kind,
        value=args.value, absent_prob=args.absent_prob,
    )
    text = json.dumps(inst.to_json())
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        out.write(text + "\n")
    return EXIT_OK


def cmd_euclid(args, out) -> int:
    try:
        obj = json.loads(Path(args.file).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    pts = obj.get("points") if isinstance(obj, dict) else None
    if not isinstance(pts, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
        for p in pts
    ):
        raise ParseError("expected a list of [x, y] pairs", None, "points")
    start = time.perf_counter()
    if args.grid:
        length, tree = euclid.grid_tree(pts, args.grid)
        method = f"grid-{args.grid}"
    else:
        tree = euclid.solve_est(pts, args.cap)
        length, method = tree.length, "exact"
    errors = tree.junction_errors()
    _emit(out, {
        "command": "euclid",
        "method": method,
        "points": len(pts),
        "length": length,
        "mst_length": euclid.mst_length([euclid.Point(*p) for p in pts]),
        "steiner_points": [list(p) for p in tree.points[tree.n_terminals:]],
        "edges": [list(e) for e in tree.edges],
        "max_junction_error": max(errors, default=0.0),
        "elapsed_s": round(time.perf_counter() - start, 6),
    })
    if args.svg:
        from .plotting import draw_tree

        draw_tree(tree, args.svg, f"{method}: length {length:.6f}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--budget-trees", type=int, help=f"candidate-tree cap for the oracle (env {ENV_TREES})")
    p.add_argument("--budget-seconds", type=float, help=f"wall-clock cap for the oracle (env {ENV_SECONDS})")
    p.add_argument("--max-vertices", type=int, help=f"largest n the oracle accepts (env {ENV_VERTICES})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cstree", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-o", "--out", help="write JSON lines here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("problem", choices=["ddcst", "dcst", "mcst-oracle", "scst-oracle"],
                   help="ddcst/dcst use the subset DP; the *-oracle problems use exhaustive search")
    p.add_argument("file")
    p.add_argument("--no-early-stop", action="store_true", help="fill every depth layer")
    _budget_flags(p)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("reduce", help="rewrite an instance into another problem")
    p.add_argument("kind", choices=["dcst-ddcst", "scst-mcst"])
    p.add_argument("file")
    p.add_argument("--output", help="reduced instance path; metadata goes to <stem>.meta.json beside it")
    p.add_argument("--relax", action="store_true", help="fill missing edges with big-M before dcst-ddcst")
    p.set_defaults(run=cmd_reduce)

    p = sub.add_parser("oracle", help="exhaustive reference solve")
    p.add_argument("file")
    _budget_flags(p)
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("conformance", help="compare solvers against the oracle on seeded instances")
    p.add_argument("--suite", required=True, choices=sorted(harness.SUITES))
    p.add_argument("--seeds", type=int, required=True, help="number of seeded instances")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1, help="process pool size")
    p.add_argument("--summary", action="store_true", help="append an aggregate record")
    p.add_argument("--summary-only", action="store_true", help="print only the aggregate record")
    _budget_flags(p)
    p.set_defaults(run=cmd_conformance)

    p = sub.add_parser("bench", help="time the DP fill against |T| and fit the exponential base")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--t-range", type=_t_range, required=True, help="terminal counts A..B inclusive")
    p.add_argument("--depth", type=int, help="depth bound (default n)")
    p.add_argument("--repeats", type=int, default=3, help="best-of count per cell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--halve-splits", action="store_true", help="only enumerate splits holding the lowest terminal")
    p.add_argument("--plot", help="write a PNG of time against |T|")
    p.set_defaults(run=cmd_bench)

    p = sub.add_parser("gen", help="write a seeded random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True, help="terminal count")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--kind", choices=sorted(CONSTRAINT_KINDS), default="diameter")
    p.add_argument("--value", type=int, help="constraint bound (random when omitted)")
    p.add_argument("--absent-prob", type=float, default=0.2)
    p.add_argument("--output", help="instance path (default stdout)")
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("euclid", help="Euclidean Steiner tree of a point set")
    p.add_argument("file", help='JSON object {"points": [[x, y], ...]}')
    p.add_argument("--grid", type=int, help="approximate through a lattice of this resolution")
    p.add_argument("--cap", type=int, default=8, help="largest point count for the exact engine")
    p.add_argument("--svg", help="write a drawing of the tree")
    p.set_defaults(run=cmd_euclid)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        return args.run(args, out)
    except (ParseError, InvariantViolation, OSError, ValueError) as exc:
        # ValueError covers model-level rejections such as TrivialInstance or CapExceeded
        print(f"cstree: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
