"""``mwulp`` command line: solve, verify, bench, oracle.

Exit codes:

====  ==========================================================
0     success (feasible / optimal, verification passed)
1     verification failed
2     instance reported infeasible
3     iteration limit reached
64    bad command-line usage
65    input exceeds an oracle's size bound
66    file missing, unreadable or malformed
====  ==========================================================

``solve`` prints one RunRecord (JSON, ``schema = "mwulp.runrecord/1"``);
``bench`` writes CSV rows with the fixed header :data:`BENCH_COLUMNS`. Besides
the graph problems it accepts the pseudo-problem ``matvec``, which only times
incidence applies and transposes (one row per thread count).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from mwulp import _parallel
from mwulp.generators import erdos_renyi, random_bipartite, random_geometric
from mwulp.implicit import IncidenceOp
from mwulp.model import instance_from_json
from mwulp.oracle import (OracleSizeError, brute_densest, dominating_set_lp, half_integral_vcover,
                          hopcroft_karp, lp_vertex_enumeration, matching_lp, verify_solution,
                          vertex_cover_lp)
from mwulp.problems import (ProblemKind, ProblemSpec, build_densest_feasibility,
                            build_dominating_set, build_generalized_matching, build_matching,
                            build_vertex_cover, ProblemResult, solve_problem)
from mwulp.solver import SolverConfig, Status
from mwulp.sparse import Graph, from_matrix_market, read_biadjacency

log = logging.getLogger("mwulp")

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_INFEASIBLE = 2
EXIT_ITER_LIMIT = 3
EXIT_USAGE = 64
EXIT_SIZE = 65
EXIT_IO = 66

RUNRECORD_SCHEMA = "mwulp.runrecord/1"
BENCH_COLUMNS = ["problem", "graph", "n", "m", "epsilon", "step", "threads", "seed", "status",
                 "value", "iterations", "search_evaluations", "wall_time", "matvec_time",
                 "search_time", "vec_time", "error"]
STATUS_EXIT = {Status.FEASIBLE: EXIT_OK, Status.INFEASIBLE: EXIT_INFEASIBLE,
               Status.ITER_LIMIT: EXIT_ITER_LIMIT}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _epsilon(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--step", choices=["standard", "binary", "newton"], default="newton")
    p.add_argument("--max-iter", type=_positive_int, default=5000)
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads (default: ${_parallel.ENV_THREADS} or 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true",
                   help="fixed reduction order (the kernels always use one)")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", required=True, choices=[k.value for k in ProblemKind])
    p.add_argument("--graph", help="Matrix Market graph (biadjacency for bmatch)")
    p.add_argument("--instance", help="JSON instance for --problem feas")
    p.add_argument("--lb", help="genmatch lower bounds: a number or a file of n values")
    p.add_argument("--ub", help="genmatch upper bounds: a number or a file of n values")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mwulp", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one problem and print a RunRecord")
    _add_problem_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", help="also write the RunRecord here")
    p.add_argument("--dump-x", help="write the solution vector as JSON {\"x\": [...]}")

    p = sub.add_parser("verify", help="check a solution vector against its constraints")
    _add_problem_flags(p)
    p.add_argument("--solution", required=True, help="JSON with key x (or a RunRecord) or text")
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--bound", type=float, help="D for densesub")
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("bench", help="sweep problems x step modes x thread counts, CSV out")
    p.add_argument("--graphs", nargs="*", default=[],
                   help="paths or generators: er:n=..,m=..  rgg:n=..,deg=..  bip:nl=..,nr=..,m=..")
    p.add_argument("--problems", default="match,vcover,domset,densesub")
    p.add_argument("--steps", default="standard,binary,newton")
    p.add_argument("--threads", default="1")
    p.add_argument("--epsilon", type=_epsilon, default=0.1)
    p.add_argument("--max-iter", type=_positive_int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("oracle", help="exact reference value for a small graph")
    p.add_argument("which", choices=["densest", "vcover", "bmatch", "lp"])
    p.add_argument("--graph", required=True)
    p.add_argument("--problem", choices=["match", "vcover", "domset"], default="vcover",
                   help="LP to enumerate for 'oracle lp'")
    p.add_argument("--plain", action="store_true", help="print only the value")
    return parser


# -- inputs -------------------------------------------------------------------

def _load_graph(path: str | None, bipartite: bool = False) -> Graph:
    if not path:
        raise UsageError("--graph is required for this problem")
    try:
        return read_biadjacency(path) if bipartite else from_matrix_market(path)
    except FileNotFoundError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror or exc}") from exc
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_bounds(text: str | None, n: int, name: str) -> np.ndarray:
    if text is None:
        raise UsageError(f"genmatch needs --{name}")
    try:
        return np.full(n, float(text))
    except ValueError:
        pass
    try:
        vals = np.loadtxt(text, dtype=np.float64).reshape(-1)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read --{name} file {text}: {exc}") from exc
    if vals.size != n:
        raise InputError(f"--{name} file has {vals.size} values, graph has {n} vertices")
    return vals


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"cannot open {path}") from exc
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _spec_from_args(args, workers) -> ProblemSpec:
    kind = ProblemKind(args.problem)
    if kind is ProblemKind.FEAS:
        if not args.instance:
            raise UsageError("--problem feas needs --instance")
        try:
            inst = instance_from_json(_load_json(args.instance), workers)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed instance {args.instance}: {exc}") from exc
        return ProblemSpec(kind, instance=inst)
    g = _load_graph(args.graph, bipartite=kind is ProblemKind.BMATCH)
    if kind is ProblemKind.GENMATCH:
        return ProblemSpec(kind, g, _load_bounds(args.lb, g.n, "lb"), _load_bounds(args.ub, g.n, "ub"))
    return ProblemSpec(kind, g)


# -- commands -----------------------------------------------------------------

def _run_record(args, spec: ProblemSpec, res, workers: int) -> dict:
    return {
        "schema": RUNRECORD_SCHEMA,
        "problem": spec.kind.value,
        "graph": args.graph if spec.kind is not ProblemKind.FEAS else args.instance,
        "n": spec.graph.n if spec.graph is not None else spec.instance.n,
        "m": spec.graph.m if spec.graph is not None else None,
        "epsilon": args.epsilon,
        "step": args.step,
        "threads": workers,
        "seed": args.seed,
        "deterministic": bool(args.deterministic),
        "status": res.status.value,
        "value": res.value,
        "iterations": res.iterations,
        "search_evaluations": res.search_evaluations,
        "wall_time": res.wall_time,
        "timings": {k: res.timings.get(k, 0.0) for k in ("matvec", "search", "vec")},
        "details": _jsonable(res.details),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def cmd_solve(args) -> int:
    workers = _parallel.resolve_workers(args.threads)
    spec = _spec_from_args(args, workers)
    cfg = SolverConfig(epsilon=args.epsilon, max_iter=args.max_iter, step_mode=args.step,
                       deterministic=args.deterministic)
    try:
        res = solve_problem(spec, cfg, workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    record = _run_record(args, spec, res, workers)
    text = json.dumps(record, indent=2)
    print(text)
    try:
        if args.out:
            Path(args.out).write_text(text + "\n")
        if args.dump_x and res.x is not None:
            Path(args.dump_x).write_text(json.dumps({"x": res.x.tolist()}))
    except OSError as exc:
        raise InputError(f"cannot write output: {exc}") from exc
    return STATUS_EXIT[res.status]


def _load_solution(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot open {path}") from exc
    try:
        doc = json.loads(text)
        x = doc["x"] if isinstance(doc, dict) else doc
        return np.asarray(x, dtype=np.float64).reshape(-1)
    except (ValueError, KeyError, TypeError):
        try:
            return np.loadtxt(io.StringIO(text), dtype=np.float64).reshape(-1)
        except ValueError as exc:
            raise InputError(f"cannot parse solution {path}: {exc}") from exc


def cmd_verify(args) -> int:
    spec = _spec_from_args(args, None)
    x = _load_solution(args.solution)
    kind, g = spec.kind, spec.graph
    try:
        if kind in (ProblemKind.MATCH, ProblemKind.BMATCH):
            inst = build_matching(g)
        elif kind is ProblemKind.VCOVER:
            inst = build_vertex_cover(g)
        elif kind is ProblemKind.DOMSET:
            inst = build_dominating_set(g)
        elif kind is ProblemKind.DENSESUB:
            if args.bound is None:
                raise UsageError("verify --problem densesub needs --bound D")
            inst = build_densest_feasibility(g, args.bound)
        elif kind is ProblemKind.GENMATCH:
            inst = build_generalized_matching(g, spec.lb, spec.ub)
        else:
            inst = spec.instance
        report = verify_solution(inst, x, args.epsilon, args.tol)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = report.to_dict()
    out["value"] = float(x.sum())
    print(json.dumps(_jsonable(out), indent=2))
    return EXIT_OK if report.ok else EXIT_VERIFY_FAIL


def parse_graph_spec(text: str, seed: int) -> tuple[str, Graph]:
    """``er:n=..,m=..``, ``rgg:n=..,deg=..`` (or ``r=..``), ``bip:nl=..,nr=..,m=..`` or a path."""
    if ":" in text and text.split(":", 1)[0] in ("er", "rgg", "bip"):
        kind, rest = text.split(":", 1)
        try:
            kv = {k: float(v) for k, v in (item.split("=") for item in rest.split(",") if item)}
        except ValueError as exc:
            raise UsageError(f"bad generator spec {text!r}") from exc
        try:
            if kind == "er":
                return text, erdos_renyi(int(kv["n"]), int(kv["m"]), seed)
            if kind == "rgg":
                return text, random_geometric(int(kv["n"]), kv.get("r"), seed, kv.get("deg", 8.0))
            return text, random_bipartite(int(kv["nl"]), int(kv["nr"]), int(kv["m"]), seed)
        except KeyError as exc:
            raise UsageError(f"generator spec {text!r} is missing {exc}") from exc
    return text, _load_graph(text)


def matvec_probe(g: Graph, workers: int, reps: int = 20) -> ProblemResult:
    """Time ``reps`` incidence applies plus transposes, as a solver-shaped result.

    ``value`` is a checksum so runs at different worker counts can be compared.
    """
    op = IncidenceOp(g, workers)
    rng = np.random.default_rng(0)
    x = rng.random(g.m)
    w = rng.random(g.n)
    t0 = time.perf_counter()
    total = 0.0
    for _ in range(reps):
        total += float(op.apply(x).sum()) + float(op.apply_t(w).sum())
    wall = time.perf_counter() - t0
    return ProblemResult(ProblemKind.FEAS, Status.FEASIBLE, total, None, reps, 0, wall,
                         {"matvec": wall, "search": 0.0, "vec": 0.0})


def cmd_bench(args) -> int:
    problems = [p for p in args.problems.split(",") if p]
    steps = [s for s in args.steps.split(",") if s]
    try:
        threads = [int(t) for t in args.threads.split(",") if t]
    except ValueError as exc:
        raise UsageError(f"bad --threads list {args.threads!r}") from exc
    for p in problems:
        if p not in ("match", "bmatch", "vcover", "domset", "densesub", "matvec"):
            raise UsageError(f"bench does not run problem {p!r}")
    for s in steps:
        if s not in ("standard", "binary", "newton"):
            raise UsageError(f"unknown step mode {s!r}")
    graphs = [parse_graph_spec(spec, args.seed) for spec in args.graphs]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        for name, g in graphs:
            for prob in problems:
                # the operator timing does not depend on the step mode
                for step in (["-"] if prob == "matvec" else steps):
                    for t in threads:
                        row = {"problem": prob, "graph": name, "n": g.n, "m": g.m,
                               "epsilon": args.epsilon, "step": step, "threads": t,
                               "seed": args.seed, "error": ""}
                        try:
                            if prob == "matvec":
                                res = matvec_probe(g, t)
                            else:
                                cfg = SolverConfig(epsilon=args.epsilon,
                                                   max_iter=args.max_iter, step_mode=step)
                                res = solve_problem(ProblemSpec(prob, g), cfg, t)
                            row.update(status=res.status.value, value=res.value,
                                       iterations=res.iterations,
                                       search_evaluations=res.search_evaluations,
                                       wall_time=res.wall_time,
                                       matvec_time=res.timings.get("matvec", 0.0),
                                       search_time=res.timings.get("search", 0.0),
                                       vec_time=res.timings.get("vec", 0.0))
                        except Exception as exc:  # record and keep sweeping
                            row.update(status="error", error=f"{type(exc).__name__}: {exc}")
                        writer.writerow(row)
                        fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = _load_graph(args.graph, bipartite=args.which == "bmatch")
    t0 = time.perf_counter()
    try:
        if args.which == "densest":
            value = brute_densest(g)
        elif args.which == "vcover":
            value = half_integral_vcover(g)
        elif args.which == "bmatch":
            value = float(hopcroft_karp(g))
        else:
            build = {"match": matching_lp, "vcover": vertex_cover_lp,
                     "domset": dominating_set_lp}[args.problem]
            res = lp_vertex_enumeration(build(g))
            if not res.feasible:
                print(json.dumps({"oracle": "lp", "problem": args.problem, "status": res.status}))
                return EXIT_INFEASIBLE
            value = res.value
    except OracleSizeError as exc:
        print(f"mwulp: oracle refused: {exc}", file=sys.stderr)
        return EXIT_SIZE
    if args.plain:
        print(value)
    else:
        print(json.dumps({"oracle": args.which, "graph": args.graph, "value": value,
                          "wall_time": time.perf_counter() - t0}))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mwulp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"mwulp: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
