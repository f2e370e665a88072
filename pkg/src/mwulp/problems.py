"""Graph LP relaxations expressed over the implicit operators.

=============  ===========================  ======================================
kind           LP                           operators
=============  ===========================  ======================================
match/bmatch   max <1,x>, M x <= 1          P = M (incidence)
domset         min <1,x>, (I + A) x >= 1    C = I + A (CSB)
vcover         min <1,x>, M^T x >= 1        C = M^T (transpose view)
densesub       W z >= 1, O z <= D           C = W, P = O / D
genmatch       lb <= M x <= ub              P = M / ub, C = M / lb (lb > 0 rows)
=============  ===========================  ======================================
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from mwulp.implicit import IncidenceOp, InterweaveOp, PairOp
from mwulp.model import (CsbOperator, MixedInstance, Mode, RowScaledOperator,
                         TransposedOperator, objective_upper_bound)
from mwulp.solver import (SolverConfig, Status, composed_epsilon, solve_feasibility,
                          solve_pure_covering, solve_pure_packing)
from mwulp.sparse import CooMatrix, Graph

log = logging.getLogger(__name__)

__all__ = [
    "ProblemKind",
    "ProblemSpec",
    "ProblemResult",
    "DensestResult",
    "build_matching",
    "build_bipartite_matching",
    "build_dominating_set",
    "build_vertex_cover",
    "build_densest_feasibility",
    "build_generalized_matching",
    "closed_neighborhood_matrix",
    "solve_densest",
    "solve_problem",
]


class ProblemKind(str, enum.Enum):
    MATCH = "match"
    BMATCH = "bmatch"
    DOMSET = "domset"
    VCOVER = "vcover"
    DENSESUB = "densesub"
    GENMATCH = "genmatch"
    FEAS = "feas"


@dataclass
class ProblemSpec:
    kind: ProblemKind
    graph: Graph | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    instance: MixedInstance | None = None

    def __post_init__(self):
        self.kind = ProblemKind(self.kind)


def _require_edges(g: Graph, what: str) -> None:
    if g.m == 0:
        raise ValueError(f"{what} needs at least one edge")


def build_matching(g: Graph, workers: int | None = None) -> MixedInstance:
    """Fractional matching: one variable per edge, one packing row per vertex."""
    _require_edges(g, "matching")
    P = IncidenceOp(g, workers)
    return MixedInstance.pure_packing(P, objective_upper_bound(P))


def build_bipartite_matching(g: Graph, workers: int | None = None) -> MixedInstance:
    """Same LP as :func:`build_matching`; requires a left/right split."""
    if g.n_left is None or not g.is_bipartite_split():
        raise ValueError("bipartite matching needs a graph with every edge from left to right")
    return build_matching(g, workers)


def closed_neighborhood_matrix(g: Graph) -> CooMatrix:
    """``I + A`` as an explicit COO matrix."""
    v = np.arange(g.n)
    rows = np.concatenate((v, g.rows, g.cols))
    cols = np.concatenate((v, g.cols, g.rows))
    return CooMatrix((g.n, g.n), rows, cols, np.ones(rows.size))


def build_dominating_set(g: Graph, workers: int | None = None) -> MixedInstance:
    """Fractional dominating set; isolated vertices must dominate themselves."""
    if g.n == 0:
        raise ValueError("dominating set needs at least one vertex")
    C = CsbOperator.from_coo(closed_neighborhood_matrix(g), workers=workers)
    return MixedInstance.pure_covering(C, float(g.n))


def build_vertex_cover(g: Graph, workers: int | None = None) -> MixedInstance:
    """Fractional vertex cover: one covering row ``x_u + x_v >= 1`` per edge."""
    _require_edges(g, "vertex cover")
    C = TransposedOperator(IncidenceOp(g, workers))
    return MixedInstance.pure_covering(C, float(g.n))


def build_densest_feasibility(g: Graph, D: float, workers: int | None = None) -> MixedInstance:
    """Is there ``z >= 0`` with ``z_{u,e} + z_{v,e} >= 1`` and load ``<= D`` at every vertex?

    Vertices of degree zero would give empty packing rows and are left out.
    """
    _require_edges(g, "densest subgraph")
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    P = RowScaledOperator(PairOp(g, workers), 1.0 / D, keep=g.degree > 0)
    return MixedInstance(P, InterweaveOp(g.m), Mode.MIXED)


def build_generalized_matching(g: Graph, lb, ub, workers: int | None = None) -> MixedInstance:
    """Degree-bounded fractional matching ``lb <= M x <= ub``.

    Rows with ``lb(v) = 0`` are vacuous and dropped. A vertex whose lower
    bound exceeds its degree cannot be matched that often (each edge serves
    it at most once), and one whose lower bound exceeds the sum of its edges'
    capacities ``min(ub(u), ub(v))`` cannot be covered by the LP either. Both
    are recorded in ``notes`` (see :func:`trivially_infeasible`).

    Raises:
        ValueError: on ``lb > ub``, negative ``lb`` or nonpositive ``ub``.
    """
    _require_edges(g, "generalized matching")
    lb = np.broadcast_to(np.asarray(lb, dtype=np.float64), (g.n,)).copy()
    ub = np.broadcast_to(np.asarray(ub, dtype=np.float64), (g.n,)).copy()
    if np.any(lb < 0):
        raise ValueError("lower bounds must be nonnegative")
    if np.any(ub <= 0):
        raise ValueError("upper bounds must be positive")
    if np.any(lb > ub):
        bad = int(np.flatnonzero(lb > ub)[0])
        raise ValueError(f"lb > ub at vertex {bad} ({lb[bad]} > {ub[bad]})")
    M = IncidenceOp(g, workers)
    P = RowScaledOperator(M, 1.0 / ub)
    keep = lb > 0
    C = RowScaledOperator(M, np.where(keep, 1.0 / np.where(keep, lb, 1.0), 0.0), keep=keep)
    notes = []
    over_degree = np.flatnonzero(lb > g.degree)
    if over_degree.size:
        notes.append(f"trivially infeasible: {over_degree.size} vertex lower bound(s) exceed "
                     f"the degree, first vertex {over_degree[0]}")
    # Each edge carries at most min(ub(u), ub(v)), which caps what a vertex can collect.
    cap = np.zeros(g.n)
    emax = np.minimum(ub[g.rows], ub[g.cols])
    np.add.at(cap, g.rows, emax)
    np.add.at(cap, g.cols, emax)
    short = np.flatnonzero(lb > cap + 1e-12)
    if short.size:
        notes.append(f"trivially infeasible: {short.size} vertex lower bound(s) exceed the "
                     f"incident capacity, first vertex {short[0]}")
    return MixedInstance(P, C, Mode.MIXED, notes=notes)


def trivially_infeasible(inst: MixedInstance) -> bool:
    return any(n.startswith("trivially infeasible") for n in inst.notes)


@dataclass
class DensestResult:
    """``D_star`` is the load ``max(O z) / min(W z)`` of the certificate ``z``
    (normalized so ``W z >= 1``); ``history`` lists every probe."""

    status: Status
    D_star: float
    z: np.ndarray
    lower: float
    history: list = field(default_factory=list)
    iterations: int = 0
    search_evaluations: int = 0
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)


def _densest_certificate(g: Graph, z: np.ndarray) -> tuple[float, np.ndarray]:
    cover = z[0::2] + z[1::2]
    z = z / np.min(cover)
    load = PairOp(g).apply(z)
    return float(np.max(load)), z


def solve_densest(g: Graph, cfg: SolverConfig | None = None, bracket: float | None = None,
                  workers: int | None = None) -> DensestResult:
    """Approximate the densest-subgraph LP by searching over the load bound ``D``.

    The optimum lies in ``[m / n, max_degree / 2]`` (the whole-graph density,
    and the load of ``z = 1/2``). Probes move up geometrically from the lower
    end until one is feasible, then bisect until ``hi / lo <= 1 + bracket``
    (default ``eps / 2``). Each probe runs at a tolerance that composes with
    the bracket, so ``lower <= opt <= D_star <= (1 + eps) * opt``.
    """
    cfg = cfg or SolverConfig()
    _require_edges(g, "densest subgraph")
    bracket = cfg.epsilon / 2.0 if bracket is None else bracket
    inner = cfg.replace(epsilon=composed_epsilon(cfg.epsilon, bracket))
    t0 = time.perf_counter()
    z_best = np.full(2 * g.m, 0.5)
    D_star = float(np.max(g.degree)) / 2.0
    lo = g.m / g.n
    hi = D_star
    history: list[dict] = []
    iters = evals = 0
    timings: dict = {}
    status = Status.FEASIBLE
    step_up = 1.0 + bracket
    found = False
    while hi > lo * (1.0 + bracket):
        D = min(lo * step_up, math.sqrt(lo * hi)) if not found else math.sqrt(lo * hi)
        res = solve_feasibility(build_densest_feasibility(g, D, workers), inner)
        iters += res.iterations
        evals += res.search_evaluations
        for k, v in res.timings.items():
            timings[k] = timings.get(k, 0.0) + v
        entry = {"D": D, "status": res.status.value, "iterations": res.iterations}
        if res.status is Status.FEASIBLE:
            found = True
            val, z = _densest_certificate(g, res.x)
            entry["certificate"] = val
            if val < D_star:
                D_star, z_best = val, z
            hi = D
        else:
            if res.status is Status.ITER_LIMIT:
                status = Status.ITER_LIMIT
            lo = D
            step_up *= 2.0
        history.append(entry)
    return DensestResult(status, D_star, z_best, lo, history, iters, evals,
                         time.perf_counter() - t0, timings)


@dataclass
class ProblemResult:
    kind: ProblemKind
    status: Status
    value: float | None
    x: np.ndarray | None
    iterations: int
    search_evaluations: int
    wall_time: float
    timings: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def solve_problem(spec: ProblemSpec, cfg: SolverConfig | None = None,
                  workers: int | None = None) -> ProblemResult:
    """Build and solve ``spec``; ``value`` is the LP objective (or ``D_star``)."""
    cfg = cfg or SolverConfig()
    kind, g = spec.kind, spec.graph
    if kind is not ProblemKind.FEAS and g is None:
        raise ValueError(f"problem {kind.value} needs a graph")
    if kind in (ProblemKind.MATCH, ProblemKind.BMATCH):
        inst = (build_bipartite_matching if kind is ProblemKind.BMATCH else build_matching)(g, workers)
        r = solve_pure_packing(inst.P, cfg)
        return ProblemResult(kind, r.status, r.value, r.x, r.iterations, r.search_evaluations,
                             r.wall_time, r.timings,
                             {"lower": r.lower, "upper": r.upper, "probes": r.probes})
    if kind in (ProblemKind.DOMSET, ProblemKind.VCOVER):
        inst = (build_dominating_set if kind is ProblemKind.DOMSET else build_vertex_cover)(g, workers)
        r = solve_pure_covering(inst.C, cfg)
        return ProblemResult(kind, r.status, r.value, r.x, r.iterations, r.search_evaluations,
                             r.wall_time, r.timings,
                             {"lower": r.lower, "upper": r.upper, "probes": r.probes})
    if kind is ProblemKind.DENSESUB:
        r = solve_densest(g, cfg, workers=workers)
        return ProblemResult(kind, r.status, r.D_star, r.z, r.iterations, r.search_evaluations,
                             r.wall_time, r.timings, {"lower": r.lower, "history": r.history})
    if kind is ProblemKind.GENMATCH:
        if spec.lb is None or spec.ub is None:
            raise ValueError("genmatch needs lb and ub")
        inst = build_generalized_matching(g, spec.lb, spec.ub, workers)
    else:
        if spec.instance is None:
            raise ValueError("feas needs an instance")
        inst = spec.instance
    if trivially_infeasible(inst):
        return ProblemResult(kind, Status.INFEASIBLE, None, None, 0, 0, 0.0, {},
                             {"notes": list(inst.notes)})
    if inst.C.rows == 0:
        x = np.zeros(inst.n)
        return ProblemResult(kind, Status.FEASIBLE, 0.0, x, 0, 0, 0.0, {},
                             {"notes": list(inst.notes) + ["no covering rows; x = 0 is feasible"]})
    r = solve_feasibility(inst, cfg)
    return ProblemResult(kind, r.status, float(r.x.sum()), r.x, r.iterations,
                         r.search_evaluations, r.wall_time, r.timings,
                         {"max_packing": r.max_packing, "min_covering": r.min_covering,
                          "notes": list(inst.notes)})
