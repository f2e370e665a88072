"""Exact reference solvers for small instances.

These are deliberately simple and independent of the MWU machinery: LP
optima by enumerating basic solutions, maximum bipartite matching by
Hopcroft-Karp, densest subgraph and the vertex-cover LP by exhaustive search.
All of them refuse inputs beyond their size bounds with
:class:`OracleSizeError` rather than truncating.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from mwulp.model import MixedInstance
from mwulp.sparse import Graph

__all__ = [
    "OracleSizeError",
    "DenseLp",
    "LpResult",
    "lp_vertex_enumeration",
    "hopcroft_karp",
    "augmenting_path_matching",
    "brute_densest",
    "half_integral_vcover",
    "VerifyReport",
    "verify_solution",
    "matching_lp",
    "vertex_cover_lp",
    "dominating_set_lp",
]

MAX_LP_ROWS = 24
MAX_LP_COLS = 24
DEFAULT_CANDIDATE_BUDGET = 20_000_000
MAX_DENSEST_N = 15
MAX_HALF_INTEGRAL_N = 14


class OracleSizeError(ValueError):
    """Input exceeds an oracle's enumeration bound."""


@dataclass
class DenseLp:
    """``sense c^T x`` subject to ``A_le x <= b_le``, ``A_ge x >= b_ge``, ``x >= 0``.

    ``sense`` is ``"max"``, ``"min"`` or ``"feas"`` (objective ignored).
    """

    c: np.ndarray
    A_le: np.ndarray | None = None
    b_le: np.ndarray | None = None
    A_ge: np.ndarray | None = None
    b_ge: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        n = self.c.size
        for a, b in (("A_le", "b_le"), ("A_ge", "b_ge")):
            A = getattr(self, a)
            if A is None:
                A = np.zeros((0, n))
                setattr(self, b, np.zeros(0))
            A = np.atleast_2d(np.asarray(A, dtype=np.float64))
            bb = np.asarray(getattr(self, b), dtype=np.float64).reshape(-1)
            if A.shape != (bb.size, n):
                raise ValueError(f"{a} has shape {A.shape}, expected ({bb.size}, {n})")
            setattr(self, a, A)
            setattr(self, b, bb)
        if self.sense not in ("max", "min", "feas"):
            raise ValueError(f"unknown sense {self.sense!r}")

    @property
    def n_rows(self) -> int:
        return self.A_le.shape[0] + self.A_ge.shape[0]

    @property
    def n_cols(self) -> int:
        return self.c.size

    def as_ge(self) -> tuple[np.ndarray, np.ndarray]:
        """All rows as ``G x >= h``."""
        return np.vstack((-self.A_le, self.A_ge)), np.concatenate((-self.b_le, self.b_ge))


@dataclass
class LpResult:
    status: str
    value: float | None
    x: np.ndarray | None
    candidates: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def _candidate_count(n_rows: int, n_cols: int) -> int:
    return sum(math.comb(n_cols, k) * math.comb(n_rows, k) for k in range(min(n_rows, n_cols) + 1))


def _solve_batch(G, h, F, rows, tol):
    """Solve ``G[R, F] x_F = h[R]`` for every tight-row set ``R`` in ``rows``."""
    k = len(F)
    sub = G[np.ix_(np.arange(G.shape[0]), F)]
    mats = sub[rows]  # (B, k, k)
    rhs = h[rows]  # (B, k)
    # |det| relative to Hadamard's bound is a scale-free singularity test.
    det = np.abs(np.linalg.det(mats))
    ok = det > tol * np.prod(np.linalg.norm(mats, axis=2), axis=1)
    if not ok.any():
        return None, None
    sol = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    full = np.zeros((sol.shape[0], G.shape[1]))
    full[:, F] = sol
    return full, ok.sum()


def lp_vertex_enumeration(lp: DenseLp, budget: int = DEFAULT_CANDIDATE_BUDGET,
                          tol: float = 1e-9, batch: int = 200_000) -> LpResult:
    """Exact LP optimum by enumerating basic solutions.

    A basic solution fixes a zero set ``Z`` of variables and ``|F|`` tight rows
    (``F`` the free variables) whose restriction to ``F`` is nonsingular. Free
    sets that leave some positive-demand ``>=`` row with no variable are
    skipped. The feasible region must be bounded in the objective direction.

    Raises:
        OracleSizeError: more than 24 rows or columns, or more candidate bases
            than ``budget``.
    """
    if lp.n_rows > MAX_LP_ROWS or lp.n_cols > MAX_LP_COLS:
        raise OracleSizeError(
            f"LP is {lp.n_rows}x{lp.n_cols}; enumeration is limited to "
            f"{MAX_LP_ROWS}x{MAX_LP_COLS}")
    G, h = lp.as_ge()
    m, n = G.shape
    total = _candidate_count(m, n)
    if total > budget:
        raise OracleSizeError(f"{total} candidate bases exceed the budget of {budget}")
    sign = {"max": -1.0, "min": 1.0, "feas": 0.0}[lp.sense]
    best_val, best_x, seen = math.inf, None, 0
    demand = h > tol
    scale = max(1.0, float(np.abs(h).max(initial=0.0)))

    def consider(xs):
        nonlocal best_val, best_x
        feas = np.all(xs >= -tol * scale, axis=1) & np.all(xs @ G.T >= h - tol * scale, axis=1)
        if not feas.any():
            return
        xs = np.maximum(xs[feas], 0.0)
        vals = sign * (xs @ lp.c)
        i = int(np.argmin(vals))
        if vals[i] < best_val - tol * max(1.0, abs(best_val) if math.isfinite(best_val) else 1.0):
            best_val, best_x = float(vals[i]), xs[i]

    if not demand.any():
        consider(np.zeros((1, n)))
    for k in range(1, min(m, n) + 1):
        for F in itertools.combinations(range(n), k):
            F = list(F)
            touched = np.any(G[:, F] != 0, axis=1)
            if np.any(demand & ~touched):
                continue
            cand_rows = np.flatnonzero(touched)
            if cand_rows.size < k:
                continue
            it = itertools.combinations(cand_rows.tolist(), k)
            while True:
                chunk = list(itertools.islice(it, batch))
                if not chunk:
                    break
                seen += len(chunk)
                xs, _ = _solve_batch(G, h, F, np.array(chunk), tol)
                if xs is not None:
                    consider(xs)
    if best_x is None:
        return LpResult("infeasible", None, None, seen)
    value = float(best_x @ lp.c)
    return LpResult("optimal", value, best_x, seen)


def matching_lp(g: Graph) -> DenseLp:
    """``max <1, x>`` s.t. ``M x <= 1``."""
    M = np.zeros((g.n, g.m))
    M[g.rows, np.arange(g.m)] = 1.0
    M[g.cols, np.arange(g.m)] = 1.0
    return DenseLp(np.ones(g.m), A_le=M, b_le=np.ones(g.n), sense="max")


def vertex_cover_lp(g: Graph) -> DenseLp:
    """``min <1, x>`` s.t. ``x_u + x_v >= 1`` per edge."""
    A = np.zeros((g.m, g.n))
    A[np.arange(g.m), g.rows] = 1.0
    A[np.arange(g.m), g.cols] = 1.0
    return DenseLp(np.ones(g.n), A_ge=A, b_ge=np.ones(g.m), sense="min")


def dominating_set_lp(g: Graph) -> DenseLp:
    """``min <1, x>`` s.t. ``(I + A) x >= 1``."""
    A = np.eye(g.n)
    A[g.rows, g.cols] = 1.0
    A[g.cols, g.rows] = 1.0
    return DenseLp(np.ones(g.n), A_ge=A, b_ge=np.ones(g.n), sense="min")


def _bipartite_sides(g: Graph) -> tuple[int, list[list[int]]]:
    """Left-side adjacency lists (right vertices renumbered from 0)."""
    if g.n_left is None:
        raise ValueError("graph carries no bipartition (n_left)")
    nl = g.n_left
    if np.any(g.rows >= nl) or np.any(g.cols < nl):
        raise ValueError("edges must join the left side to the right side")
    adj: list[list[int]] = [[] for _ in range(nl)]
    for r, c in zip(g.rows.tolist(), g.cols.tolist()):
        adj[r].append(c - nl)
    return g.n - nl, adj


def hopcroft_karp(g: Graph) -> int:
    """Maximum matching size of a bipartite graph."""
    n_right, adj = _bipartite_sides(g)
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    inf = n_left + n_right + 1
    dist = [0] * n_left

    def bfs() -> bool:
        q = deque()
        for u in range(n_left):
            dist[u] = 0 if match_l[u] < 0 else inf
            if match_l[u] < 0:
                q.append(u)
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w < 0:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u: int) -> bool:
        # Iterative DFS along the BFS layering.
        stack = [(u, iter(adj[u]))]
        path = []
        while stack:
            x, it = stack[-1]
            for v in it:
                w = match_r[v]
                if w < 0:
                    path.append((x, v))
                    for a, b in path:
                        match_l[a] = b
                        match_r[b] = a
                    return True
                if dist[w] == dist[x] + 1:
                    path.append((x, v))
                    stack.append((w, iter(adj[w])))
                    break
            else:
                dist[x] = inf
                stack.pop()
                if path:
                    path.pop()
        return False

    size = 0
    while bfs():
        for u in range(n_left):
            if match_l[u] < 0 and dfs(u):
                size += 1
    return size


def augmenting_path_matching(g: Graph) -> int:
    """Maximum bipartite matching by one augmenting-path search per left vertex."""
    n_right, adj = _bipartite_sides(g)
    match_r = [-1] * n_right

    def augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_r[v] < 0 or augment(match_r[v], seen):
                    match_r[v] = u
                    return True
        return False

    return sum(augment(u, [False] * n_right) for u in range(len(adj)))


def brute_densest(g: Graph) -> float:
    """``max_{S != {}} |E(S)| / |S|`` by exhaustive search (``n <= 15``)."""
    if g.n > MAX_DENSEST_N:
        raise OracleSizeError(f"brute_densest is limited to n <= {MAX_DENSEST_N}, got {g.n}")
    if g.n == 0:
        raise ValueError("empty graph")
    masks = np.arange(1, 1 << g.n, dtype=np.int64)
    edge_mask = (np.int64(1) << g.rows.astype(np.int64)) | (np.int64(1) << g.cols.astype(np.int64))
    inside = np.zeros(masks.size, dtype=np.int64)
    for em in edge_mask:
        inside += (masks & em) == em
    size = np.zeros(masks.size, dtype=np.int64)
    for v in range(g.n):
        size += (masks >> v) & 1
    return float(np.max(inside / size))


def half_integral_vcover(g: Graph) -> float:
    """Vertex-cover LP optimum by search over ``{0, 1/2, 1}^n`` (``n <= 14``)."""
    if g.n > MAX_HALF_INTEGRAL_N:
        raise OracleSizeError(
            f"half_integral_vcover is limited to n <= {MAX_HALF_INTEGRAL_N}, got {g.n}")
    if g.m == 0:
        return 0.0
    # Values in half units; split the vertices into a leading block (rows)
    # and a trailing block (columns) of a 2D grid to stay vectorized.
    head = g.n // 2
    tail = g.n - head

    def grid(k: int) -> np.ndarray:
        return np.array(list(itertools.product((0, 1, 2), repeat=k)), dtype=np.int8).reshape(-1, k)

    A, B = grid(head), grid(tail)
    best = np.inf
    for i in range(A.shape[0]):
        vals = np.empty((B.shape[0], g.n), dtype=np.int8)
        vals[:, :head] = A[i]
        vals[:, head:] = B
        ok = np.all(vals[:, g.rows] + vals[:, g.cols] >= 2, axis=1)
        if ok.any():
            best = min(best, int(vals[ok].sum(axis=1, dtype=np.int64).min()))
    return best / 2.0


@dataclass
class VerifyReport:
    max_packing: float
    min_covering: float
    epsilon: float
    tol: float
    checked: list[str] = field(default_factory=list)

    @property
    def packing_ok(self) -> bool:
        return "P" not in self.checked or self.max_packing <= 1.0 + self.epsilon + self.tol

    @property
    def covering_ok(self) -> bool:
        return "C" not in self.checked or self.min_covering >= 1.0 - self.tol

    @property
    def ok(self) -> bool:
        return self.packing_ok and self.covering_ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "max_packing": self.max_packing,
                "min_covering": self.min_covering, "epsilon": self.epsilon, "tol": self.tol,
                "checked": list(self.checked)}


def verify_solution(inst: MixedInstance, x, eps: float, tol: float = 1e-9) -> VerifyReport:
    """Check ``P x <= (1 + eps)`` and ``C x >= 1`` by direct evaluation.

    For pure instances only the real constraints are checked (``P`` for
    packing, ``C`` for covering); the embedded objective row is not a
    constraint of the original problem.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (inst.n,):
        raise ValueError(f"x has shape {x.shape}, instance has {inst.n} variables")
    checked = {"mixed": ["P", "C"], "pure_packing": ["P"], "pure_covering": ["C"]}[inst.mode.value]
    if np.any(x < 0):
        return VerifyReport(math.inf, -math.inf, eps, tol, checked)
    y = inst.P.apply(x) if "P" in checked else np.zeros(1)
    z = inst.C.apply(x) if "C" in checked else np.ones(1)
    return VerifyReport(float(np.max(y, initial=0.0)), float(np.min(z, initial=math.inf)),
                        eps, tol, checked)
