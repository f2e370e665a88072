"""Matrix-free vertex-edge operators over a :class:`~mwulp.sparse.Graph`.

* incidence ``M`` (n x m): ``M[u, e] = 1`` iff ``u`` is an endpoint of ``e``;
* vertex-edge pair ``O`` (n x 2m): ``O[r, 2e] = O[c, 2e + 1] = 1`` for ``e = (r, c)``;
* interweaved identity ``W`` (m x 2m): ``W[e, 2e] = W[e, 2e + 1] = 1``.

None of them stores anything beyond the graph's ``(r, c, e)`` arrays.

Forward products (edge -> vertex) are computed in two phases so that each
worker owns a contiguous vertex range: first the edges are walked in
row-major order accumulating into ``y[r]``, then in column-major order
accumulating into ``y[c]``. Every output entry is summed in a fixed order,
so results are bit-identical for any worker count.
"""

from __future__ import annotations

import numpy as np

from mwulp._parallel import balanced_bounds, even_bounds, resolve_workers, run_ranges
from mwulp.model import LinearOperator
from mwulp.sparse import CooMatrix, Graph

__all__ = [
    "incidence_apply",
    "incidence_apply_t",
    "pair_apply",
    "pair_apply_t",
    "interweave_apply",
    "interweave_apply_t",
    "IncidenceOp",
    "PairOp",
    "InterweaveOp",
    "incidence_matrix",
    "pair_matrix",
    "interweave_matrix",
]


def _vec(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise ValueError(f"dimension mismatch: expected vector of length {n}, got {x.shape}")
    return x


def _two_phase(g: Graph, x_row: np.ndarray, x_col: np.ndarray, workers: int | None) -> np.ndarray:
    """``y[r] += x_row[e]`` and ``y[c] += x_col[e]`` over all edges ``(r, c, e)``."""
    y = np.zeros(g.n)
    if g.m == 0:
        return y
    w = resolve_workers(workers)
    bounds = balanced_bounds(g._vertex_work, w)

    def rows_phase(v0: int, v1: int) -> None:
        s, t = g.row_ptr[v0], g.row_ptr[v1]
        if t > s:
            y[v0:v1] = np.bincount(g.rows[s:t] - v0, weights=x_row[s:t], minlength=v1 - v0)

    def cols_phase(v0: int, v1: int) -> None:
        s, t = g.col_ptr[v0], g.col_ptr[v1]
        if t > s:
            y[v0:v1] += np.bincount(g.cols_sorted[s:t] - v0,
                                    weights=x_col[g.col_perm[s:t]], minlength=v1 - v0)

    run_ranges(rows_phase, bounds, w)
    run_ranges(cols_phase, bounds, w)
    return y


def incidence_apply(g: Graph, x, workers: int | None = None) -> np.ndarray:
    """``y = M x``: ``y[v]`` sums ``x[e]`` over edges incident to ``v``."""
    x = _vec(x, g.m)
    return _two_phase(g, x, x, workers)


def incidence_apply_t(g: Graph, x, workers: int | None = None) -> np.ndarray:
    """``y = M^T x``: ``y[e] = x[r] + x[c]``."""
    x = _vec(x, g.n)
    y = np.empty(g.m)
    w = resolve_workers(workers)

    def work(e0: int, e1: int) -> None:
        np.add(x[g.rows[e0:e1]], x[g.cols[e0:e1]], out=y[e0:e1])

    run_ranges(work, even_bounds(g.m, w), w)
    return y


def pair_apply(g: Graph, x, workers: int | None = None) -> np.ndarray:
    """``y = O x``: ``y[r] += x[2e]``, ``y[c] += x[2e + 1]``."""
    x = _vec(x, 2 * g.m)
    return _two_phase(g, x[0::2], x[1::2], workers)


def pair_apply_t(g: Graph, x, workers: int | None = None) -> np.ndarray:
    """``y = O^T x``: ``y[2e] = x[r]``, ``y[2e + 1] = x[c]``."""
    x = _vec(x, g.n)
    y = np.empty(2 * g.m)
    w = resolve_workers(workers)

    def work(e0: int, e1: int) -> None:
        y[2 * e0:2 * e1:2] = x[g.rows[e0:e1]]
        y[2 * e0 + 1:2 * e1:2] = x[g.cols[e0:e1]]

    run_ranges(work, even_bounds(g.m, w), w)
    return y


def interweave_apply(x, m: int | None = None) -> np.ndarray:
    """``y = W x``: ``y[e] = x[2e] + x[2e + 1]``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size % 2 or (m is not None and x.size != 2 * m):
        raise ValueError(f"dimension mismatch: expected vector of length 2m, got {x.shape}")
    return x[0::2] + x[1::2]


def interweave_apply_t(x, m: int | None = None) -> np.ndarray:
    """``y = W^T x``: ``y[2e] = y[2e + 1] = x[e]``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or (m is not None and x.size != m):
        raise ValueError(f"dimension mismatch: expected vector of length m, got {x.shape}")
    return np.repeat(x, 2)


def incidence_matrix(g: Graph) -> CooMatrix:
    e = np.arange(g.m)
    return CooMatrix((g.n, g.m), np.concatenate((g.rows, g.cols)),
                     np.concatenate((e, e)), np.ones(2 * g.m))


def pair_matrix(g: Graph) -> CooMatrix:
    e = np.arange(g.m)
    return CooMatrix((g.n, 2 * g.m), np.concatenate((g.rows, g.cols)),
                     np.concatenate((2 * e, 2 * e + 1)), np.ones(2 * g.m))


def interweave_matrix(m: int) -> CooMatrix:
    e = np.arange(m)
    return CooMatrix((m, 2 * m), np.repeat(e, 2), np.arange(2 * m), np.ones(2 * m))


def _pick(a: np.ndarray, b: np.ndarray, how: str) -> np.ndarray:
    if how == "max":
        return np.maximum(a, b)
    lo = np.minimum(np.where(a > 0, a, np.inf), np.where(b > 0, b, np.inf))
    return np.where(np.isinf(lo), 0.0, lo)


class IncidenceOp(LinearOperator):
    """Implicit vertex-edge incidence matrix ``M`` (n x m)."""

    def __init__(self, graph: Graph, workers: int | None = None):
        self.graph = graph
        self.shape = (graph.n, graph.m)
        self.workers = workers

    def apply(self, x):
        return incidence_apply(self.graph, x, self.workers)

    def apply_t(self, x):
        return incidence_apply_t(self.graph, x, self.workers)

    def col_inf_norms(self):
        return np.ones(self.graph.m)

    def col_min_positive(self):
        return np.ones(self.graph.m)

    def _col_reduce(self, row_weights, how):
        if row_weights is None:
            return np.ones(self.graph.m)
        g = self.graph
        return _pick(row_weights[g.rows], row_weights[g.cols], how)

    def _row_reduce(self, col_weights, how):
        """Column reduction of ``M^T`` (per vertex over incident edges)."""
        g = self.graph
        w = np.ones(g.m) if col_weights is None else np.asarray(col_weights, dtype=np.float64)
        pos = w > 0
        if how == "max":
            out = np.zeros(g.n)
            np.maximum.at(out, g.rows[pos], w[pos])
            np.maximum.at(out, g.cols[pos], w[pos])
            return out
        out = np.full(g.n, np.inf)
        np.minimum.at(out, g.rows[pos], w[pos])
        np.minimum.at(out, g.cols[pos], w[pos])
        out[np.isinf(out)] = 0.0
        return out

    def to_coo(self):
        return incidence_matrix(self.graph)


class PairOp(LinearOperator):
    """Implicit vertex-edge pair matrix ``O`` (n x 2m)."""

    def __init__(self, graph: Graph, workers: int | None = None):
        self.graph = graph
        self.shape = (graph.n, 2 * graph.m)
        self.workers = workers

    def apply(self, x):
        return pair_apply(self.graph, x, self.workers)

    def apply_t(self, x):
        return pair_apply_t(self.graph, x, self.workers)

    def col_inf_norms(self):
        return np.ones(2 * self.graph.m)

    def col_min_positive(self):
        return np.ones(2 * self.graph.m)

    def _col_reduce(self, row_weights, how):
        if row_weights is None:
            return np.ones(2 * self.graph.m)
        g = self.graph
        out = np.empty(2 * g.m)
        out[0::2] = row_weights[g.rows]
        out[1::2] = row_weights[g.cols]
        return np.where(out > 0, out, 0.0)

    def to_coo(self):
        return pair_matrix(self.graph)


class InterweaveOp(LinearOperator):
    """Implicit interweaved identity ``W`` (m x 2m)."""

    def __init__(self, m: int):
        self.m = int(m)
        self.shape = (self.m, 2 * self.m)

    def apply(self, x):
        return interweave_apply(x, self.m)

    def apply_t(self, x):
        return interweave_apply_t(x, self.m)

    def col_inf_norms(self):
        return np.ones(2 * self.m)

    def col_min_positive(self):
        return np.ones(2 * self.m)

    def _col_reduce(self, row_weights, how):
        if row_weights is None:
            return np.ones(2 * self.m)
        return np.repeat(np.where(row_weights > 0, row_weights, 0.0), 2)

    def to_coo(self):
        return interweave_matrix(self.m)
