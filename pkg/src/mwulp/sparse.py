"""Graph storage, Matrix Market I/O and the CSB sparse format.

The :class:`Graph` keeps every undirected edge once as ``(r, c, e)`` with
``r < c``; edge identifiers ``e`` follow row-major order, and a column-major
permutation is materialized once so that implicit operators can traverse the
edge list in either order without sorting per call.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from mwulp._parallel import balanced_bounds, resolve_workers, run_ranges

log = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "CooMatrix",
    "CsbMatrix",
    "MatrixMarketError",
    "from_matrix_market",
    "read_biadjacency",
    "write_matrix_market",
    "build_csb",
    "spmv",
    "spmv_t",
    "DEFAULT_TILE",
]

# 2048 + 2048 doubles = 32 KB: one tile's input and output slices fit in L1.
DEFAULT_TILE = (2048, 2048)


class MatrixMarketError(ValueError):
    """Raised for unreadable or unsupported Matrix Market input."""


class Graph:
    """Undirected simple graph with stable edge identifiers.

    Attributes:
        n: number of vertices.
        m: number of edges.
        rows, cols: endpoint arrays of length ``m`` with ``rows[e] < cols[e]``,
            sorted lexicographically (row-major), so ``e`` is the edge id.
        degree: per-vertex degree.
        row_ptr: CSR pointer, edges with ``rows == v`` are
            ``row_ptr[v]:row_ptr[v + 1]``.
        col_perm: edge ids in column-major order.
        col_ptr: pointer into ``col_perm`` by column vertex.
        n_left: size of the left partition for bipartite graphs, else None.
        dropped_self_loops, dropped_duplicates: cleanup counts at build time.
    """

    def __init__(self, n: int, rows, cols, *, n_left: int | None = None,
                 dropped_self_loops: int = 0, dropped_duplicates: int = 0):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.shape != cols.shape or rows.ndim != 1:
            raise ValueError("rows and cols must be 1-D arrays of equal length")
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        if rows.size:
            if rows.min() < 0 or cols.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(rows >= cols):
                raise ValueError("edges must satisfy r < c (no self-loops)")
            key = rows * n + cols
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted row-major without duplicates")
        self.n = int(n)
        self.rows = rows
        self.cols = cols
        self.m = int(rows.size)
        self.n_left = n_left
        self.dropped_self_loops = dropped_self_loops
        self.dropped_duplicates = dropped_duplicates

        self.row_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.n), out=self.row_ptr[1:])
        self.col_perm = np.lexsort((rows, cols)).astype(np.int64)
        self.col_ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=self.n), out=self.col_ptr[1:])
        self.cols_sorted = cols[self.col_perm]
        self.degree = np.bincount(rows, minlength=self.n) + np.bincount(cols, minlength=self.n)
        # vertex-range bounds balanced by incident edge count, reused per call
        self._vertex_work = self.row_ptr + self.col_ptr

    @classmethod
    def from_edges(cls, n: int, edges, *, drop_self_loops: bool = True,
                   n_left: int | None = None) -> "Graph":
        """Build a graph from arbitrary endpoint pairs.

        Pairs are treated as undirected, duplicates merged. Self-loops are
        dropped (and counted) when ``drop_self_loops`` is set, otherwise they
        raise.
        """
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        u, v = arr[:, 0], arr[:, 1]
        if arr.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise ValueError("edge endpoint out of range")
        loops = u == v
        n_loops = int(loops.sum())
        if n_loops and not drop_self_loops:
            raise ValueError(f"graph contains {n_loops} self-loop(s)")
        u, v = u[~loops], v[~loops]
        r, c = np.minimum(u, v), np.maximum(u, v)
        key = np.unique(r * max(n, 1) + c)
        n_dups = int(r.size - key.size)
        r, c = key // max(n, 1), key % max(n, 1)
        if n_loops:
            log.warning("dropped %d self-loop(s)", n_loops)
        return cls(n, r, c, n_left=n_left, dropped_self_loops=n_loops,
                   dropped_duplicates=n_dups)

    @property
    def edges(self) -> np.ndarray:
        """``(m, 3)`` array of ``(r, c, e)`` triplets."""
        return np.column_stack((self.rows, self.cols, np.arange(self.m)))

    def is_bipartite_split(self) -> bool:
        if self.n_left is None:
            return False
        return bool(np.all((self.rows < self.n_left) & (self.cols >= self.n_left)))

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix as scipy CSR."""
        data = np.ones(2 * self.m)
        r = np.concatenate((self.rows, self.cols))
        c = np.concatenate((self.cols, self.rows))
        return sp.csr_matrix((data, (r, c)), shape=(self.n, self.n))

    def __repr__(self) -> str:
        extra = f", n_left={self.n_left}" if self.n_left is not None else ""
        return f"Graph(n={self.n}, m={self.m}{extra})"


def _read_coo(path) -> sp.coo_matrix:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        info = scipy.io.mminfo(path)
    except Exception as exc:  # scipy raises a mix of ValueError/OSError
        raise MatrixMarketError(f"{path}: malformed header ({exc})") from exc
    if info[3] != "coordinate":
        raise MatrixMarketError(f"{path}: only coordinate format is supported")
    try:
        mat = scipy.io.mmread(path)
    except Exception as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    return sp.coo_matrix(mat)


def from_matrix_market(path, drop_self_loops: bool = True, symmetrize: bool = True) -> Graph:
    """Read an undirected graph from a Matrix Market coordinate file.

    Values of ``real`` files are discarded. With ``symmetrize`` the entries
    ``(i, j)`` and ``(j, i)`` denote the same edge; without it only the upper
    triangle (``i < j``) of a general file is used. Symmetric files are always
    read as undirected.
    """
    coo = _read_coo(path)
    nr, nc = coo.shape
    if nr != nc:
        raise MatrixMarketError(f"{path}: adjacency matrix must be square, got {nr}x{nc}")
    if nr == 0:
        raise MatrixMarketError(f"{path}: graph has no vertices")
    r, c = coo.row.astype(np.int64), coo.col.astype(np.int64)
    if not symmetrize and scipy.io.mminfo(path)[5] == "general":
        keep = (r < c) | (r == c)
        r, c = r[keep], c[keep]
    return Graph.from_edges(nr, np.column_stack((r, c)), drop_self_loops=drop_self_loops)


def read_biadjacency(path) -> Graph:
    """Read a (possibly rectangular) matrix as the biadjacency matrix of a
    bipartite graph: row ``i`` is left vertex ``i``, column ``j`` is right
    vertex ``n_left + j``."""
    coo = _read_coo(path)
    n_left, n_right = coo.shape
    if n_left == 0 or n_right == 0 or coo.nnz == 0:
        raise MatrixMarketError(f"{path}: empty graph")
    r = coo.row.astype(np.int64)
    c = coo.col.astype(np.int64) + n_left
    return Graph.from_edges(n_left + n_right, np.column_stack((r, c)), n_left=n_left)


def write_matrix_market(graph: Graph, path, comment: str = "") -> None:
    """Write the graph as a symmetric pattern matrix (lower triangle)."""
    mat = sp.coo_matrix((np.ones(graph.m), (graph.cols, graph.rows)),
                        shape=(graph.n, graph.n))
    scipy.io.mmwrite(path, mat, comment=comment, field="pattern", symmetry="symmetric")


@dataclass
class CooMatrix:
    """Nonnegative sparse matrix in coordinate form."""

    shape: tuple[int, int]
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        self.shape = (int(self.shape[0]), int(self.shape[1]))
        self.row = np.asarray(self.row, dtype=np.int64).ravel()
        self.col = np.asarray(self.col, dtype=np.int64).ravel()
        self.val = np.asarray(self.val, dtype=np.float64).ravel()
        if not (self.row.size == self.col.size == self.val.size):
            raise ValueError("row, col and val must have equal length")
        if self.row.size:
            if self.row.min() < 0 or self.row.max() >= self.shape[0]:
                raise ValueError("row index out of range")
            if self.col.min() < 0 or self.col.max() >= self.shape[1]:
                raise ValueError("column index out of range")
        if np.any(self.val < 0):
            raise ValueError("positive LP matrices must be entrywise nonnegative")

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    @classmethod
    def from_dense(cls, a) -> "CooMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        r, c = np.nonzero(a)
        return cls(a.shape, r, c, a[r, c])

    @classmethod
    def from_scipy(cls, a) -> "CooMatrix":
        a = sp.coo_matrix(a)
        a.sum_duplicates()
        return cls(a.shape, a.row, a.col, a.data)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.val, (self.row, self.col)), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def transpose(self) -> "CooMatrix":
        return CooMatrix((self.shape[1], self.shape[0]), self.col, self.row, self.val)

    def triplets(self) -> set[tuple[int, int, float]]:
        return set(zip(self.row.tolist(), self.col.tolist(), self.val.tolist()))


@dataclass
class CsbMatrix:
    """Compressed Sparse Blocks.

    The matrix is cut into ``tile[0] x tile[1]`` tiles. Tiles are stored in
    row-major tile order; inside a tile the nonzeros are kept column-major as
    tile-local coordinates (16-bit when the tile dims allow it).
    ``tile_ptr[t]:tile_ptr[t + 1]`` are the nonzeros of tile ``t`` where
    ``t = row_block * n_col_blocks + col_block``. ``t_perm`` lists the
    nonzeros grouped by column block (``t_tile`` holds their tile ids), and
    ``cb_ptr`` indexes into it.
    """

    shape: tuple[int, int]
    tile: tuple[int, int]
    tile_ptr: np.ndarray
    local_row: np.ndarray
    local_col: np.ndarray
    val: np.ndarray
    t_perm: np.ndarray = field(repr=False)
    t_tile: np.ndarray = field(repr=False)
    cb_ptr: np.ndarray = field(repr=False)

    @property
    def n_row_blocks(self) -> int:
        return -(-self.shape[0] // self.tile[0]) if self.shape[0] else 0

    @property
    def n_col_blocks(self) -> int:
        return -(-self.shape[1] // self.tile[1]) if self.shape[1] else 0

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    def nonempty_tiles(self) -> int:
        return int(np.count_nonzero(np.diff(self.tile_ptr)))

    def _block_coords(self):
        counts = np.diff(self.tile_ptr)
        tiles = np.repeat(np.arange(counts.size), counts)
        ncb = max(self.n_col_blocks, 1)
        return tiles // ncb, tiles % ncb

    def to_coo(self) -> CooMatrix:
        rb, cb = self._block_coords()
        row = rb * self.tile[0] + self.local_row
        col = cb * self.tile[1] + self.local_col
        return CooMatrix(self.shape, row, col, self.val.copy())


def _local_dtype(extent: int):
    return np.uint16 if extent <= np.iinfo(np.uint16).max + 1 else np.uint32


def build_csb(coo: CooMatrix, tile: tuple[int, int] = DEFAULT_TILE) -> CsbMatrix:
    """Repack a COO matrix into CSB with the given tile dims."""
    tr, tc = int(tile[0]), int(tile[1])
    if tr < 1 or tc < 1:
        raise ValueError("tile dims must be >= 1")
    nrow, ncol = coo.shape
    nrb = -(-nrow // tr) if nrow else 0
    ncb = -(-ncol // tc) if ncol else 0
    rb, cb = coo.row // tr, coo.col // tc
    lr, lc = coo.row - rb * tr, coo.col - cb * tc
    tile_id = rb * ncb + cb
    # row-major tiles, column-major inside a tile
    order = np.lexsort((lr, lc, tile_id))
    tile_id = tile_id[order]
    tile_ptr = np.zeros(nrb * ncb + 1, dtype=np.int64)
    np.cumsum(np.bincount(tile_id, minlength=nrb * ncb), out=tile_ptr[1:])
    local_row = lr[order].astype(_local_dtype(tr))
    local_col = lc[order].astype(_local_dtype(tc))
    val = coo.val[order]
    cb_sorted = cb[order]
    t_perm = np.argsort(cb_sorted, kind="stable").astype(np.int64)
    cb_ptr = np.zeros(ncb + 1, dtype=np.int64)
    np.cumsum(np.bincount(cb_sorted, minlength=ncb), out=cb_ptr[1:])
    t_tile = tile_id[t_perm].astype(np.int64)
    return CsbMatrix((nrow, ncol), (tr, tc), tile_ptr, local_row, local_col, val,
                     t_perm, t_tile, cb_ptr)


def spmv(a: CsbMatrix, x, workers: int | None = None) -> np.ndarray:
    """``y = A @ x``, parallel over row blocks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.shape[1],):
        raise ValueError(f"dimension mismatch: A is {a.shape}, x has shape {x.shape}")
    y = np.zeros(a.shape[0])
    ncb = a.n_col_blocks
    if a.nnz == 0:
        return y
    tr, tc = a.tile
    rb_ptr = a.tile_ptr[::ncb]
    w = resolve_workers(workers)

    def work(b0: int, b1: int) -> None:
        s, t = rb_ptr[b0], rb_ptr[b1]
        if s == t:
            return
        tiles = np.repeat(np.arange(b0 * ncb, b1 * ncb), np.diff(a.tile_ptr[b0 * ncb:b1 * ncb + 1]))
        rows = (tiles // ncb - b0) * tr + a.local_row[s:t]
        cols = (tiles % ncb) * tc + a.local_col[s:t]
        r0, r1 = b0 * tr, min(b1 * tr, a.shape[0])
        y[r0:r1] = np.bincount(rows, weights=a.val[s:t] * x[cols], minlength=r1 - r0)

    run_ranges(work, balanced_bounds(rb_ptr, w), w)
    return y


def spmv_t(a: CsbMatrix, x, workers: int | None = None) -> np.ndarray:
    """``y = A.T @ x``, parallel over column blocks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.shape[0],):
        raise ValueError(f"dimension mismatch: A is {a.shape}, x has shape {x.shape}")
    y = np.zeros(a.shape[1])
    if a.nnz == 0:
        return y
    tr, tc = a.tile
    ncb = a.n_col_blocks
    w = resolve_workers(workers)

    def work(c0: int, c1: int) -> None:
        s, t = a.cb_ptr[c0], a.cb_ptr[c1]
        if s == t:
            return
        idx = a.t_perm[s:t]
        tiles = a.t_tile[s:t]
        rows = (tiles // ncb) * tr + a.local_row[idx]
        cols = (tiles % ncb - c0) * tc + a.local_col[idx]
        lo, hi = c0 * tc, min(c1 * tc, a.shape[1])
        y[lo:hi] = np.bincount(cols, weights=a.val[idx] * x[rows], minlength=hi - lo)

    run_ranges(work, balanced_bounds(a.cb_ptr, w), w)
    return y
