"""Seeded random graphs for benchmarks and tests."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from mwulp.sparse import Graph

__all__ = ["erdos_renyi", "random_geometric", "random_bipartite", "rgg_radius", "GENERATORS"]


def _sample_pairs(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """``m`` distinct unordered pairs ``u < v`` drawn uniformly from ``n`` vertices."""
    m = min(m, n * (n - 1) // 2)
    keys = np.zeros(0, dtype=np.int64)
    while keys.size < m:
        u = rng.integers(0, n, size=2 * (m - keys.size) + 16)
        v = rng.integers(0, n, size=u.size)
        fresh = np.minimum(u, v) * n + np.maximum(u, v)
        keys = np.concatenate((keys, fresh[u != v]))
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)]
    keys = keys[:m]
    return np.column_stack((keys // n, keys % n))


def erdos_renyi(n: int, m: int, seed: int = 0) -> Graph:
    """G(n, m): ``m`` edges chosen uniformly without replacement."""
    if n < 2:
        return Graph.from_edges(n, np.zeros((0, 2), dtype=np.int64))
    return Graph.from_edges(n, _sample_pairs(np.random.default_rng(seed), n, m))


def rgg_radius(n: int, avg_degree: float) -> float:
    """Radius giving roughly ``avg_degree`` neighbours in the unit square."""
    return float(np.sqrt(avg_degree / (np.pi * max(n - 1, 1))))


def random_geometric(n: int, radius: float | None = None, seed: int = 0,
                     avg_degree: float = 8.0) -> Graph:
    """Points uniform in the unit square, joined when closer than ``radius``."""
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    r = rgg_radius(n, avg_degree) if radius is None else radius
    pairs = cKDTree(pts).query_pairs(r, output_type="ndarray")
    return Graph.from_edges(n, pairs.astype(np.int64))


def random_bipartite(n_left: int, n_right: int, m: int, seed: int = 0) -> Graph:
    """``m`` distinct edges between a left part ``[0, n_left)`` and a right part."""
    rng = np.random.default_rng(seed)
    total = n_left * n_right
    m = min(m, total)
    codes = rng.choice(total, size=m, replace=False)
    edges = np.column_stack((codes // n_right, n_left + codes % n_right))
    return Graph.from_edges(n_left + n_right, edges, n_left=n_left)


GENERATORS = {"er": erdos_renyi, "rgg": random_geometric, "bip": random_bipartite}
