"""Approximate the densest-subgraph value of a graph with a planted dense
block and compare it with the density of the block itself.

Run: python3 demos/densest_subgraph.py
"""

import numpy as np

from mwulp import Graph, SolverConfig, solve_densest
from mwulp.generators import erdos_renyi

base = erdos_renyi(400, 800, seed=1)
block = [(u, v) for u in range(20) for v in range(u + 1, 20) if (u * 7 + v) % 3]
edges = np.vstack([np.column_stack([base.rows, base.cols]), np.array(block)])
g = Graph.from_edges(base.n, edges)

r = solve_densest(g, SolverConfig(epsilon=0.1))
sub = g.adjacency()[:20, :20]
print(f"graph: n={g.n} m={g.m}")
print(f"planted block density: {sub.nnz / 2 / 20:.3f}")
print(f"estimated densest value: {r.D_star:.3f} (lower bound {r.lower:.3f}) "
      f"after {len(r.history)} feasibility probes, {r.wall_time:.1f} s")
