"""Solve vertex cover and dominating set on small graphs, then check each
answer against an exact LP value and re-verify the returned vector.

Run: python3 demos/certify_small_graphs.py
"""

import networkx as nx
from mwulp import Graph, ProblemKind, ProblemSpec, build_dominating_set, build_vertex_cover
from mwulp import solve_problem, verify_solution
from mwulp.oracle import dominating_set_lp, half_integral_vcover, lp_vertex_enumeration

EPS = 0.1
cases = {"petersen": nx.petersen_graph(), "cycle7": nx.cycle_graph(7),
         "wheel6": nx.wheel_graph(6), "star5": nx.star_graph(5)}

for name, gx in cases.items():
    g = Graph.from_edges(gx.number_of_nodes(), list(gx.edges()))
    vc = solve_problem(ProblemSpec(ProblemKind.VCOVER, graph=g))
    ds = solve_problem(ProblemSpec(ProblemKind.DOMSET, graph=g))
    vc_ok = verify_solution(build_vertex_cover(g), vc.x, EPS).ok
    ds_ok = verify_solution(build_dominating_set(g), ds.x, EPS).ok
    vc_exact = half_integral_vcover(g)
    ds_exact = lp_vertex_enumeration(dominating_set_lp(g), budget=10**7).value
    print(f"{name:9} vcover {vc.value:6.3f} (exact {vc_exact:5.2f}, ratio {vc.value / vc_exact:5.3f},"
          f" verified {vc_ok})   domset {ds.value:6.3f} (exact {ds_exact:5.2f},"
          f" ratio {ds.value / ds_exact:5.3f}, verified {ds_ok})")
