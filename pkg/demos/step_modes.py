"""Compare the three step-size rules on one random geometric graph.

Each problem is first solved with Newton steps to find its LP value. A single
feasibility instance is then built just inside that value and handed to each
step rule. The fixed-step rule is capped at 50x the searched rules'
iterations, since it can take far longer.

Run: python3 demos/step_modes.py [n]   (about two minutes at the default n=1000)
"""

import sys

from mwulp import MixedInstance, SolverConfig, StepMode, build_dominating_set, build_matching
from mwulp import build_vertex_cover, solve_feasibility, solve_pure_covering, solve_pure_packing
from mwulp.generators import random_geometric

EPS = 0.1
n = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
g = random_geometric(n, seed=7)
cfg = SolverConfig(epsilon=EPS)

P = build_matching(g).P
vc = build_vertex_cover(g).C
ds = build_dominating_set(g).C
instances = {
    "match": MixedInstance.pure_packing(P, 0.99 * solve_pure_packing(P, cfg).value / (1 + EPS)),
    "vcover": MixedInstance.pure_covering(vc, 1.01 * solve_pure_covering(vc, cfg).value),
    "domset": MixedInstance.pure_covering(ds, 1.01 * solve_pure_covering(ds, cfg).value),
}

print(f"graph: n={g.n} m={g.m}")
print(f"{'problem':8} {'step':9} {'status':11} {'iters':>8} {'evals':>8} {'secs':>7}")
for name, inst in instances.items():
    searched = []
    for step in (StepMode.BINARY, StepMode.NEWTON, StepMode.STANDARD):
        cap = 50 * max(searched) if step is StepMode.STANDARD else 200_000
        r = solve_feasibility(inst, cfg.replace(step_mode=step, max_iter=cap))
        searched.append(r.iterations)
        print(f"{name:8} {step.value:9} {r.status.value:11} {r.iterations:8d} "
              f"{r.search_evaluations:8d} {r.wall_time:7.2f}")
