"""Acceptance suite: one test per criterion, each printing a CRITERION line.

Set ``MWULP_ACCEPTANCE_FULL=1`` to run the exhaustive variants of the small-graph
sweeps (every connected graph on 8 vertices through MWU and vertex enumeration);
the default run covers every graph up to 7 vertices and a seeded sample on 8.
"""

import csv
import math
import os
import time
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
import scipy.sparse as sp
from conftest import make_graph, nx_to_graph, planted_instance, report_criterion
from scipy.optimize import linprog
from test_linesearch import random_inputs

from mwulp import cli, linesearch
from mwulp.generators import erdos_renyi, random_bipartite, random_geometric
from mwulp.implicit import (incidence_apply, incidence_apply_t, interweave_apply,
                            interweave_apply_t, pair_apply, pair_apply_t)
from mwulp.linesearch import SearchInputs, bang_for_buck
from mwulp.model import LinearOperator, MixedInstance, as_operator
from mwulp.oracle import (DenseLp, OracleSizeError, brute_densest, dominating_set_lp,
                          half_integral_vcover, hopcroft_karp, lp_vertex_enumeration,
                          vertex_cover_lp)
from mwulp.problems import (ProblemSpec, build_bipartite_matching, build_densest_feasibility,
                            build_dominating_set, build_generalized_matching, build_matching,
                            build_vertex_cover, solve_densest, solve_problem,
                            trivially_infeasible)
from mwulp.smooth import smax, smax_with_grad, smin, smin_with_grad
from mwulp.solver import (SolverConfig, Status, StepMode, solve_feasibility, solve_pure_covering,
                          solve_pure_packing)

EPS = 0.1
FULL = os.environ.get("MWULP_ACCEPTANCE_FULL", "") not in ("", "0")
GRAPH_FILE = Path(__file__).parent / "data" / "connected_upto8.g6"
N8_SAMPLE = 600


def _connected_graphs():
    with GRAPH_FILE.open("rb") as fh:
        graphs = [nx.from_graph6_bytes(line.strip()) for line in fh if line.strip()]
    return [g for g in graphs if g.number_of_edges() > 0]


def _small_graph_set():
    """All connected graphs up to 7 vertices plus all or a seeded sample of those on 8."""
    graphs = _connected_graphs()
    small = [g for g in graphs if g.number_of_nodes() <= 7]
    eight = [g for g in graphs if g.number_of_nodes() == 8]
    if not FULL:
        pick = np.random.default_rng(2024).choice(len(eight), size=N8_SAMPLE, replace=False)
        eight = [eight[i] for i in sorted(pick)]
    return small + eight, len(graphs)


def _highs_min(A_ge: np.ndarray) -> float:
    res = linprog(np.ones(A_ge.shape[1]), A_ub=-A_ge, b_ub=-np.ones(A_ge.shape[0]),
                  bounds=(0, None), method="highs")
    assert res.status == 0
    return float(res.fun)


def _enumeration_sample(graphs, rng_seed, limit):
    """Indices that also go through vertex enumeration (all in full mode)."""
    if FULL:
        return set(range(len(graphs)))
    small = [i for i, g in enumerate(graphs) if g.number_of_nodes() <= 7]
    eight = [i for i, g in enumerate(graphs) if g.number_of_nodes() == 8]
    rng = np.random.default_rng(rng_seed)
    return set(small) | set(rng.choice(eight, size=min(limit, len(eight)), replace=False).tolist())


# -- 1 -------------------------------------------------------------------------

def test_criterion_1_approximation_contract():
    t0 = time.perf_counter()
    worst_p, worst_c, infeasible, other = 0.0, math.inf, 0, 0
    for seed in range(100):
        inst, P, C, _ = planted_instance(seed)
        r = solve_feasibility(inst, SolverConfig(epsilon=EPS))
        if r.status is Status.INFEASIBLE:
            infeasible += 1
            continue
        if r.status is not Status.FEASIBLE:
            other += 1
            continue
        worst_p = max(worst_p, float((P @ r.x).max()))
        worst_c = min(worst_c, float((C @ r.x).min()))
    wall = time.perf_counter() - t0
    ok = (infeasible == 0 and worst_p <= 1 + EPS + 1e-9 and worst_c >= 1 - 1e-9 and wall < 60)
    report_criterion(1, ok, f"100 planted instances: max(Px)={worst_p:.6f} min(Cx)={worst_c:.6f} "
                            f"infeasible={infeasible} iter_limit={other} time={wall:.1f}s")
    assert ok


# -- 2 -------------------------------------------------------------------------

def test_criterion_2_bipartite_matching_integrality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_lo, worst_hi, bad = math.inf, 0.0, []
    for k in range(20):
        nl, nr = (int(v) for v in rng.integers(10, 101, size=2))
        m = int(rng.integers(nl + nr, 4 * (nl + nr)))
        g = random_bipartite(nl, nr, m, seed=k)
        hk = hopcroft_karp(g)
        r = solve_pure_packing(build_bipartite_matching(g).P, SolverConfig(epsilon=EPS))
        ratio = r.value / hk
        worst_lo, worst_hi = min(worst_lo, ratio), max(worst_hi, ratio)
        if not (0.9 * hk <= r.value <= 1.1 * hk) or r.status is not Status.FEASIBLE:
            bad.append(k)
    wall = time.perf_counter() - t0
    ok = not bad and wall < 60
    report_criterion(2, ok, f"20 bipartite graphs: V/HK in [{worst_lo:.4f}, {worst_hi:.4f}] "
                            f"failures={bad} time={wall:.1f}s")
    assert ok


# -- 3 -------------------------------------------------------------------------

def test_criterion_3_vertex_cover_vs_exact():
    graphs, total = _small_graph_set()
    rng = np.random.default_rng(11)
    for k in range(10):
        n = int(rng.integers(9, 15))
        m = int(rng.integers(n, n * (n - 1) // 4 + n))
        g = erdos_renyi(n, m, 100 + k)
        gx = nx.empty_graph(n)
        gx.add_edges_from(zip(g.rows.tolist(), g.cols.tolist()))
        graphs.append(gx)
    enum_idx = _enumeration_sample(graphs[:-10], 12, 150)
    worst, infeasible_x, over, cross_bad, enum_done, refused = 0.0, 0, [], [], 0, 0
    t0 = time.perf_counter()
    for i, gx in enumerate(graphs):
        g = nx_to_graph(gx)
        exact = half_integral_vcover(g)
        # cross-oracles: HiGHS on every graph, vertex enumeration where affordable
        A = vertex_cover_lp(g).A_ge
        if abs(_highs_min(A) - exact) > 1e-9:
            cross_bad.append(("highs", i))
        if i in enum_idx or i >= len(graphs) - 10:
            try:
                ev = lp_vertex_enumeration(vertex_cover_lp(g)).value
            except OracleSizeError:
                refused += 1
            else:
                enum_done += 1
                if abs(ev - exact) > 1e-9:
                    cross_bad.append(("enum", i))
        r = solve_problem(ProblemSpec("vcover", g), SolverConfig(epsilon=EPS))
        C = build_vertex_cover(g).C
        if C.apply(r.x).min() < 1 - 1e-9:
            infeasible_x += 1
        worst = max(worst, r.value / exact)
        if r.value > 1.1 * exact + 1e-12:
            over.append(i)
    wall = time.perf_counter() - t0
    ok = not over and not infeasible_x and not cross_bad
    scope = "all" if FULL else f"n<=7 all + {N8_SAMPLE} sampled n=8"
    report_criterion(3, ok, f"{len(graphs)} graphs ({scope} of {total} connected, +10 random "
                            f"n<=14): max V/OPT={worst:.4f} infeasible_x={infeasible_x} "
                            f"cross-oracle mismatches={len(cross_bad)} (HiGHS all, enumeration "
                            f"{enum_done}, {refused} over its size bounds) time={wall:.0f}s")
    assert ok, (over[:5], cross_bad[:5])


# -- 4 -------------------------------------------------------------------------

def test_criterion_4_dominating_set_vs_exact():
    graphs, total = _small_graph_set()
    enum_idx = _enumeration_sample(graphs, 13, 1500)
    worst, over, cross_bad, enum_done = 0.0, [], [], 0
    t0 = time.perf_counter()
    for i, gx in enumerate(graphs):
        g = nx_to_graph(gx)
        lp = dominating_set_lp(g)
        opt = _highs_min(lp.A_ge)
        if i in enum_idx:
            ev = lp_vertex_enumeration(lp).value
            enum_done += 1
            if abs(ev - opt) > 1e-9:
                cross_bad.append(i)
            opt = ev
        r = solve_problem(ProblemSpec("domset", g), SolverConfig(epsilon=EPS))
        assert build_dominating_set(g).C.apply(r.x).min() >= 1 - 1e-9
        worst = max(worst, r.value / opt)
        if r.value > 1.1 * opt + 1e-12:
            over.append(i)
    wall = time.perf_counter() - t0
    ok = not over and not cross_bad
    report_criterion(4, ok, f"{len(graphs)} graphs (of {total} connected n<=8): max V/OPT="
                            f"{worst:.4f} over={len(over)} (enumeration on {enum_done}, "
                            f"HiGHS on all, mismatches={len(cross_bad)}) time={wall:.0f}s")
    assert ok


# -- 5 -------------------------------------------------------------------------

def test_criterion_5_densest_subgraph():
    graphs = [nx_to_graph(g) for g in _connected_graphs() if g.number_of_nodes() <= 6]
    rng = np.random.default_rng(5)
    for k in range(40):
        n = int(rng.integers(7, 13))
        g = erdos_renyi(n, int(rng.integers(n - 1, n * (n - 1) // 2 + 1)), 500 + k)
        if g.m:
            graphs.append(g)
    t0 = time.perf_counter()
    worst_hi, worst_lo, bad = 0.0, math.inf, []
    for i, g in enumerate(graphs):
        opt = brute_densest(g)
        r = solve_densest(g, SolverConfig(epsilon=EPS))
        worst_hi = max(worst_hi, r.D_star / opt)
        worst_lo = min(worst_lo, r.D_star - opt)
        if not (opt - 1e-6 <= r.D_star <= 1.1 * opt):
            bad.append(i)
    wall = time.perf_counter() - t0
    ok = not bad
    report_criterion(5, ok, f"{len(graphs)} graphs n<=12: max D*/opt={worst_hi:.4f} "
                            f"min D*-opt={worst_lo:.2e} failures={len(bad)} time={wall:.0f}s")
    assert ok


# -- 6 -------------------------------------------------------------------------

def _rgg_instances():
    """One feasibility instance per problem at a bound just inside the LP optimum."""
    g = random_geometric(4000, seed=7)
    cfg = SolverConfig(epsilon=EPS)
    match = build_matching(g)
    v = solve_pure_packing(match.P, cfg).value
    vc = build_vertex_cover(g)
    v_vc = solve_pure_covering(vc.C, cfg).value
    ds = build_dominating_set(g)
    v_ds = solve_pure_covering(ds.C, cfg).value
    d_star = solve_densest(g, cfg).D_star
    return g, {
        "match": MixedInstance.pure_packing(match.P, 0.99 * v / (1 + EPS)),
        "vcover": MixedInstance.pure_covering(vc.C, 1.01 * v_vc),
        "domset": MixedInstance.pure_covering(ds.C, 1.01 * v_ds),
        "densesub": build_densest_feasibility(g, 1.01 * d_star),
    }


def test_criterion_6_step_search_effectiveness():
    t0 = time.perf_counter()
    g, instances = _rgg_instances()
    parts, ok = [], True
    for name, inst in instances.items():
        its = {}
        for mode in (StepMode.BINARY, StepMode.NEWTON):
            r = solve_feasibility(inst, SolverConfig(epsilon=EPS, step_mode=mode,
                                                     max_iter=200_000))
            assert r.status is Status.FEASIBLE, (name, mode)
            its[mode] = r.iterations
        # Standard only has to be shown ten times slower: cap it there.
        cap = 10 * max(its.values())
        r = solve_feasibility(inst, SolverConfig(epsilon=EPS, step_mode=StepMode.STANDARD,
                                                 max_iter=cap))
        censored = r.status is Status.ITER_LIMIT
        std = r.iterations
        good = censored or all(v <= std / 10 for v in its.values())
        ok &= good
        parts.append(f"{name}: std={'>' if censored else ''}{std} "
                     f"bin={its[StepMode.BINARY]} nwt={its[StepMode.NEWTON]}")
    wall = time.perf_counter() - t0
    report_criterion(6, ok, f"rgg n={g.n} m={g.m}: " + "; ".join(parts) + f" time={wall:.0f}s")
    assert ok


# -- 7 -------------------------------------------------------------------------

def _genmatch_cases():
    star = (make_graph(4, [(0, 1), (0, 2), (0, 3)]), [0, 1, 1, 1], [1, 1, 1, 1])
    p3 = (make_graph(3, [(0, 1), (1, 2)]), [1, 0, 1], [1, 1, 1])
    k32 = (make_graph(5, [(u, v) for u in range(3) for v in (3, 4)]),
           [1, 1, 1, 0, 0], [1, 1, 1, 1, 1])
    double_star = (make_graph(6, [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)]),
                   [0, 0, 1, 1, 1, 1], [1.5, 1.5, 1, 1, 1, 1])
    p5 = (make_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)]), [1, 0, 1, 0, 1], [1, 1, 1, 1, 1])
    return {"star": star, "P3": p3, "K3,2": k32, "double-star": double_star, "P5": p5}


def _lp_infeasible(g, lb, ub):
    M = np.zeros((g.n, g.m))
    M[g.rows, np.arange(g.m)] = 1.0
    M[g.cols, np.arange(g.m)] = 1.0
    lb, ub = np.asarray(lb, float), np.asarray(ub, float)
    pos = lb > 0
    lp = DenseLp(np.zeros(g.m), A_le=M, b_le=ub, A_ge=M[pos], b_ge=lb[pos], sense="feas")
    return lp_vertex_enumeration(lp).status == "infeasible"


def test_criterion_7_infeasibility_detection():
    cfg = SolverConfig(epsilon=EPS)
    results = {}
    scalar = MixedInstance(as_operator(np.array([[2.0]])), as_operator(np.array([[1.0]])))
    r = solve_feasibility(scalar, cfg)
    results["P=[[2]],C=[[1]]"] = (r.status, r.iterations, True)
    for name, (g, lb, ub) in _genmatch_cases().items():
        inst = build_generalized_matching(g, lb, ub)
        assert not trivially_infeasible(inst), name
        r = solve_feasibility(inst, cfg)
        results[name] = (r.status, r.iterations, _lp_infeasible(g, lb, ub))
    ok = all(s is Status.INFEASIBLE and it <= cfg.max_iter and lp
             for s, it, lp in results.values())
    detail = ", ".join(f"{k}={s.value}@{it}" for k, (s, it, _) in results.items())
    report_criterion(7, ok, detail + " (all confirmed infeasible by vertex enumeration)"
                     if all(v[2] for v in results.values()) else detail)
    assert ok


# -- 8 -------------------------------------------------------------------------

def _explicit(g):
    e = np.arange(g.m)
    M = sp.csr_matrix((np.ones(2 * g.m), (np.concatenate((g.rows, g.cols)),
                                          np.concatenate((e, e)))), shape=(g.n, g.m))
    O = sp.csr_matrix((np.ones(2 * g.m), (np.concatenate((g.rows, g.cols)),
                                          np.concatenate((2 * e, 2 * e + 1)))),
                      shape=(g.n, 2 * g.m))
    W = sp.csr_matrix((np.ones(2 * g.m), (np.repeat(e, 2), np.arange(2 * g.m))),
                      shape=(g.m, 2 * g.m))
    return M, O, W


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def test_criterion_8_implicit_operator_equivalence():
    sizes = np.unique(np.geomspace(10, 100_000, 50).astype(int))
    rng = np.random.default_rng(8)
    worst, not_identical, count = 0.0, 0, 0
    t0 = time.perf_counter()
    for k in range(50):
        m = int(np.geomspace(10, 100_000, 50)[k])
        kind = k % 3
        if kind == 0:
            g = erdos_renyi(max(8, m // 4), m, seed=k)
        elif kind == 1:
            n = max(8, m // 4)
            g = random_geometric(n, seed=k, avg_degree=2.0 * m / n)
        else:
            side = max(4, int(math.sqrt(m)) + 2)
            g = random_bipartite(side, side, m, seed=k)
        if g.m == 0:
            continue
        count += 1
        M, O, W = _explicit(g)
        xe, xv, xp = rng.random(g.m), rng.random(g.n), rng.random(2 * g.m)
        outs = {}
        for workers in (1, 8):
            outs[workers] = [incidence_apply(g, xe, workers), incidence_apply_t(g, xv, workers),
                             pair_apply(g, xp, workers), pair_apply_t(g, xv, workers),
                             interweave_apply(xp), interweave_apply_t(xe)]
            ref = [M @ xe, M.T @ xv, O @ xp, O.T @ xv, W @ xp, W.T @ xe]
            worst = max(worst, max(_rel(a, b) for a, b in zip(outs[workers], ref)))
        if not all(np.array_equal(a, b) for a, b in zip(outs[1], outs[8])):
            not_identical += 1
    wall = time.perf_counter() - t0
    ok = worst <= 1e-12 and not_identical == 0 and count >= 50 - 1
    report_criterion(8, ok, f"{count} graphs up to {int(sizes.max())} edges, 1 and 8 workers: "
                            f"max rel err={worst:.2e} non-identical={not_identical} "
                            f"time={wall:.0f}s")
    assert ok


# -- 9 -------------------------------------------------------------------------

class _CountingOp(LinearOperator):
    def __init__(self, base):
        self.base, self.shape, self.calls = base, base.shape, 0

    def apply(self, x):
        self.calls += 1
        return self.base.apply(x)

    def apply_t(self, x):
        self.calls += 1
        return self.base.apply_t(x)

    def to_coo(self):
        return self.base.to_coo()


def test_criterion_9_property_suites():
    rng = np.random.default_rng(9)
    checks = {}

    worst = 0.0
    sandwich = True
    for _ in range(1000):
        v = rng.normal(size=int(rng.integers(1, 200))) * rng.uniform(0.01, 100)
        eta = float(rng.uniform(0.1, 1000))
        s, w = smax_with_grad(v, eta)
        t, u = smin_with_grad(v, eta)
        worst = max(worst, abs(w.sum() - 1), abs(u.sum() - 1))
        slack = 1e-12 * max(1.0, float(np.abs(v).max()))
        lg = math.log(v.size) / eta
        sandwich &= v.max() - slack <= s <= v.max() + lg + slack
        sandwich &= v.min() - lg - slack <= t <= v.min() + slack
        sandwich &= abs(s - smax(v, eta)) <= slack and abs(t - smin(v, eta)) <= slack
    checks["grad-sum"] = worst <= 1e-12
    checks["sandwich"] = bool(sandwich)

    mono = True
    for seed in range(1000):
        si, _ = random_inputs(seed)
        a1, a2 = np.sort(rng.uniform(1e-3, 1e3, size=2))
        mono &= bang_for_buck(si, a1) >= bang_for_buck(si, a2) - 1e-10
    checks["f-monotone"] = bool(mono)

    pot, xmono, budget = True, True, True
    for seed in range(20):
        inst, *_ = planted_instance(seed, n_max=80, m_max=80)
        for mode in StepMode:
            r = solve_feasibility(inst, SolverConfig(step_mode=mode, record_trace=True,
                                                     max_iter=2000))
            pot &= bool(np.all(np.diff(r.potentials) <= 1e-9))
            xmono &= all(a > 0 for a in r.alphas)
        P, C = _CountingOp(inst.P), _CountingOp(inst.C)
        r = solve_feasibility(MixedInstance(P, C), SolverConfig(resync_every=10 ** 9))
        budget &= P.calls == C.calls == 1 + 2 * r.iterations
    for seed in range(3):
        inst, *_ = planted_instance(seed, n_max=40, m_max=40)
        prev = None
        for k in range(1, 15):
            r = solve_feasibility(inst, SolverConfig(max_iter=k))
            if r.status is not Status.ITER_LIMIT:
                break
            if prev is not None:
                xmono &= bool(np.all(r.x >= prev))
            prev = r.x
    checks["potential"] = bool(pot)
    checks["x-monotone"] = bool(xmono)
    structural = (set(SearchInputs.__dataclass_fields__).isdisjoint({"P", "C", "x", "d"})
                  and not hasattr(linesearch, "LinearOperator"))
    checks["search-no-operators"] = bool(budget and structural)
    ok = all(checks.values())
    report_criterion(9, ok, " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items())
                     + f" (max |sum grad - 1|={worst:.1e})")
    assert ok


# -- 10 ------------------------------------------------------------------------

def test_criterion_10_parallel_sanity(tmp_path):
    out = tmp_path / "matvec.csv"
    code = cli.main(["bench", "--graphs", "er:n=250000,m=1000000", "--problems", "matvec",
                     "--threads", "1,4", "--out", str(out)])
    rows = list(csv.DictReader(out.open()))
    assert code == 0 and len(rows) == 2 and not any(r["error"] for r in rows)
    t = {int(r["threads"]): float(r["matvec_time"]) for r in rows}
    ratio = t[4] / t[1]
    cpus = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    # Soft gate: machine-dependent, reported but never failed.
    report_criterion(10, ratio <= 0.6,
                     f"(soft, informational) matvec 4 workers / 1 worker = {ratio:.2f} "
                     f"(1 worker {t[1]:.3f}s, 4 workers {t[4]:.3f}s, 1e6 edges, {cpus} CPU(s) "
                     f"available)")
