"""Multiplicative-weight-update solver for positive LPs.

:func:`solve_feasibility` finds ``x >= 0`` with ``P x <= (1 + eps)`` and
``C x >= 1`` or reports infeasibility. Each iteration applies both operators
once forward (to the step direction) and once transposed (to the smoothed
max/min gradients); ``P x`` and ``C x`` are kept as running sums.

:func:`solve_pure_packing` and :func:`solve_pure_covering` turn the
optimization problems ``max / min <1, x>`` into a sequence of feasibility
questions by embedding the objective as one extra row ``<1, x> / M`` and
bisecting on ``M``.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from mwulp.linesearch import SearchInputs, StepResult, binary_search_step, newton_step
from mwulp.model import LinearOperator, MixedInstance, Mode, objective_upper_bound
from mwulp.smooth import smax, smax_with_grad, smin, smin_with_grad

log = logging.getLogger(__name__)

__all__ = [
    "StepMode",
    "Status",
    "SolverConfig",
    "SolverState",
    "SolveResult",
    "OptResult",
    "init_x",
    "step_direction",
    "potential",
    "solve_feasibility",
    "solve_pure_packing",
    "solve_pure_covering",
    "composed_epsilon",
]


class StepMode(str, enum.Enum):
    STANDARD = "standard"
    BINARY = "binary"
    NEWTON = "newton"


class Status(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    ITER_LIMIT = "iter_limit"


@dataclass
class SolverConfig:
    epsilon: float = 0.1
    max_iter: int = 5000
    step_mode: StepMode = StepMode.NEWTON
    keep_satisfied_constraints: bool = True
    eta_factor: float = 10.0
    deterministic: bool = True
    resync_every: int = 500
    record_trace: bool = False
    newton_max_iter: int = 100
    search_max_evals: int = 200

    def __post_init__(self):
        self.step_mode = StepMode(self.step_mode)
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def replace(self, **changes) -> "SolverConfig":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return SolverConfig(**kw)


@dataclass
class SolverState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    eta: float
    d: np.ndarray | None = None
    dy: np.ndarray | None = None
    dz: np.ndarray | None = None
    g: np.ndarray | None = None
    h: np.ndarray | None = None
    w_p: np.ndarray | None = None
    w_c: np.ndarray | None = None
    iteration: int = 0
    search_evaluations: int = 0
    active: np.ndarray | None = None


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    max_packing: float
    min_covering: float
    iterations: int
    search_evaluations: int
    wall_time: float
    timings: dict = field(default_factory=dict)
    alphas: list = field(default_factory=list)
    potentials: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    def to_dict(self, include_x: bool = False) -> dict:
        d = {
            "status": self.status.value,
            "max_packing": self.max_packing,
            "min_covering": self.min_covering,
            "violation": max(0.0, self.max_packing - 1.0, 1.0 - self.min_covering),
            "iterations": self.iterations,
            "search_evaluations": self.search_evaluations,
            "wall_time": self.wall_time,
            "timings": dict(self.timings),
        }
        if include_x:
            d["x"] = self.x.tolist()
        return d

    def to_json(self, include_x: bool = False) -> str:
        return json.dumps(self.to_dict(include_x))


@dataclass
class OptResult:
    """Outcome of a pure packing/covering optimization.

    ``value`` is ``<1, x>`` of the certificate ``x``. For packing,
    ``P x <= (1 + eps)``; for covering, ``C x >= 1``. ``lower``/``upper``
    bracket the LP optimum as established by the search.
    """

    status: Status
    value: float
    x: np.ndarray
    lower: float
    upper: float
    iterations: int
    search_evaluations: int
    probes: list = field(default_factory=list)
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_x: bool = False) -> dict:
        d = {"status": self.status.value, "value": self.value, "lower": self.lower,
             "upper": self.upper, "iterations": self.iterations,
             "search_evaluations": self.search_evaluations, "probes": self.probes,
             "wall_time": self.wall_time, "timings": dict(self.timings)}
        if include_x:
            d["x"] = self.x.tolist()
        return d


def init_x(P: LinearOperator, eps: float) -> np.ndarray:
    """``x_i = eps / (n * max_j P[j, i])`` so every packing row starts at most ``eps``."""
    norms = P.col_inf_norms()
    if np.any(norms <= 0):
        raise ValueError("P has an all-zero column; cannot initialize x")
    return eps / (P.cols * norms)


def step_direction(x, g, h, eta: float, pure: bool = False) -> np.ndarray:
    """``d_i = s * max(0, 1 - g_i / h_i) * x_i`` with ``s = 1/(2 eta)`` (mixed)
    or ``1/eta`` (pure). Coordinates with ``h_i = 0`` get no step."""
    s = (1.0 if pure else 0.5) / eta
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    with np.errstate(over="ignore"):
        ratio = np.divide(g, h, out=np.full_like(g, np.inf), where=h > 0)
    return s * np.maximum(0.0, 1.0 - ratio) * np.asarray(x, dtype=np.float64)


def potential(y, z, eta: float, mode: Mode = Mode.MIXED) -> float:
    """``(smax(y) - smin(z)) / eta``; the embedded singleton row is exact."""
    mode = Mode(mode)
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    hi = float(y[0]) if mode is Mode.PURE_COVERING else smax(y, eta)
    lo = float(z[0]) if mode is Mode.PURE_PACKING else smin(z, eta)
    return (hi - lo) / eta


def _eta(inst: MixedInstance, cfg: SolverConfig) -> float:
    m = inst.P.rows + inst.C.rows
    return cfg.eta_factor * math.log(max(m, 2)) / cfg.epsilon


def _rescaled_or_infeasible(st: SolverState, eps: float) -> Status:
    """Last check before giving up: ``x / min(C x)`` may already be a certificate.

    When ``P`` and ``C`` agree on the current point (e.g. ``P = C``) the
    gradients balance and the direction vanishes although the instance is
    feasible. Scaling is exact for RHS-1 constraints, so this never accepts an
    infeasible instance.
    """
    z_min = float(np.min(st.z))
    if z_min > 0.0 and np.max(st.y) <= (1.0 + eps) * z_min:
        st.x, st.y, st.z = st.x / z_min, st.y / z_min, st.z / z_min
        return Status.FEASIBLE
    return Status.INFEASIBLE


def solve_feasibility(inst: MixedInstance, cfg: SolverConfig | None = None,
                      prev_alpha: float | None = None) -> SolveResult:
    """Run MWU with step-size search on ``P x <= 1, C x >= 1``.

    Stops as soon as ``min(C x) >= 1`` and ``max(P x) <= (1 + eps) min(C x)``,
    returning ``x / min(C x)``; a large accepted step can push the covering
    rows well past 1, and rescaling keeps the ratio. Returns
    ``INFEASIBLE`` when the step direction vanishes or when the search cannot
    admit a unit step (unless the rescaled point is already a certificate),
    and ``ITER_LIMIT`` after ``cfg.max_iter`` iterations.
    """
    cfg = cfg or SolverConfig()
    P, C = inst.P, inst.C
    if P.cols != C.cols:
        raise ValueError(f"P has {P.cols} columns but C has {C.cols}")
    eps = cfg.epsilon
    pure = inst.mode is not Mode.MIXED
    eta = _eta(inst, cfg)
    t_start = time.perf_counter()
    t_matvec = t_search = 0.0

    x = init_x(P, eps)
    tm = time.perf_counter()
    y = P.apply(x)
    z = C.apply(x)
    t_matvec += time.perf_counter() - tm
    st = SolverState(x=x, y=y, z=z, eta=eta)
    keep_all = cfg.keep_satisfied_constraints
    alphas: list[float] = []
    potentials: list[float] = []
    if cfg.record_trace:
        potentials.append(potential(y, z, eta, inst.mode))
    alpha_prev = prev_alpha
    status = Status.ITER_LIMIT

    while True:
        z_min = float(np.min(st.z))
        if z_min >= 1.0 and np.max(st.y) <= (1.0 + eps) * z_min:
            # Both sides are homogeneous in x; scale the overshoot back to min(Cx) = 1.
            if z_min > 1.0:
                st.x, st.y, st.z = st.x / z_min, st.y / z_min, st.z / z_min
            status = Status.FEASIBLE
            break
        if st.iteration >= cfg.max_iter:
            status = Status.ITER_LIMIT
            break
        st.iteration += 1
        if st.iteration % cfg.resync_every == 0:
            tm = time.perf_counter()
            st.y = P.apply(st.x)
            st.z = C.apply(st.x)
            t_matvec += time.perf_counter() - tm

        _, st.w_p = smax_with_grad(st.y, eta)
        if keep_all:
            _, st.w_c = smin_with_grad(st.z, eta)
        else:
            active = st.z < 1.0
            st.w_c = np.zeros_like(st.z)
            if active.any():
                _, st.w_c[active] = smin_with_grad(st.z[active], eta)
        tm = time.perf_counter()
        st.g = P.apply_t(st.w_p)
        st.h = C.apply_t(st.w_c)
        t_matvec += time.perf_counter() - tm
        st.d = step_direction(st.x, st.g, st.h, eta, pure)
        if not np.max(st.d) > 0.0:
            status = _rescaled_or_infeasible(st, eps)
            break
        tm = time.perf_counter()
        st.dy = P.apply(st.d)
        st.dz = C.apply(st.d)
        t_matvec += time.perf_counter() - tm

        ts = time.perf_counter()
        if cfg.step_mode is StepMode.STANDARD:
            step = StepResult(1.0, 0, method="standard")
        else:
            z_s, dz_s = (st.z, st.dz) if keep_all else (st.z[st.z < 1.0], st.dz[st.z < 1.0])
            si = SearchInputs(st.y, st.dy, z_s, dz_s, eta, eps, inst.mode,
                              d_sum=float(st.d.sum()),
                              objective_scale=1.0 / inst.bound if pure else 1.0)
            if cfg.step_mode is StepMode.BINARY:
                step = binary_search_step(si, cfg.search_max_evals)
            else:
                step = newton_step(si, alpha_prev, cfg.newton_max_iter)
        t_search += time.perf_counter() - ts
        st.search_evaluations += step.evaluations
        if step.alpha < 1.0:
            status = _rescaled_or_infeasible(st, eps)
            break
        alpha = step.alpha
        alpha_prev = alpha
        st.x = st.x + alpha * st.d
        st.y = st.y + alpha * st.dy
        st.z = st.z + alpha * st.dz
        if cfg.record_trace:
            alphas.append(alpha)
            potentials.append(potential(st.y, st.z, eta, inst.mode))

    wall = time.perf_counter() - t_start
    timings = {"matvec": t_matvec, "search": t_search,
               "vec": max(0.0, wall - t_matvec - t_search)}
    return SolveResult(status, st.x, float(np.max(st.y)), float(np.min(st.z)), st.iteration,
                       st.search_evaluations, wall, timings, alphas, potentials)


def composed_epsilon(eps: float, bracket: float) -> float:
    """Inner tolerance ``eps'`` with ``(1 + eps') (1 + bracket) = 1 + eps``."""
    return (1.0 + eps) / (1.0 + bracket) - 1.0


def _driver_status(probes: list[dict]) -> Status:
    # A probe cut short by the iteration cap was treated as infeasible, so the
    # bracket (and the approximation guarantee) may be wrong.
    hit = any(p["status"] == Status.ITER_LIMIT.value for p in probes)
    return Status.ITER_LIMIT if hit else Status.FEASIBLE


def _accumulate(timings: dict, res: SolveResult) -> None:
    for k, v in res.timings.items():
        timings[k] = timings.get(k, 0.0) + v


def solve_pure_packing(P: LinearOperator, cfg: SolverConfig | None = None,
                       bracket: float | None = None) -> OptResult:
    """Approximately maximize ``<1, x>`` subject to ``P x <= 1``.

    Bisects (geometrically) on the objective bound ``M`` between a scaled
    feasible witness and ``sum_i 1 / min_j P[j, i]`` until the bracket's
    relative width is at most ``eps / 4``. The certificate satisfies
    ``P x <= (1 + eps)`` and ``value = <1, x> >= lower``.
    """
    cfg = cfg or SolverConfig()
    bracket = cfg.epsilon / 4.0 if bracket is None else bracket
    t0 = time.perf_counter()
    hi = objective_upper_bound(P)
    x0 = init_x(P, cfg.epsilon)
    x_best = x0 / np.max(P.apply(x0))
    lo = float(x_best.sum())
    probes: list[dict] = []
    iters = evals = 0
    timings: dict = {}
    alpha_prev = None
    while hi > lo * (1.0 + bracket):
        M = math.sqrt(lo * hi)
        res = solve_feasibility(MixedInstance.pure_packing(P, M), cfg, alpha_prev)
        iters += res.iterations
        evals += res.search_evaluations
        _accumulate(timings, res)
        probes.append({"bound": M, "status": res.status.value, "iterations": res.iterations,
                       "value": float(res.x.sum())})
        if res.status is Status.FEASIBLE:
            v = float(res.x.sum())
            if v > x_best.sum():
                x_best = res.x
            lo = max(lo, M, v)
        else:
            hi = M
    value = float(x_best.sum())
    return OptResult(_driver_status(probes), value, x_best, lo, hi, iters, evals, probes,
                     time.perf_counter() - t0, timings)


def solve_pure_covering(C: LinearOperator, cfg: SolverConfig | None = None,
                        bracket: float | None = None) -> OptResult:
    """Approximately minimize ``<1, x>`` subject to ``C x >= 1``.

    Bisects on ``M`` between the dual bound ``m_C / max(C^T 1)`` and a scaled
    all-ones witness. Each feasibility probe runs at the composed tolerance
    ``eps'`` so that the returned certificate (``C x >= 1`` exactly) has
    ``value <= (1 + eps) * OPT``.
    """
    cfg = cfg or SolverConfig()
    bracket = cfg.epsilon / 4.0 if bracket is None else bracket
    inner = cfg.replace(epsilon=composed_epsilon(cfg.epsilon, bracket))
    t0 = time.perf_counter()
    row_cover = C.apply(np.ones(C.cols))
    if np.any(row_cover <= 0):
        empty = int(np.flatnonzero(row_cover <= 0)[0])
        raise ValueError(f"covering row {empty} is empty; the LP is infeasible")
    x_best = np.ones(C.cols) / np.min(row_cover)
    hi = float(x_best.sum())
    lo = C.rows / float(np.max(C.apply_t(np.ones(C.rows))))
    probes: list[dict] = []
    iters = evals = 0
    timings: dict = {}
    alpha_prev = None
    while hi > lo * (1.0 + bracket):
        M = math.sqrt(lo * hi)
        res = solve_feasibility(MixedInstance.pure_covering(C, M), inner, alpha_prev)
        iters += res.iterations
        evals += res.search_evaluations
        _accumulate(timings, res)
        probes.append({"bound": M, "status": res.status.value, "iterations": res.iterations,
                       "value": float(res.x.sum())})
        if res.status is Status.FEASIBLE:
            x = res.x / np.min(C.apply(res.x))
            if x.sum() < x_best.sum():
                x_best = x
            hi = min(hi, M)
        else:
            lo = M
    value = float(x_best.sum())
    return OptResult(_driver_status(probes), value, x_best, lo, hi, iters, evals, probes,
                     time.perf_counter() - t0, timings)
