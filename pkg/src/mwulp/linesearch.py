"""Step-size search for the MWU update ``x <- x + alpha * d``.

A step is admissible when its bang-for-buck ``f(alpha) = Phi(alpha) / Psi(alpha)``
is at least one, where

    Phi(alpha) = smin(z + alpha * dz) - smin(z)     (covering progress)
    Psi(alpha) = smax(y + alpha * dy) - smax(y)     (packing cost)

``f`` is nonincreasing in ``alpha``, so the largest admissible step can be
bracketed by doubling and refined by bisection, or found with Newton's
method on ``f(alpha) - 1``. Everything here works on the cached constraint
vectors; no operator is ever applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mwulp.model import Mode
from mwulp.smooth import log_weights, shifted_log_mean_exp

__all__ = [
    "SearchInputs",
    "StepResult",
    "phi",
    "psi",
    "bang_for_buck",
    "bang_for_buck_with_slope",
    "binary_search_step",
    "newton_step",
]


@dataclass
class SearchInputs:
    """Cached vectors for one step search.

    ``y, dy`` are the packing values ``P x`` and ``P d``; ``z, dz`` the covering
    values. In pure modes the embedded single row is linear, so its side of
    ``f`` is evaluated exactly as ``objective_scale * alpha * d_sum`` (with
    ``objective_scale = 1 / M``).
    """

    y: np.ndarray
    dy: np.ndarray
    z: np.ndarray
    dz: np.ndarray
    eta: float
    epsilon: float
    mode: Mode = Mode.MIXED
    d_sum: float = 0.0
    objective_scale: float = 1.0
    _logw: np.ndarray = field(init=False, repr=False)
    _logu: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        for name in ("y", "dy", "z", "dz"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self._logw = log_weights(self.y, self.eta, 1.0)
        self._logu = log_weights(self.z, self.eta, -1.0)

    @property
    def linear_cost(self) -> float:
        return self.objective_scale * self.d_sum


def psi(si: SearchInputs, alpha: float) -> float:
    """Increase of ``smax`` over the packing rows for a step ``alpha``."""
    if alpha == 0:
        return 0.0
    if si.mode is Mode.PURE_COVERING:
        return si.linear_cost * alpha
    return shifted_log_mean_exp(si._logw, si.eta * alpha * si.dy) / si.eta


def phi(si: SearchInputs, alpha: float) -> float:
    """Increase of ``smin`` over the covering rows for a step ``alpha``."""
    if alpha == 0:
        return 0.0
    if si.mode is Mode.PURE_PACKING:
        return si.linear_cost * alpha
    return -shifted_log_mean_exp(si._logu, -si.eta * alpha * si.dz) / si.eta


def _ratio(num: float, den: float) -> float:
    if den <= 0:
        return math.inf if num > 0 else 1.0
    return num / den


def bang_for_buck(si: SearchInputs, alpha: float) -> float:
    """``f(alpha) = Phi(alpha) / Psi(alpha)``; ``+inf`` when the step costs nothing.

    In pure packing this is the objective gain per unit of ``smax`` increase,
    in pure covering the ``smin`` gain per unit of objective increase, both
    oriented so that ``f >= 1`` is the admissibility test.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return _ratio(phi(si, alpha), psi(si, alpha))


def _slope_packing(si: SearchInputs, alpha: float) -> float:
    if si.mode is Mode.PURE_COVERING:
        return si.linear_cost
    a = si._logw + si.eta * alpha * si.dy
    p = np.exp(a - a.max())
    return float(np.dot(p, si.dy) / p.sum())


def _slope_covering(si: SearchInputs, alpha: float) -> float:
    if si.mode is Mode.PURE_PACKING:
        return si.linear_cost
    a = si._logu - si.eta * alpha * si.dz
    p = np.exp(a - a.max())
    return float(np.dot(p, si.dz) / p.sum())


def bang_for_buck_with_slope(si: SearchInputs, alpha: float) -> tuple[float, float]:
    """``f(alpha)`` and ``f'(alpha)`` via the quotient rule, with ``Psi'`` and
    ``Phi'`` the softmax-weighted means of ``dy`` and ``dz`` at the trial point."""
    ph, ps = phi(si, alpha), psi(si, alpha)
    if ps <= 0:
        return _ratio(ph, ps), 0.0
    dph, dps = _slope_covering(si, alpha), _slope_packing(si, alpha)
    return ph / ps, (dph * ps - ph * dps) / (ps * ps)


def _covered(si: SearchInputs, alpha: float) -> bool:
    return bool(np.min(si.z + alpha * si.dz) >= 1.0)


@dataclass
class StepResult:
    alpha: float
    evaluations: int
    early_finish: bool = False
    backoff: int = 0
    method: str = "binary"


def _doubling(si: SearchInputs, max_evals: int) -> tuple[float, int, bool, bool]:
    """Exponential phase. Returns ``(alpha, evals, early, hit_cap)`` where
    ``alpha`` is the first power of two with ``f < 1`` (or the early/capped one)."""
    alpha, evals = 1.0, 0
    while evals < max_evals:
        evals += 1
        if bang_for_buck(si, alpha) < 1.0:
            return alpha, evals, False, False
        if _covered(si, alpha):
            return alpha, evals, True, False
        if alpha >= 2.0 ** 1000:
            break
        alpha *= 2.0
    return alpha, evals, False, True


def binary_search_step(si: SearchInputs, max_evals: int = 200) -> StepResult:
    """Doubling from ``alpha = 1`` then bisection of ``[alpha/2, alpha]``.

    Returns early once the covering rows would all reach 1. A returned
    ``alpha < 1`` means ``f(1) < 1``: the caller treats this as infeasibility.
    """
    alpha, evals, early, capped = _doubling(si, max_evals)
    if early or capped:
        return StepResult(alpha, evals, early_finish=early)
    lb, ub = alpha / 2.0, alpha
    while ub - lb > (1.0 - si.epsilon) * lb and evals < max_evals:
        beta = 0.5 * (lb + ub)
        evals += 1
        if bang_for_buck(si, beta) >= 1.0:
            lb = beta
        else:
            ub = beta
    return StepResult(lb, evals, early_finish=_covered(si, lb))


def newton_step(si: SearchInputs, warm_alpha: float | None = None, max_iter: int = 100,
                tol: float | None = None, max_backoff: int = 200) -> StepResult:
    """Newton's method on ``g(alpha) = f(alpha) - 1``.

    Starts from ``warm_alpha`` (typically the previous accepted step) or, when
    absent, from the last doubling point with ``f >= 1``. After convergence
    the step is shrunk by ``(1 - epsilon)^p`` with the smallest ``p`` that
    restores ``f >= 1``. Divergence falls back to :func:`binary_search_step`.
    """
    tol = si.epsilon / 10.0 if tol is None else tol
    evals = 0
    if warm_alpha is None or not (math.isfinite(warm_alpha) and warm_alpha > 0):
        alpha, evals, early, capped = _doubling(si, 64)
        if early or capped:
            return StepResult(alpha, evals, early_finish=early, method="newton")
        alpha = alpha / 2.0 if alpha > 1.0 else alpha
    else:
        alpha = float(warm_alpha)

    def fallback(spent: int) -> StepResult:
        res = binary_search_step(si)
        res.evaluations += spent
        res.method = "newton-fallback"
        return res

    converged = False
    for _ in range(max_iter):
        f, fp = bang_for_buck_with_slope(si, alpha)
        evals += 1
        g = f - 1.0
        if g == 0.0 or (fp == 0.0 and g > 0.0):
            converged = True
            break
        if not math.isfinite(f) or fp == 0.0 or not math.isfinite(fp):
            return fallback(evals)
        nxt = alpha - g / fp
        if not math.isfinite(nxt) or nxt <= 0.0:
            return fallback(evals)
        if abs(nxt - alpha) <= tol * alpha:
            alpha = nxt
            converged = True
            break
        alpha = nxt
    if not converged:
        return fallback(evals)

    p = 0
    trial = alpha
    while p < max_backoff:
        evals += 1
        if bang_for_buck(si, trial) >= 1.0:
            break
        p += 1
        trial = alpha * (1.0 - si.epsilon) ** p
    else:
        return fallback(evals)
    alpha = trial
    if alpha < 1.0:
        evals += 1
        if bang_for_buck(si, 1.0) >= 1.0:
            alpha = 1.0
    covered = _covered(si, alpha)
    if covered and alpha > 1.0:
        # f is nonincreasing, so the first covering alpha is admissible too.
        alpha = max(1.0, _covering_alpha(si, alpha))
    return StepResult(alpha, evals, early_finish=covered, backoff=p, method="newton")


def _covering_alpha(si: SearchInputs, upper: float) -> float:
    """Smallest alpha in ``(0, upper]`` with every covering row at 1."""
    need = si.z < 1.0
    if not need.any():
        return 0.0
    a = float(np.max((1.0 - si.z[need]) / si.dz[need]))
    while a < upper and not _covered(si, a):
        a = min(upper, a * (1.0 + 1e-12) + 1e-300)
    return min(a, upper)
