"""Smoothed maximum / minimum (scaled log-sum-exp) and their gradients.

``smax(v) = log(sum(exp(eta * v))) / eta`` lies in ``[max(v), max(v) + log(len)/eta]``;
``smin(v) = -smax(-v)``. The gradient of either is a probability vector.
All evaluations shift by the extreme entry first, since ``eta`` is routinely
in the hundreds.
"""

from __future__ import annotations

import numpy as np

__all__ = ["smax", "smin", "smax_with_grad", "smin_with_grad", "log_weights", "shifted_log_mean_exp"]


def logsumexp(a: np.ndarray) -> float:
    """``log(sum(exp(a)))`` shifted by the maximum."""
    top = np.max(a)
    if not np.isfinite(top):
        return float(top)
    return float(top + np.log(np.sum(np.exp(a - top))))


def _check(v, eta) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ValueError("smoothed max/min of an empty vector")
    if not eta > 0:
        raise ValueError("eta must be positive")
    return v


def smax(v, eta: float) -> float:
    v = _check(v, eta)
    return float(logsumexp(eta * v) / eta)


def smin(v, eta: float) -> float:
    v = _check(v, eta)
    return float(-logsumexp(-eta * v) / eta)


def smax_with_grad(v, eta: float) -> tuple[float, np.ndarray]:
    """Return ``smax_eta(v)`` and its gradient ``softmax(eta * v)``."""
    v = _check(v, eta)
    top = v.max()
    e = np.exp(eta * (v - top))
    s = e.sum()
    return float(top + np.log(s) / eta), e / s


def smin_with_grad(v, eta: float) -> tuple[float, np.ndarray]:
    """Return ``smin_eta(v)`` and its gradient ``softmax(-eta * v)``."""
    v = _check(v, eta)
    low = v.min()
    e = np.exp(-eta * (v - low))
    s = e.sum()
    return float(low - np.log(s) / eta), e / s


def log_weights(v, eta: float, sign: float = 1.0) -> np.ndarray:
    """``log softmax(sign * eta * v)``, finite wherever the weight is representable."""
    a = sign * eta * np.asarray(v, dtype=np.float64)
    return a - logsumexp(a)


def shifted_log_mean_exp(logw: np.ndarray, a: np.ndarray) -> float:
    """``log(sum_i exp(logw_i + a_i))`` for log-probabilities ``logw``.

    Evaluated as ``log1p(sum_i w_i * expm1(a_i))`` with each term formed in
    log space, which keeps full relative precision when the result is tiny
    (including terms whose weight alone would underflow). Huge sums and sums
    close to ``-1`` fall back to log-sum-exp, where absolute precision is the
    right measure anyway.
    """
    if a.size == 0:
        return 0.0
    if a.size == 1:
        return float(logw[0] + a[0])
    with np.errstate(divide="ignore", over="ignore"):
        mag = logw + np.log(np.abs(np.expm1(a)))
    if np.max(mag) < 700.0:
        s = float(np.dot(np.sign(a), np.exp(mag)))
        if s > -0.5:
            return float(np.log1p(s))
    return float(logsumexp(logw + a))
