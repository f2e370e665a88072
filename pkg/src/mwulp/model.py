"""Positive-LP data model.

A mixed packing/covering instance asks for ``x >= 0`` with ``P x <= 1`` and
``C x >= 1``. ``P`` and ``C`` are :class:`LinearOperator` objects: anything
with a forward and a transpose product over nonnegative implied entries.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from mwulp.sparse import DEFAULT_TILE, CooMatrix, CsbMatrix, build_csb, spmv, spmv_t

__all__ = [
    "LinearOperator",
    "CsbOperator",
    "DenseRowOperator",
    "RowScaledOperator",
    "TransposedOperator",
    "as_operator",
    "Mode",
    "MixedInstance",
    "ValidationReport",
    "validate",
    "objective_upper_bound",
    "instance_to_json",
    "instance_from_json",
]


class LinearOperator:
    """Nonnegative linear map of shape ``(rows, cols)``.

    Subclasses implement :meth:`apply`, :meth:`apply_t` and either
    :meth:`to_coo` or :meth:`_col_reduce`.
    """

    shape: tuple[int, int]

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_t(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_coo(self) -> CooMatrix:
        """Explicit export, for tests and oracle exchange."""
        raise NotImplementedError

    def _col_reduce(self, row_weights: np.ndarray | None, how: str) -> np.ndarray:
        """Per column, ``max`` or positive ``min`` of ``row_weights[j] * A[j, i]``.

        Columns with no positive weighted entry get 0.
        """
        coo = self.to_coo()
        v = coo.val if row_weights is None else coo.val * row_weights[coo.row]
        pos = v > 0
        out = np.full(self.cols, np.inf if how == "min" else 0.0)
        if how == "max":
            np.maximum.at(out, coo.col[pos], v[pos])
        else:
            np.minimum.at(out, coo.col[pos], v[pos])
            out[np.isinf(out)] = 0.0
        return out

    def col_inf_norms(self) -> np.ndarray:
        """``max_j A[j, i]`` per column."""
        return self._col_reduce(None, "max")

    def col_min_positive(self) -> np.ndarray:
        """Smallest positive entry per column (0 for empty columns)."""
        return self._col_reduce(None, "min")

    def _check(self, x, n: int) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (n,):
            raise ValueError(f"dimension mismatch: operator {self.shape}, vector {x.shape}")
        return x

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape})"


class CsbOperator(LinearOperator):
    """Explicit matrix stored in CSB."""

    def __init__(self, csb: CsbMatrix, workers: int | None = None):
        self.csb = csb
        self.shape = csb.shape
        self.workers = workers

    @classmethod
    def from_coo(cls, coo: CooMatrix, tile=DEFAULT_TILE, workers=None) -> "CsbOperator":
        return cls(build_csb(coo, tile), workers)

    def apply(self, x):
        return spmv(self.csb, x, self.workers)

    def apply_t(self, x):
        return spmv_t(self.csb, x, self.workers)

    def to_coo(self) -> CooMatrix:
        return self.csb.to_coo()


class DenseRowOperator(LinearOperator):
    """The single row ``scale * 1^T`` used to embed an objective."""

    def __init__(self, n: int, scale: float):
        if scale <= 0:
            raise ValueError("row scale must be positive")
        self.shape = (1, int(n))
        self.scale = float(scale)

    def apply(self, x):
        x = self._check(x, self.cols)
        return np.array([self.scale * x.sum()])

    def apply_t(self, x):
        x = self._check(x, 1)
        return np.full(self.cols, self.scale * x[0])

    def _col_reduce(self, row_weights, how):
        w = 1.0 if row_weights is None else float(row_weights[0])
        return np.full(self.cols, self.scale * w if w > 0 else 0.0)

    def to_coo(self):
        return CooMatrix(self.shape, np.zeros(self.cols), np.arange(self.cols),
                         np.full(self.cols, self.scale))


class RowScaledOperator(LinearOperator):
    """``diag(scale) @ base`` restricted to a subset of rows.

    Used to normalize right-hand sides to 1 (generalized matching bounds,
    densest-subgraph ``D``) without touching the base operator's storage.
    """

    def __init__(self, base: LinearOperator, scale, keep=None):
        scale = np.broadcast_to(np.asarray(scale, dtype=np.float64), (base.rows,))
        if np.any(scale < 0) or not np.all(np.isfinite(scale)):
            raise ValueError("row scales must be finite and nonnegative")
        self.base = base
        self.keep = None if keep is None else np.flatnonzero(np.asarray(keep))
        self.scale_full = scale.copy()
        self.scale = scale if self.keep is None else scale[self.keep]
        nrows = base.rows if self.keep is None else self.keep.size
        self.shape = (int(nrows), base.cols)

    def apply(self, x):
        y = self.base.apply(x)
        if self.keep is not None:
            y = y[self.keep]
        return y * self.scale

    def apply_t(self, x):
        x = self._check(x, self.rows)
        if self.keep is None:
            return self.base.apply_t(x * self.scale)
        full = np.zeros(self.base.rows)
        full[self.keep] = x * self.scale
        return self.base.apply_t(full)

    def _weights(self) -> np.ndarray:
        if self.keep is None:
            return self.scale_full
        w = np.zeros(self.base.rows)
        w[self.keep] = self.scale
        return w

    def _col_reduce(self, row_weights, how):
        w = self._weights()
        if row_weights is not None:
            full = np.zeros(self.base.rows)
            full[self.keep if self.keep is not None else slice(None)] = row_weights
            w = w * full
        return self.base._col_reduce(w, how)

    def to_coo(self):
        coo = self.base.to_coo()
        w = self._weights()
        v = coo.val * w[coo.row]
        keep = v > 0
        if self.keep is None:
            rows = coo.row
        else:
            remap = np.full(self.base.rows, -1)
            remap[self.keep] = np.arange(self.keep.size)
            rows = remap[coo.row]
        return CooMatrix(self.shape, rows[keep], coo.col[keep], v[keep])


class TransposedOperator(LinearOperator):
    """View swapping forward and transpose products of ``base``."""

    def __init__(self, base: LinearOperator):
        self.base = base
        self.shape = (base.cols, base.rows)

    def apply(self, x):
        return self.base.apply_t(x)

    def apply_t(self, x):
        return self.base.apply(x)

    def _col_reduce(self, row_weights, how):
        reduce_rows = getattr(self.base, "_row_reduce", None)
        if reduce_rows is not None:
            return reduce_rows(row_weights, how)
        return LinearOperator._col_reduce(self, row_weights, how)

    def to_coo(self):
        return self.base.to_coo().transpose()


def as_operator(a, tile=DEFAULT_TILE, workers=None) -> LinearOperator:
    """Wrap a dense array, scipy sparse matrix, COO or CSB as an operator."""
    if isinstance(a, LinearOperator):
        return a
    if isinstance(a, CsbMatrix):
        return CsbOperator(a, workers)
    if isinstance(a, CooMatrix):
        return CsbOperator.from_coo(a, tile, workers)
    if hasattr(a, "tocoo"):
        return CsbOperator.from_coo(CooMatrix.from_scipy(a), tile, workers)
    return CsbOperator.from_coo(CooMatrix.from_dense(a), tile, workers)


class Mode(str, enum.Enum):
    MIXED = "mixed"
    PURE_PACKING = "pure_packing"
    PURE_COVERING = "pure_covering"


@dataclass
class MixedInstance:
    """``exists x >= 0 : P x <= 1, C x >= 1``.

    In pure modes ``bound`` is the objective estimate ``M`` and the embedded
    side is the single row ``(1/M) 1^T`` (``C`` for packing, ``P`` for
    covering).
    """

    P: LinearOperator
    C: LinearOperator
    mode: Mode = Mode.MIXED
    bound: float | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.mode = Mode(self.mode)

    @property
    def n(self) -> int:
        return self.P.cols

    @property
    def objective_operator(self) -> LinearOperator:
        """The operator carrying the real constraints in pure modes."""
        if self.mode is Mode.PURE_PACKING:
            return self.P
        if self.mode is Mode.PURE_COVERING:
            return self.C
        raise ValueError("mixed instances have no objective operator")

    @classmethod
    def pure_packing(cls, P: LinearOperator, bound: float) -> "MixedInstance":
        return cls(P, DenseRowOperator(P.cols, 1.0 / bound), Mode.PURE_PACKING, float(bound))

    @classmethod
    def pure_covering(cls, C: LinearOperator, bound: float) -> "MixedInstance":
        return cls(DenseRowOperator(C.cols, 1.0 / bound), C, Mode.PURE_COVERING, float(bound))

    def with_bound(self, bound: float) -> "MixedInstance":
        if self.mode is Mode.PURE_PACKING:
            return MixedInstance.pure_packing(self.P, bound)
        if self.mode is Mode.PURE_COVERING:
            return MixedInstance.pure_covering(self.C, bound)
        raise ValueError("only pure instances carry an objective bound")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(inst: MixedInstance, samples: int = 16, seed: int = 0) -> ValidationReport:
    """Structural checks; collects every violation instead of raising."""
    report = ValidationReport()
    P, C = inst.P, inst.C
    if P.cols != C.cols:
        report.violations.append(f"dimension: P has {P.cols} columns, C has {C.cols}")
        return report
    if P.rows == 0:
        report.violations.append("dimension: P has no rows")
    if C.rows == 0:
        report.violations.append("dimension: C has no rows")
    if report.violations:
        return report
    rng = np.random.default_rng(seed)
    cols = rng.choice(P.cols, size=min(samples, P.cols), replace=False)
    for name, op in (("P", P), ("C", C)):
        for i in cols:
            e = np.zeros(op.cols)
            e[i] = 1.0
            if np.any(op.apply(e) < 0):
                report.violations.append(f"nonnegativity: {name} column {i} has a negative entry")
                break
    zero = np.flatnonzero(P.col_inf_norms() <= 0)
    if zero.size:
        report.violations.append(
            f"unbounded variable at init: P has {zero.size} all-zero column(s), first {zero[0]}")
    if inst.mode is not Mode.MIXED and not inst.bound:
        report.violations.append("pure instance without a positive objective bound")
    return report


def objective_upper_bound(P: LinearOperator) -> float:
    """``sum_i max_{j: P[j,i] > 0} 1 / P[j,i]``, an upper bound on the packing optimum."""
    mins = P.col_min_positive()
    if np.any(mins <= 0):
        raise ValueError("P has an all-zero column; the packing LP is unbounded")
    return float(np.sum(1.0 / mins))


def instance_to_json(inst: MixedInstance) -> dict:
    """Explicit COO dump of both operators."""

    def dump(op):
        coo = op.to_coo()
        return {"shape": list(coo.shape), "row": coo.row.tolist(),
                "col": coo.col.tolist(), "val": coo.val.tolist()}

    return {"format": "mwulp.instance/1", "mode": inst.mode.value, "bound": inst.bound,
            "P": dump(inst.P), "C": dump(inst.C)}


def instance_from_json(doc, workers: int | None = None) -> MixedInstance:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)

    def load(d):
        coo = CooMatrix(tuple(d["shape"]), d["row"], d["col"], d["val"])
        return CsbOperator.from_coo(coo, workers=workers)

    return MixedInstance(load(doc["P"]), load(doc["C"]), Mode(doc.get("mode", "mixed")),
                         doc.get("bound"))
