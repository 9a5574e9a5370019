"""Solver-agnostic linear model container shared by the LP/MILP solvers and MPS I/O."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Hashable, Mapping

import numpy as np
import scipy.sparse as sp

INF = np.inf
SENSES = ("L", "E", "G")  # <=, =, >=


@dataclass(frozen=True, eq=False)
class MilpModel:
    """Columns, rows and objective of a (mixed-integer) linear program.

    Rows are stored sparse as ``(column indices, coefficients)`` pairs with a
    sense from :data:`SENSES`.  ``var_index`` maps structured keys (see
    :mod:`hytep.formulation`) to column positions; models read from MPS carry an
    empty map.
    """

    col_names: tuple[str, ...]
    lb: np.ndarray
    ub: np.ndarray
    obj: np.ndarray
    integer: np.ndarray
    row_names: tuple[str, ...]
    rows: tuple[tuple[np.ndarray, np.ndarray], ...]
    sense: tuple[str, ...]
    rhs: np.ndarray
    var_index: Mapping[Hashable, int] = field(default_factory=dict)
    objective_offset: float = 0.0
    maximize: bool = False
    name: str = "model"
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def n_integer(self) -> int:
        return int(np.count_nonzero(self.integer))

    def matrix(self) -> sp.csr_matrix:
        cached = self.__dict__.get("_csr")
        if cached is None:
            indptr = [0]
            idx, val = [], []
            for cols, coefs in self.rows:
                idx.append(cols)
                val.append(coefs)
                indptr.append(indptr[-1] + len(cols))
            if idx:
                idx_a = np.concatenate(idx).astype(np.int64)
                val_a = np.concatenate(val).astype(float)
            else:
                idx_a, val_a = np.zeros(0, np.int64), np.zeros(0)
            cached = sp.csr_matrix((val_a, idx_a, np.asarray(indptr)), shape=(self.n_rows, self.n_cols))
            object.__setattr__(self, "_csr", cached)
        return cached

    def column(self, key: Hashable) -> int:
        return self.var_index[key]

    def relaxed(self) -> "MilpModel":
        return replace(self, integer=np.zeros(self.n_cols, dtype=bool))

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.obj @ np.asarray(x, dtype=float)) + self.objective_offset


class ModelBuilder:
    """Incremental assembly of a :class:`MilpModel` with unique names."""

    def __init__(self, name: str = "model"):
        self.name = name
        self._names: list[str] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: list[float] = []
        self._int: list[bool] = []
        self._index: dict[Hashable, int] = {}
        self._name_set: set[str] = set()
        self._rows: list[tuple[np.ndarray, np.ndarray]] = []
        self._row_names: list[str] = []
        self._row_name_set: set[str] = set()
        self._sense: list[str] = []
        self._rhs: list[float] = []

    def add_var(self, key: Hashable, name: str, lb: float = 0.0, ub: float = INF,
                cost: float = 0.0, integer: bool = False) -> int:
        if name in self._name_set or key in self._index:
            raise ValueError(f"duplicate column {name}")
        j = len(self._names)
        self._names.append(name)
        self._name_set.add(name)
        self._index[key] = j
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._obj.append(float(cost))
        self._int.append(bool(integer))
        return j

    def add_row(self, terms: Mapping[int, float] | list[tuple[int, float]], sense: str, rhs: float,
                name: str) -> int:
        if sense not in SENSES:
            raise ValueError(f"bad row sense {sense!r}")
        if name in self._row_name_set:
            raise ValueError(f"duplicate row {name}")
        acc: dict[int, float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for j, a in items:
            acc[j] = acc.get(j, 0.0) + float(a)
        cols = np.array(sorted(j for j, a in acc.items() if a != 0.0), dtype=np.int64)
        coefs = np.array([acc[j] for j in cols], dtype=float)
        self._rows.append((cols, coefs))
        self._row_names.append(name)
        self._row_name_set.add(name)
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        return len(self._row_names) - 1

    def col(self, key: Hashable) -> int:
        return self._index[key]

    def has(self, key: Hashable) -> bool:
        return key in self._index

    def build(self, **kw) -> MilpModel:
        return MilpModel(
            col_names=tuple(self._names),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            obj=np.array(self._obj, dtype=float),
            integer=np.array(self._int, dtype=bool),
            row_names=tuple(self._row_names),
            rows=tuple(self._rows),
            sense=tuple(self._sense),
            rhs=np.array(self._rhs, dtype=float),
            var_index=dict(self._index),
            name=self.name,
            **kw,
        )


def check_solution(model: MilpModel, x, tol: float = 1e-7, int_tol: float | None = None) -> list[str]:
    """Independently re-evaluate bounds and rows at ``x``; return violations.

    Row activities are summed term by term from the stored coefficient lists,
    without the sparse matrix the solvers use.
    """
    x = np.asarray(x, dtype=float)
    out: list[str] = []
    if x.shape != (model.n_cols,):
        return [f"solution length {x.shape} != {model.n_cols}"]
    for j in range(model.n_cols):
        v = x[j]
        if v < model.lb[j] - tol or v > model.ub[j] + tol:
            out.append(f"column {model.col_names[j]}={v:.9g} outside [{model.lb[j]:g}, {model.ub[j]:g}]")
        if int_tol is not None and model.integer[j] and abs(v - round(v)) > int_tol:
            out.append(f"column {model.col_names[j]}={v:.9g} not integral")
    for i, (cols, coefs) in enumerate(model.rows):
        act = 0.0
        for j, a in zip(cols.tolist(), coefs.tolist()):
            act += a * x[j]
        s, b = model.sense[i], model.rhs[i]
        scale = max(1.0, abs(b))
        bad = (s == "L" and act > b + tol * scale) or (s == "G" and act < b - tol * scale) \
            or (s == "E" and abs(act - b) > tol * scale)
        if bad:
            out.append(f"row {model.row_names[i]}: activity {act:.9g} {s} {b:.9g}")
    return out
