"""Sparse linear-program container and the solver boundary.

:class:`LpProblem` is a plain builder (variables with bounds, a minimizing
objective, sparse constraint rows) that any exact LP method can sit behind.
The default backend is HiGHS via ``scipy.optimize.linprog``; the
``RECCOORD_SOLVER`` environment variable selects the backend when several are
registered.

Solutions are checked against the declared rows before being reported
``optimal``: a backend claiming success on a primal-infeasible point is
downgraded to ``numeric_error`` rather than silently returned.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

#: Absolute feasibility tolerance on constraint residuals and bound violations.
TOL_FEAS = 1e-7
#: Relative optimality tolerance on objective values.
TOL_OPT = 1e-6

Sense = Literal["<=", "=", ">="]


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERIC_ERROR = "numeric_error"


class LpError(Exception):
    """Malformed problem: bad bounds, unknown variables, non-finite data."""


@dataclass
class _Row:
    cols: np.ndarray
    vals: np.ndarray
    sense: Sense
    rhs: float


@dataclass
class LpSolution:
    status: LpStatus
    objective: float | None
    x: np.ndarray | None
    names: tuple[str, ...]
    message: str = ""

    @property
    def values(self) -> dict[str, float]:
        """Variable assignment by name (empty unless optimal)."""
        if self.x is None:
            return {}
        return {n: float(v) for n, v in zip(self.names, self.x)}

    def value(self, name: str) -> float:
        if self.x is None:
            raise LpError(f"no assignment available (status {self.status.value})")
        return float(self.x[self.names.index(name)])


class LpProblem:
    """Minimization LP built incrementally: variables, objective, sparse rows."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: dict[int, float] = {}
        self._rows: list[_Row] = []

    # -- construction -------------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self._names)

    @property
    def num_constraints(self) -> int:
        return len(self._rows)

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf) -> int:
        if name in self._index:
            raise LpError(f"duplicate variable name {name!r}")
        if math.isnan(lb) or math.isnan(ub):
            raise LpError(f"NaN bound on variable {name!r}")
        if lb > ub:
            raise LpError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self._names)
        self._names.append(name)
        self._index[name] = idx
        self._lb.append(lb)
        self._ub.append(ub)
        return idx

    def _col(self, var: int | str) -> int:
        if isinstance(var, str):
            try:
                return self._index[var]
            except KeyError:
                raise LpError(f"unknown variable {var!r}") from None
        if not 0 <= var < len(self._names):
            raise LpError(f"variable index {var} out of range")
        return var

    def add_objective_term(self, var: int | str, coeff: float) -> None:
        col = self._col(var)
        if not math.isfinite(coeff):
            raise LpError(f"non-finite objective coefficient on {self._names[col]!r}")
        self._obj[col] = self._obj.get(col, 0.0) + coeff

    def add_constraint(self, terms: Iterable[tuple[int | str, float]], sense: Sense,
                       rhs: float) -> int:
        if sense not in ("<=", "=", ">="):
            raise LpError(f"bad constraint sense {sense!r}")
        if not math.isfinite(rhs):
            raise LpError(f"non-finite rhs {rhs}")
        acc: dict[int, float] = {}
        for var, coeff in terms:
            if not math.isfinite(coeff):
                raise LpError("non-finite constraint coefficient")
            col = self._col(var)
            acc[col] = acc.get(col, 0.0) + coeff
        cols = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
        vals = np.fromiter(acc.values(), dtype=np.float64, count=len(acc))
        self._rows.append(_Row(cols=cols, vals=vals, sense=sense, rhs=float(rhs)))
        return len(self._rows) - 1

    def set_bounds(self, var: int | str, lb: float, ub: float) -> None:
        col = self._col(var)
        if math.isnan(lb) or math.isnan(ub):
            raise LpError(f"NaN bound on variable {self._names[col]!r}")
        if lb > ub:
            raise LpError(f"variable {self._names[col]!r} has lb {lb} > ub {ub}")
        self._lb[col] = lb
        self._ub[col] = ub

    # -- introspection ------------------------------------------------------

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self._lb), np.array(self._ub)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(len(self._names))
        for col, coeff in self._obj.items():
            c[col] = coeff
        return c

    def rows(self) -> Sequence[_Row]:
        return tuple(self._rows)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Signed violation of each row at ``x`` (positive = infeasible)."""
        out = np.zeros(len(self._rows))
        for i, row in enumerate(self._rows):
            lhs = float(row.vals @ x[row.cols])
            if row.sense == "<=":
                out[i] = lhs - row.rhs
            elif row.sense == ">=":
                out[i] = row.rhs - lhs
            else:
                out[i] = abs(lhs - row.rhs)
        return out

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation at ``x``."""
        lb, ub = self.bounds()
        bound_viol = np.maximum(lb - x, x - ub)
        bound_viol = np.where(np.isfinite(bound_viol), bound_viol, -math.inf)
        worst_bound = float(bound_viol.max(initial=0.0))
        res = self.residuals(x)
        worst_row = float(res.max(initial=0.0))
        return max(worst_bound, worst_row, 0.0)

    # -- MPS debug dump -----------------------------------------------------

    def to_mps(self) -> str:
        """Fixed-layout MPS dump with generated short names.

        Original variable names appear in a leading comment block, one per
        generated column name, so external-solver cross-checks stay readable.
        """
        lines = [f"* problem: {self.name}"]
        for i, name in enumerate(self._names):
            lines.append(f"* X{i + 1} = {name}")
        lines.append(f"NAME          {self.name.upper()[:8]}")
        lines.append("ROWS")
        lines.append(" N  COST")
        sense_tag = {"<=": "L", ">=": "G", "=": "E"}
        for i, row in enumerate(self._rows):
            lines.append(f" {sense_tag[row.sense]}  R{i + 1}")

        # column-major entries: objective first, then rows that touch the column
        by_col: dict[int, list[tuple[str, float]]] = {i: [] for i in range(len(self._names))}
        for col, coeff in self._obj.items():
            if coeff != 0.0:
                by_col[col].append(("COST", coeff))
        for i, row in enumerate(self._rows):
            for col, coeff in zip(row.cols, row.vals):
                if coeff != 0.0:
                    by_col[int(col)].append((f"R{i + 1}", float(coeff)))

        lines.append("COLUMNS")
        for col in range(len(self._names)):
            entries = by_col[col]
            for k in range(0, len(entries), 2):
                pair = entries[k:k + 2]
                text = f"    {f'X{col + 1}':<10}"
                for rname, coeff in pair:
                    text += f"{rname:<10}{coeff:<15.10g}"
                lines.append(text.rstrip())

        lines.append("RHS")
        for i, row in enumerate(self._rows):
            if row.rhs != 0.0:
                lines.append(f"    {'RHS':<10}{f'R{i + 1}':<10}{row.rhs:<15.10g}".rstrip())

        lines.append("BOUNDS")
        for col, (lb, ub) in enumerate(zip(self._lb, self._ub)):
            vname = f"X{col + 1}"
            if lb == 0.0 and math.isinf(ub):
                continue  # default bounds
            if math.isinf(lb) and math.isinf(ub):
                lines.append(f" FR {'BND':<10}{vname:<10}")
                continue
            if math.isinf(lb):
                lines.append(f" MI {'BND':<10}{vname:<10}")
            elif lb != 0.0:
                lines.append(f" LO {'BND':<10}{vname:<10}{lb:<15.10g}".rstrip())
            if not math.isinf(ub):
                lines.append(f" UP {'BND':<10}{vname:<10}{ub:<15.10g}".rstrip())
        lines.append("ENDATA")
        return "\n".join(lines) + "\n"


def _solve_highs(problem: LpProblem) -> LpSolution:
    names = problem.variable_names
    n = len(names)
    c = problem.objective_vector()
    lb, ub = problem.bounds()

    eq_rows = [r for r in problem.rows() if r.sense == "="]
    ub_rows = [r for r in problem.rows() if r.sense != "="]

    def matrix(rows, flip_ge: bool):
        data, ridx, cidx, rhs = [], [], [], []
        for i, row in enumerate(rows):
            sign = -1.0 if (flip_ge and row.sense == ">=") else 1.0
            data.extend(sign * row.vals)
            ridx.extend([i] * len(row.cols))
            cidx.extend(row.cols)
            rhs.append(sign * row.rhs)
        mat = sparse.csr_matrix((data, (ridx, cidx)), shape=(len(rows), n))
        return mat, np.array(rhs)

    kwargs = {}
    if eq_rows:
        kwargs["A_eq"], kwargs["b_eq"] = matrix(eq_rows, flip_ge=False)
    if ub_rows:
        kwargs["A_ub"], kwargs["b_ub"] = matrix(ub_rows, flip_ge=True)

    res = linprog(c, bounds=np.column_stack([lb, ub]), method="highs", **kwargs)

    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, None, names, res.message)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, None, names, res.message)
    if res.status != 0 or res.x is None:
        return LpSolution(LpStatus.NUMERIC_ERROR, None, None, names, res.message)

    x = np.asarray(res.x, dtype=np.float64)
    violation = problem.max_violation(x)
    if violation > TOL_FEAS:
        return LpSolution(LpStatus.NUMERIC_ERROR, None, None, names,
                          f"solver returned an infeasible point (violation {violation:.3e})")
    return LpSolution(LpStatus.OPTIMAL, float(c @ x), x, names, res.message)


_BACKENDS = {"highs": _solve_highs}

#: Environment variable selecting the LP backend.
SOLVER_ENV_VAR = "RECCOORD_SOLVER"


def solve_lp(problem: LpProblem, backend: str | None = None) -> LpSolution:
    """Solve a minimization LP; deterministic for identical input.

    Backend resolution order: explicit argument, ``RECCOORD_SOLVER``
    environment variable, built-in default.
    """
    if backend is None:
        backend = os.environ.get(SOLVER_ENV_VAR, "highs")
    try:
        fn = _BACKENDS[backend]
    except KeyError:
        raise LpError(f"unknown LP backend {backend!r}; available: {sorted(_BACKENDS)}") from None
    return fn(problem)
