"""Abstract mixed-integer linear programs and the solver boundary.

Models are assembled column by column and row by row, each carrying a
stable symbolic id such as ``elbal[B1,3]``.  Two backends sit behind
:func:`solve_milp` and :func:`solve_lp_fixed`:

* ``highs`` -- the HiGHS solver shipped with scipy (MILP and LP with duals).
* ``simplex`` -- a dense two-phase simplex written in numpy.  LP only; it
  exists so small LPs can be solved and priced without any compiled solver
  and to cross-check HiGHS duals.

The backend is chosen by name, by default from the ``GASLIGHT_SOLVER``
environment variable.

Row duals follow one convention everywhere: the dual of a row is the
derivative of the optimal objective with respect to the row's right-hand
side constant.  Balance rows are written ``supply - demand == 0`` so that
their dual is the locational price.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

log = logging.getLogger(__name__)

INF = math.inf
DEFAULT_GAP = 1e-6
DEFAULT_FEAS_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
GAP_LIMIT = "gap-limit"
ERROR = "error"


class ModelError(ValueError):
    """Raised for malformed models (duplicate ids, dangling columns)."""


class SolverError(RuntimeError):
    """Raised when a solve cannot produce what the caller asked for."""


# --------------------------------------------------------------------------
# expressions
# --------------------------------------------------------------------------


class LinExpr:
    """Sparse affine expression ``sum(coef * col) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping[int, float] | None = None, const: float = 0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def _iadd(self, other, scale: float = 1.0) -> "LinExpr":
        if isinstance(other, Var):
            self.terms[other.index] = self.terms.get(other.index, 0.0) + scale
        elif isinstance(other, LinExpr):
            for k, v in other.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + scale * v
            self.const += scale * other.const
        else:
            self.const += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy()._iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy()._iadd(other, -1.0)

    def __rsub__(self, other):
        return (-self)._iadd(other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, k):
        k = float(k)
        return LinExpr({i: k * v for i, v in self.terms.items()}, k * self.const)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / float(k))

    def __repr__(self):
        body = " + ".join(f"{v:g}*x{i}" for i, v in self.terms.items())
        return f"LinExpr({body or '0'} + {self.const:g})"


@dataclass(frozen=True)
class Var:
    """Handle to a model column; supports affine arithmetic."""

    index: int
    name: str

    def expr(self) -> LinExpr:
        return LinExpr({self.index: 1.0})

    def __add__(self, other):
        return self.expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.expr() - other

    def __rsub__(self, other):
        return as_expr(other) - self.expr()

    def __neg__(self):
        return self.expr() * -1.0

    def __mul__(self, k):
        return self.expr() * k

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self.expr() / k


def as_expr(x) -> LinExpr:
    if isinstance(x, LinExpr):
        return x
    if isinstance(x, Var):
        return x.expr()
    return LinExpr(const=float(x))


def lsum(items: Iterable) -> LinExpr:
    """Sum of numbers, columns and expressions without quadratic copying."""
    out = LinExpr()
    for it in items:
        out._iadd(it)
    return out


# --------------------------------------------------------------------------
# model
# --------------------------------------------------------------------------

_SENSES = {"<=": "<=", "=<": "<=", "==": "=", "=": "=", ">=": ">=", "=>": ">="}


@dataclass
class MilpModel:
    """A minimization MILP with named columns and rows.

    ``handles`` is free-form storage for builders that need to find their
    variable families again after the solve.
    """

    name: str = "model"
    col_names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    binary: list[bool] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    row_cols: list[np.ndarray] = field(default_factory=list)
    row_coefs: list[np.ndarray] = field(default_factory=list)
    row_sense: list[str] = field(default_factory=list)
    row_rhs: list[float] = field(default_factory=list)
    obj_offset: float = 0.0
    handles: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._col_index = {n: i for i, n in enumerate(self.col_names)}
        self._row_index = {n: i for i, n in enumerate(self.row_names)}

    # -- building -----------------------------------------------------------

    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def n_binaries(self) -> int:
        return sum(self.binary)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, cost: float = 0.0,
                binary: bool = False) -> Var:
        if name in self._col_index:
            raise ModelError(f"duplicate column id {name!r}")
        if binary:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ModelError(f"column {name!r} has empty bounds [{lb}, {ub}]")
        idx = len(self.col_names)
        self._col_index[name] = idx
        self.col_names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.cost.append(float(cost))
        self.binary.append(bool(binary))
        return Var(idx, name)

    def add_objective(self, expr) -> None:
        e = as_expr(expr)
        for i, v in e.terms.items():
            self.cost[i] += v
        self.obj_offset += e.const

    def add_constraint(self, name: str, lhs, sense: str, rhs=0.0) -> int:
        """Add ``lhs sense rhs``; constants are collected on the right."""
        if name in self._row_index:
            raise ModelError(f"duplicate row id {name!r}")
        try:
            s = _SENSES[sense]
        except KeyError:
            raise ModelError(f"unknown sense {sense!r}") from None
        e = as_expr(lhs) - as_expr(rhs)
        cols = np.fromiter((i for i, v in e.terms.items() if v != 0.0), dtype=np.int64)
        coefs = np.fromiter((v for v in e.terms.values() if v != 0.0), dtype=float)
        if cols.size and (cols.max() >= self.n_cols or cols.min() < 0):
            raise ModelError(f"row {name!r} references a missing column")
        idx = len(self.row_names)
        self._row_index[name] = idx
        self.row_names.append(name)
        self.row_cols.append(cols)
        self.row_coefs.append(coefs)
        self.row_sense.append(s)
        self.row_rhs.append(-e.const)
        return idx

    def fix(self, var: Var | str, value: float) -> None:
        i = self.col(var)
        self.lb[i] = self.ub[i] = float(value)

    # -- lookups -----------------------------------------------------------

    def col(self, var: Var | str | int) -> int:
        if isinstance(var, Var):
            return var.index
        if isinstance(var, (int, np.integer)):
            return int(var)
        return self._col_index[var]

    def row(self, name: str) -> int:
        return self._row_index[name]

    def has_row(self, name: str) -> bool:
        return name in self._row_index

    def rows_tagged(self, tag: str) -> list[str]:
        """Row ids of the form ``tag[...]``."""
        prefix = tag + "["
        return [n for n in self.row_names if n.startswith(prefix)]

    def binary_indices(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.binary, dtype=bool))

    def matrix(self) -> sparse.csr_matrix:
        nnz = sum(c.size for c in self.row_cols)
        if not self.n_rows:
            return sparse.csr_matrix((0, self.n_cols))
        indptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum([c.size for c in self.row_cols], out=indptr[1:])
        indices = np.concatenate(self.row_cols) if nnz else np.zeros(0, dtype=np.int64)
        data = np.concatenate(self.row_coefs) if nnz else np.zeros(0)
        return sparse.csr_matrix((data, indices, indptr), shape=(self.n_rows, self.n_cols))

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.matrix() @ np.asarray(x, dtype=float)

    def row_violation(self, x: np.ndarray) -> np.ndarray:
        """Nonnegative violation of every row at point ``x``."""
        act = self.row_activity(x)
        rhs = np.asarray(self.row_rhs)
        sense = np.asarray(self.row_sense)
        viol = np.where(sense == "<=", act - rhs, np.where(sense == ">=", rhs - act, np.abs(act - rhs)))
        return np.maximum(viol, 0.0)

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(self.cost, x) + self.obj_offset)

    def scaled(self, s: float) -> "MilpModel":
        """Copy with every objective coefficient multiplied by ``s``."""
        m = MilpModel(
            name=self.name, col_names=list(self.col_names), lb=list(self.lb), ub=list(self.ub),
            cost=[s * c for c in self.cost], binary=list(self.binary),
            row_names=list(self.row_names), row_cols=list(self.row_cols),
            row_coefs=list(self.row_coefs), row_sense=list(self.row_sense),
            row_rhs=list(self.row_rhs), obj_offset=s * self.obj_offset,
        )
        return m

    def validate(self) -> None:
        if len(set(self.col_names)) != self.n_cols or len(set(self.row_names)) != self.n_rows:
            raise ModelError("ids are not unique")
        for i in self.binary_indices():
            if self.lb[i] < 0 or self.ub[i] > 1:
                raise ModelError(f"binary column {self.col_names[i]!r} has bounds outside [0, 1]")
        for name, cols in zip(self.row_names, self.row_cols):
            if cols.size and cols.max() >= self.n_cols:
                raise ModelError(f"row {name!r} references a missing column")

    # -- export --------------------------------------------------------------

    def to_lp_string(self) -> str:
        """Render in the CPLEX LP text format."""
        safe = [_lp_name(n, "x", i) for i, n in enumerate(self.col_names)]

        def terms(cols, coefs):
            parts = []
            for c, v in zip(cols, coefs):
                sign = "-" if v < 0 else "+"
                parts.append(f"{sign} {abs(v):.12g} {safe[c]}")
            text = " ".join(parts) if parts else "0 " + (safe[0] if safe else "")
            return text[2:] if text.startswith("+ ") else text

        nz = [i for i, c in enumerate(self.cost) if c != 0.0]
        lines = [f"\\ {self.name}", "Minimize", " obj: " + terms(nz, [self.cost[i] for i in nz])]
        if self.obj_offset:
            lines[-1] += f" + {self.obj_offset:.12g} constant"
        lines.append("Subject To")
        ops = {"<=": "<=", ">=": ">=", "=": "="}
        for i, n in enumerate(self.row_names):
            lines.append(f" {_lp_name(n, 'r', i)}: {terms(self.row_cols[i], self.row_coefs[i])} "
                         f"{ops[self.row_sense[i]]} {self.row_rhs[i]:.12g}")
        lines.append("Bounds")
        if self.obj_offset:
            lines.append(" constant = 1")
        for i, n in enumerate(safe):
            lo, hi = self.lb[i], self.ub[i]
            if self.binary[i]:
                continue
            if lo == -INF and hi == INF:
                lines.append(f" {n} free")
            elif lo == hi:
                lines.append(f" {n} = {lo:.12g}")
            else:
                lo_s = "-inf" if lo == -INF else f"{lo:.12g}"
                hi_s = "+inf" if hi == INF else f"{hi:.12g}"
                lines.append(f" {lo_s} <= {n} <= {hi_s}")
        bins = [safe[i] for i in self.binary_indices()]
        if bins:
            lines.append("Binaries")
            lines.extend(f" {b}" for b in bins)
        lines.append("End")
        return "\n".join(lines) + "\n"

    def write_lp(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp_string())


def _lp_name(name: str, prefix: str, i: int) -> str:
    out = "".join(ch if (ch.isalnum() or ch in "_.[]") else "_" for ch in name)
    out = out.replace("[", "(").replace("]", ")")
    if not out or out[0].isdigit() or out[0] in ".(":
        out = f"{prefix}{i}_{out}"
    return out


# --------------------------------------------------------------------------
# solutions
# --------------------------------------------------------------------------


@dataclass
class Solution:
    status: str
    objective: float = math.nan
    x: np.ndarray | None = None
    duals: dict[str, float] | None = None
    mip_gap: float = 0.0
    message: str = ""
    model: MilpModel | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, var: Var | str | int) -> float:
        return float(self.x[self.model.col(var)])

    def values(self, handles: Mapping) -> dict:
        """Map a dict of column handles to solved values."""
        return {k: float(self.x[v.index]) for k, v in handles.items()}

    def eval(self, expr) -> float:
        e = as_expr(expr)
        return e.const + sum(v * self.x[i] for i, v in e.terms.items())

    def dual(self, row: str) -> float:
        if self.duals is None:
            raise SolverError("duals are only available from solve_lp_fixed")
        return self.duals[row]

    def binary_assignment(self) -> dict[int, float]:
        return {int(i): float(round(self.x[i])) for i in self.model.binary_indices()}


# --------------------------------------------------------------------------
# backends
# --------------------------------------------------------------------------


class HighsBackend:
    name = "highs"

    def solve_milp(self, model: MilpModel, gap: float, feas_tol: float) -> Solution:
        if not model.binary_indices().size:
            return self.solve_lp(model, feas_tol, with_duals=False)
        c = np.asarray(model.cost)
        cons = _scipy_constraints(model)
        res = milp(
            c,
            constraints=cons,
            integrality=np.asarray(model.binary, dtype=np.uint8),
            bounds=Bounds(np.asarray(model.lb), np.asarray(model.ub)),
            options={"mip_rel_gap": gap, "presolve": True},
        )
        status = {0: OPTIMAL, 1: GAP_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, ERROR)
        if res.x is None:
            if status in (OPTIMAL, GAP_LIMIT):
                status = ERROR
            return Solution(status, message=res.message, model=model)
        x = np.asarray(res.x, dtype=float)
        bins = model.binary_indices()
        x[bins] = np.round(x[bins])
        gap_val = float(getattr(res, "mip_gap", 0.0) or 0.0)
        return Solution(status, model.objective_value(x), x, None, gap_val, res.message, model)

    def solve_lp(self, model: MilpModel, feas_tol: float, with_duals: bool = True) -> Solution:
        n = model.n_cols
        if n == 0:
            return Solution(OPTIMAL, model.obj_offset, np.zeros(0), {r: 0.0 for r in model.row_names},
                            model=model)
        A = model.matrix()
        sense = np.asarray(model.row_sense)
        rhs = np.asarray(model.row_rhs, dtype=float)
        eq = np.flatnonzero(sense == "=")
        le = np.flatnonzero(sense == "<=")
        ge = np.flatnonzero(sense == ">=")
        ub_rows = np.concatenate([le, ge])
        flip = np.concatenate([np.ones(le.size), -np.ones(ge.size)])
        A_ub = sparse.diags(flip) @ A[ub_rows] if ub_rows.size else None
        b_ub = flip * rhs[ub_rows] if ub_rows.size else None
        A_eq = A[eq] if eq.size else None
        b_eq = rhs[eq] if eq.size else None
        bounds = np.column_stack([
            np.where(np.isinf(model.lb), None, model.lb),
            np.where(np.isinf(model.ub), None, model.ub),
        ])
        res = linprog(
            np.asarray(model.cost), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
            bounds=bounds, method="highs",
            options={"primal_feasibility_tolerance": feas_tol, "dual_feasibility_tolerance": feas_tol},
        )
        status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, ERROR)
        if status != OPTIMAL:
            return Solution(status, message=res.message, model=model)
        x = np.asarray(res.x, dtype=float)
        duals = None
        if with_duals:
            d = np.zeros(model.n_rows)
            if eq.size:
                d[eq] = res.eqlin.marginals
            if ub_rows.size:
                d[ub_rows] = flip * res.ineqlin.marginals
            duals = dict(zip(model.row_names, d.tolist()))
        return Solution(status, model.objective_value(x), x, duals, 0.0, res.message, model)


def _scipy_constraints(model: MilpModel):
    if not model.n_rows:
        return []
    rhs = np.asarray(model.row_rhs, dtype=float)
    sense = np.asarray(model.row_sense)
    lo = np.where(sense == "<=", -np.inf, rhs)
    hi = np.where(sense == ">=", np.inf, rhs)
    return [LinearConstraint(model.matrix(), lo, hi)]


class DenseSimplexBackend:
    """Two-phase primal simplex on a dense tableau (Bland's rule).

    Only suitable for small LPs.  Bounds are turned into rows, free
    columns are split, and the dual of each original row is recovered from
    the final basis.
    """

    name = "simplex"

    def __init__(self, tol: float = 1e-9, max_iter: int = 50_000):
        self.tol = tol
        self.max_iter = max_iter

    def solve_milp(self, model: MilpModel, gap: float, feas_tol: float) -> Solution:
        if model.binary_indices().size:
            raise SolverError("the dense simplex backend solves LPs only; fix the binaries first")
        return self.solve_lp(model, feas_tol, with_duals=False)

    def solve_lp(self, model: MilpModel, feas_tol: float, with_duals: bool = True) -> Solution:
        n = model.n_cols
        lb = np.asarray(model.lb, dtype=float)
        ub = np.asarray(model.ub, dtype=float)
        c = np.asarray(model.cost, dtype=float)
        A = model.matrix().toarray() if model.n_rows else np.zeros((0, n))
        rhs = np.asarray(model.row_rhs, dtype=float)
        sense = list(model.row_sense)

        # x = lb + x' for finite lb; x = ub - x' for lb=-inf, ub finite; free split.
        cols = []  # (orig index, sign, shift)
        shift = np.zeros(n)
        for j in range(n):
            if np.isfinite(lb[j]):
                cols.append((j, 1.0))
                shift[j] = lb[j]
            elif np.isfinite(ub[j]):
                cols.append((j, -1.0))
                shift[j] = ub[j]
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        T = np.zeros((n, len(cols)))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        A2 = A @ T
        b2 = rhs - A @ shift
        c2 = c @ T
        rows_A, rows_b, rows_s = [A2], [b2], list(sense)
        # finite upper bounds on shifted columns
        extra = []
        for k, (j, s) in enumerate(cols):
            if s > 0 and np.isfinite(lb[j]) and np.isfinite(ub[j]):
                extra.append((k, ub[j] - lb[j]))
        if extra:
            E = np.zeros((len(extra), len(cols)))
            for r, (k, cap) in enumerate(extra):
                E[r, k] = 1.0
            rows_A.append(E)
            rows_b.append(np.array([cap for _, cap in extra]))
            rows_s += ["<="] * len(extra)
        Aall = np.vstack(rows_A) if rows_A else np.zeros((0, len(cols)))
        ball = np.concatenate(rows_b) if rows_b else np.zeros(0)
        res = _two_phase(Aall, ball, rows_s, c2, self.tol, self.max_iter)
        if res[0] != OPTIMAL:
            return Solution(res[0], message="dense simplex: " + res[0], model=model)
        _, z, y = res
        x = shift + T @ z
        duals = None
        if with_duals:
            duals = dict(zip(model.row_names, y[: model.n_rows].tolist()))
        return Solution(OPTIMAL, model.objective_value(x), x, duals, 0.0, "dense simplex", model)


def _two_phase(A, b, senses, c, tol, max_iter):
    """min c z, A z (senses) b, z >= 0.  Returns (status, z, y) with y = d obj / d b."""
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    sign = np.ones(m)
    senses = list(senses)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            sign[i] = -1
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]
    n_slack = sum(1 for s in senses if s != "=")
    n_art = sum(1 for s in senses if s != "<=")
    N = n + n_slack + n_art
    tab = np.zeros((m, N))
    tab[:, :n] = A
    basis = np.zeros(m, dtype=int)
    k_s, k_a = n, n + n_slack
    art = []
    for i, s in enumerate(senses):
        if s == "<=":
            tab[i, k_s] = 1.0
            basis[i] = k_s
            k_s += 1
        elif s == ">=":
            tab[i, k_s] = -1.0
            k_s += 1
            tab[i, k_a] = 1.0
            basis[i] = k_a
            art.append(k_a)
            k_a += 1
        else:
            tab[i, k_a] = 1.0
            basis[i] = k_a
            art.append(k_a)
            k_a += 1
    rhs = b.astype(float)
    allowed = np.ones(N, dtype=bool)

    def run(cost):
        nonlocal tab, rhs
        for _ in range(max_iter):
            cb = cost[basis]
            red = cost - cb @ tab
            red[~allowed] = 0.0
            cand = np.flatnonzero(red < -tol)
            if cand.size == 0:
                return OPTIMAL
            e = cand[0]
            col = tab[:, e]
            pos = col > tol
            if not pos.any():
                return UNBOUNDED
            ratios = np.full(m, np.inf)
            ratios[pos] = rhs[pos] / col[pos]
            rmin = ratios.min()
            tied = np.flatnonzero(ratios <= rmin + tol * max(1.0, abs(rmin)))
            r = tied[np.argmin(basis[tied])]
            piv = tab[r, e]
            tab[r] /= piv
            rhs[r] /= piv
            for i in range(m):
                if i != r and tab[i, e] != 0.0:
                    f = tab[i, e]
                    tab[i] -= f * tab[r]
                    rhs[i] -= f * rhs[r]
            basis[r] = e
        return ERROR

    if art:
        c1 = np.zeros(N)
        c1[art] = 1.0
        st = run(c1)
        if st != OPTIMAL or rhs @ c1[basis] > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
            return (INFEASIBLE, None, None)
        # drive remaining artificials out of the basis where possible
        for i in range(m):
            if basis[i] in art:
                nz = np.flatnonzero(np.abs(tab[i, : n + n_slack]) > tol)
                if nz.size:
                    e = nz[0]
                    piv = tab[i, e]
                    tab[i] /= piv
                    rhs[i] /= piv
                    for k in range(m):
                        if k != i and tab[k, e] != 0.0:
                            f = tab[k, e]
                            tab[k] -= f * tab[i]
                            rhs[k] -= f * rhs[i]
                    basis[i] = e
        allowed[art] = False
    c2 = np.zeros(N)
    c2[:n] = c
    st = run(c2)
    if st != OPTIMAL:
        return (st, None, None)
    z = np.zeros(N)
    z[basis] = rhs
    # duals from the original (sign-adjusted) constraint matrix restricted to the basis
    full = np.zeros((m, N))
    full[:, :n] = A
    k_s, k_a = n, n + n_slack
    for i, s in enumerate(senses):
        if s == "<=":
            full[i, k_s] = 1.0
            k_s += 1
        elif s == ">=":
            full[i, k_s] = -1.0
            k_s += 1
            full[i, k_a] = 1.0
            k_a += 1
        else:
            full[i, k_a] = 1.0
            k_a += 1
    B = full[:, basis]
    y, *_ = np.linalg.lstsq(B.T, c2[basis], rcond=None)
    return (OPTIMAL, z[:n], y * sign)


_BACKENDS = {"highs": HighsBackend, "simplex": DenseSimplexBackend}


def get_backend(name: str | None = None):
    name = (name or os.environ.get("GASLIGHT_SOLVER") or "highs").lower()
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown solver backend {name!r}; choose from {sorted(_BACKENDS)}") from None


def _check_feasible(model: MilpModel, sol: Solution, feas_tol: float) -> None:
    if sol.status in (OPTIMAL, GAP_LIMIT) and model.n_rows:
        worst = float(model.row_violation(sol.x).max())
        scale = 1e3 * feas_tol * max(1.0, float(np.abs(model.row_rhs).max()))
        if worst > scale:
            log.warning("%s: max row violation %.3g after solve", model.name, worst)


def solve_milp(model: MilpModel, gap: float = DEFAULT_GAP, backend=None,
               feas_tol: float = DEFAULT_FEAS_TOL) -> Solution:
    """Solve ``model`` to relative optimality ``gap``.

    Infeasible or unbounded models come back with that status; callers
    decide whether to raise.
    """
    model.validate()
    be = backend if not isinstance(backend, (str, type(None))) else get_backend(backend)
    if model.n_cols == 0:
        return Solution(OPTIMAL, model.obj_offset, np.zeros(0), None, 0.0, "empty model", model)
    sol = be.solve_milp(model, gap, feas_tol)
    _check_feasible(model, sol, feas_tol)
    return sol


def solve_lp_fixed(model: MilpModel, binary_values: Mapping | np.ndarray | Solution | None = None,
                   backend=None, feas_tol: float = DEFAULT_FEAS_TOL) -> Solution:
    """Fix every binary column and solve the remaining LP with row duals.

    ``binary_values`` maps column index or id to 0/1, or is a MILP
    :class:`Solution` whose integer assignment is reused.
    """
    bins = model.binary_indices()
    if isinstance(binary_values, Solution):
        binary_values = binary_values.binary_assignment()
    assign: dict[int, float] = {}
    if binary_values is not None:
        if isinstance(binary_values, np.ndarray):
            binary_values = {int(i): float(binary_values[k]) for k, i in enumerate(bins)}
        for k, v in binary_values.items():
            assign[model.col(k)] = float(v)
    missing = [model.col_names[i] for i in bins if i not in assign]
    if missing:
        raise SolverError(f"assignment is missing binaries: {missing[:5]}")
    bad = [model.col_names[i] for i, v in assign.items() if v not in (0.0, 1.0)]
    if bad:
        raise SolverError(f"assignment has non-0/1 values for {bad[:5]}")
    lp = MilpModel(
        name=model.name + ":lp", col_names=list(model.col_names), lb=list(model.lb), ub=list(model.ub),
        cost=list(model.cost), binary=[False] * model.n_cols, row_names=list(model.row_names),
        row_cols=model.row_cols, row_coefs=model.row_coefs, row_sense=list(model.row_sense),
        row_rhs=list(model.row_rhs), obj_offset=model.obj_offset,
    )
    for i, v in assign.items():
        lp.lb[i] = lp.ub[i] = v
    be = backend if not isinstance(backend, (str, type(None))) else get_backend(backend)
    sol = be.solve_lp(lp, feas_tol, with_duals=True)
    if sol.status != OPTIMAL:
        raise SolverError(f"{model.name}: LP with fixed binaries is {sol.status}")
    _check_feasible(lp, sol, feas_tol)
    sol.model = model
    return sol
