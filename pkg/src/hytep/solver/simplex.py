"""Bounded-variable primal simplex (revised form, dense explicit basis inverse).

Rows are turned into equalities with bounded slacks, ``A x + s = b``:
``<=`` rows get ``s in [0, inf)``, ``>=`` rows ``s in (-inf, 0]`` and ``=``
rows ``s in [0, 0]``.  Rows whose slack cannot absorb the residual of the
starting point get an artificial column and phase 1 minimises their sum.

Pricing is Dantzig's rule with a two-pass (Harris) ratio test; after a run of
degenerate pivots the solver switches to Bland's rule for the rest of the
phase, which rules out cycling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import MilpModel

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-9
_HARRIS_TOL = 1e-9
_REFACTOR_EVERY = 64
_STALL_LIMIT = 50

BASIC, AT_LOWER, AT_UPPER, FREE_ZERO = 0, 1, 2, 3


class LpNumericalError(RuntimeError):
    """The simplex could not finish reliably (singular basis, iteration cap, drift)."""


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: np.ndarray
    objective: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Core:
    def __init__(self, A: np.ndarray, b: np.ndarray, L: np.ndarray, U: np.ndarray):
        self.A, self.b, self.L, self.U = A, b, L, U
        self.m, self.N = A.shape
        self.iterations = 0

    def start(self, basis: np.ndarray, status: np.ndarray, x: np.ndarray) -> None:
        self.basis = basis.copy()
        self.status = status.copy()
        self.x = x.copy()
        self.refactor()

    def refactor(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise LpNumericalError("singular basis") from None
        nb = self.status != BASIC
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs
        self._since = 0

    def run(self, cost: np.ndarray, max_iter: int) -> str:
        m = self.m
        if m == 0:
            return self._run_unconstrained(cost)
        scale = max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        dtol = 1e-10 * scale
        bland = False
        stall = 0
        L, U, A = self.L, self.U, self.A
        while True:
            if self.iterations >= max_iter:
                raise LpNumericalError(f"iteration limit {max_iter} reached")
            if self._since >= _REFACTOR_EVERY:
                self.refactor()
            basis, status, x = self.basis, self.status, self.x
            y = cost[basis] @ self.Binv
            d = cost - y @ A
            up = ((status == AT_LOWER) | (status == FREE_ZERO)) & (d < -dtol) & (U > L)
            down = ((status == AT_UPPER) | (status == FREE_ZERO)) & (d > dtol) & (U > L)
            elig = up | down
            if not elig.any():
                return "optimal"
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), 0.0)))
            direction = 1.0 if up[q] else -1.0
            alpha = self.Binv @ A[:, q]
            rate = -direction * alpha  # d x_B / d t
            xb, lb, ub = x[basis], L[basis], U[basis]
            dec = rate < -_PIVOT_TOL
            inc = rate > _PIVOT_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                t_exact = np.full(m, np.inf)
                t_exact[dec] = (xb[dec] - lb[dec]) / -rate[dec]
                t_exact[inc] = (ub[inc] - xb[inc]) / rate[inc]
            t_exact = np.where(np.isnan(t_exact), np.inf, t_exact)
            np.maximum(t_exact, 0.0, out=t_exact)
            if bland:
                t_min = t_exact.min() if m else np.inf
                if np.isfinite(t_min):
                    ties = np.flatnonzero(t_exact <= t_min + 1e-12)
                    r = int(ties[np.argmin(basis[ties])])
                else:
                    r = -1
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    t_relax = np.full(m, np.inf)
                    t_relax[dec] = (xb[dec] - lb[dec] + _HARRIS_TOL) / -rate[dec]
                    t_relax[inc] = (ub[inc] - xb[inc] + _HARRIS_TOL) / rate[inc]
                t_relax = np.where(np.isnan(t_relax), np.inf, t_relax)
                t_max = t_relax.min() if m else np.inf
                if np.isfinite(t_max):
                    cand = np.flatnonzero(t_exact <= t_max)
                    r = int(cand[np.argmax(np.abs(rate[cand]))])
                else:
                    r = -1
            t_leave = t_exact[r] if r >= 0 else np.inf
            t_flip = U[q] - L[q]
            if not np.isfinite(t_leave) and not np.isfinite(t_flip):
                return "unbounded"
            self.iterations += 1
            self._since += 1
            if t_flip <= t_leave:
                t = t_flip
                x[basis] = xb + rate * t
                if direction > 0:
                    x[q], status[q] = U[q], AT_UPPER
                else:
                    x[q], status[q] = L[q], AT_LOWER
            else:
                t = t_leave
                x[basis] = xb + rate * t
                x[q] = x[q] + direction * t
                leaving = basis[r]
                if rate[r] < 0:
                    x[leaving], status[leaving] = L[leaving], AT_LOWER
                else:
                    x[leaving], status[leaving] = U[leaving], AT_UPPER
                basis[r] = q
                status[q] = BASIC
                piv = alpha[r]
                if abs(piv) < 1e-11:
                    raise LpNumericalError("pivot element too small")
                row = self.Binv[r] / piv
                self.Binv -= np.outer(alpha, row)
                self.Binv[r] = row
            if t <= 1e-12:
                stall += 1
                if stall > _STALL_LIMIT and not bland:
                    log.debug("simplex: degenerate stall, switching to Bland's rule")
                    bland = True
            else:
                stall = 0

    def _run_unconstrained(self, cost: np.ndarray) -> str:
        for j in range(self.N):
            c = cost[j]
            if c > 0:
                if not np.isfinite(self.L[j]):
                    return "unbounded"
                self.x[j], self.status[j] = self.L[j], AT_LOWER
            elif c < 0:
                if not np.isfinite(self.U[j]):
                    return "unbounded"
                self.x[j], self.status[j] = self.U[j], AT_UPPER
        return "optimal"


def _initial_point(L: np.ndarray, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.zeros(L.shape)
    status = np.full(L.shape, FREE_ZERO, dtype=np.int8)
    lo = np.isfinite(L)
    hi = np.isfinite(U) & ~lo
    x[lo], status[lo] = L[lo], AT_LOWER
    x[hi], status[hi] = U[hi], AT_UPPER
    return x, status


def solve_lp(model: MilpModel, lb: np.ndarray | None = None, ub: np.ndarray | None = None,
             max_iter: int | None = None) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality ignored).

    ``lb``/``ub`` override the column bounds, which is how branch-and-bound
    nodes are expressed.  Empty rows and fixed columns are removed before the
    simplex starts.
    """
    lb = model.lb if lb is None else np.asarray(lb, dtype=float)
    ub = model.ub if ub is None else np.asarray(ub, dtype=float)
    n = model.n_cols
    c_full = -model.obj if model.maximize else model.obj.astype(float)

    def finish(status: str, xs: np.ndarray | None, iters: int) -> LpSolution:
        if xs is None:
            xs = np.full(n, np.nan)
            return LpSolution(status, xs, np.nan, iters)
        obj = float(model.obj @ xs) + model.objective_offset
        return LpSolution(status, xs, obj, iters)

    if np.any(lb > ub + FEAS_TOL):
        return finish("infeasible", None, 0)

    fixed = (ub - lb) <= 1e-12
    keep = np.flatnonzero(~fixed)
    x_all = np.where(fixed, lb, 0.0)
    A_csr = model.matrix()
    b = model.rhs - A_csr @ x_all
    A_red = A_csr[:, keep]
    nnz = np.diff(A_red.indptr)
    sense = np.array(model.sense, dtype="<U1")
    for i in np.flatnonzero(nnz == 0):
        s, bi = sense[i], b[i]
        tol = FEAS_TOL * max(1.0, abs(model.rhs[i]))
        if (s == "L" and bi < -tol) or (s == "G" and bi > tol) or (s == "E" and abs(bi) > tol):
            return finish("infeasible", None, 0)
    live = np.flatnonzero(nnz > 0)
    A = A_red[live].toarray()
    b = b[live]
    sense = sense[live]
    m, nk = A.shape
    c = c_full[keep]
    Ls, Us = lb[keep], ub[keep]

    # slack bounds by row sense
    sL = np.where(sense == "G", -np.inf, 0.0)
    sU = np.where(sense == "L", np.inf, 0.0)
    x0, st0 = _initial_point(Ls, Us)
    resid = b - A @ x0
    slack_basic = (resid >= sL - 1e-12) & (resid <= sU + 1e-12)
    need_art = np.flatnonzero(~slack_basic)
    n_art = len(need_art)
    sval = np.clip(resid, sL, sU)
    art_sign = np.sign(resid[need_art] - sval[need_art])
    art_sign[art_sign == 0] = 1.0

    Art = np.zeros((m, n_art))
    Art[need_art, np.arange(n_art)] = art_sign
    Afull = np.hstack([A, np.eye(m), Art])
    N = nk + m + n_art
    L = np.concatenate([Ls, sL, np.zeros(n_art)])
    U = np.concatenate([Us, sU, np.full(n_art, np.inf)])
    x = np.concatenate([x0, np.where(slack_basic, resid, sval), np.abs(resid[need_art] - sval[need_art])])
    status = np.concatenate([st0, np.zeros(m, np.int8), np.zeros(n_art, np.int8)])
    basis = np.arange(nk, nk + m)
    slack_nb = np.flatnonzero(~slack_basic)
    for i in slack_nb:
        j = nk + i
        status[j] = AT_LOWER if sval[i] == sL[i] else AT_UPPER
    basis[need_art] = nk + m + np.arange(n_art)

    core = _Core(Afull, b, L, U)
    core.start(basis, status, x)
    if max_iter is None:
        max_iter = 50 * (m + N) + 1000

    if n_art:
        c1 = np.zeros(N)
        c1[nk + m:] = 1.0
        res = core.run(c1, max_iter)
        if res != "optimal":
            raise LpNumericalError("phase 1 reported unbounded")
        core.refactor()
        infeas = float(np.sum(core.x[nk + m:]))
        if infeas > FEAS_TOL * max(1.0, float(np.max(np.abs(b))) if m else 1.0):
            return finish("infeasible", None, core.iterations)
        core.U[nk + m:] = 0.0
        core.x[nk + m:] = np.clip(core.x[nk + m:], 0.0, 0.0)
        core.refactor()

    c2 = np.concatenate([c, np.zeros(m + n_art)])
    res = core.run(c2, max_iter)
    if res == "unbounded":
        return finish("unbounded", None, core.iterations)
    if m:
        core.refactor()
    xb = core.x[core.basis] if m else np.zeros(0)
    lo_b, hi_b = core.L[core.basis] if m else xb, core.U[core.basis] if m else xb
    viol = max(float(np.max(lo_b - xb, initial=0.0)), float(np.max(xb - hi_b, initial=0.0)))
    if viol > FEAS_TOL * max(1.0, float(np.max(np.abs(b), initial=0.0))):
        raise LpNumericalError(f"basic solution drifted {viol:.3g} outside its bounds")
    # snap basics sitting a hair outside their bounds
    core.x[:nk] = np.clip(core.x[:nk], Ls, Us)
    x_all = x_all.copy()
    x_all[keep] = core.x[:nk]
    return finish("optimal", x_all, core.iterations)
