"""Best-first branch-and-bound over LP relaxations, with depth-first plunging."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

import numpy as np

from .model import MilpModel, check_solution
from .simplex import FEAS_TOL, LpSolution, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6
GAP_EPS = 1e-9


class SolverError(RuntimeError):
    pass


@dataclass
class MilpSolution:
    status: str  # "optimal_within_gap" | "infeasible" | "node_limit"
    incumbent: LpSolution | None
    best_bound: float
    gap: float
    nodes_explored: int
    # (node, best bound, incumbent objective, gap) after every node
    trace: list[tuple[int, float, float, float]] = field(default_factory=list, repr=False)

    @property
    def objective(self) -> float:
        return self.incumbent.objective if self.incumbent is not None else np.inf

    @property
    def values(self) -> np.ndarray:
        return self.incumbent.values


def relative_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return np.inf
    return max(0.0, (incumbent - bound) / max(abs(incumbent), GAP_EPS))


def _most_fractional(x: np.ndarray, int_cols: np.ndarray) -> int:
    if int_cols.size == 0:
        return -1
    v = x[int_cols]
    frac = np.abs(v - np.round(v))
    k = int(np.argmax(frac))  # first maximum: ties go to the lowest column index
    return int(int_cols[k]) if frac[k] > INT_TOL else -1


def solve_milp(model: MilpModel, gap_target: float = 1e-3, node_limit: int = 100_000,
               progress_every: int = 0) -> MilpSolution:
    """Minimise ``model`` to within relative ``gap_target``.

    Objective values are reported in the model's own sense; internally a
    maximisation is handled as minimisation of the negated objective.
    """
    if not gap_target > 0:
        raise ValueError("gap_target must be positive")
    sign = -1.0 if model.maximize else 1.0
    int_cols = np.flatnonzero(model.integer)

    def lp(lo, hi) -> LpSolution:
        return solve_lp(model, lb=lo, ub=hi)

    root = lp(model.lb, model.ub)
    if root.status == "infeasible":
        return MilpSolution("infeasible", None, np.inf, np.inf, 1)
    if root.status == "unbounded":
        raise SolverError("LP relaxation is unbounded")

    incumbent: LpSolution | None = None
    inc_val = np.inf
    # lowest bound among nodes dropped only because they were within the gap
    pruned_floor = np.inf
    trace: list[tuple[int, float, float, float]] = []
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    seq = 0
    nodes = 1

    def try_incumbent(sol: LpSolution, lo: np.ndarray, hi: np.ndarray) -> None:
        nonlocal incumbent, inc_val
        # re-solve with the integer columns pinned so binaries are exact
        lo2, hi2 = lo.copy(), hi.copy()
        r = np.round(sol.values[int_cols])
        lo2[int_cols] = r
        hi2[int_cols] = r
        polished = lp(lo2, hi2)
        cand = polished if polished.status == "optimal" else sol
        val = sign * cand.objective
        if val < inc_val:
            incumbent, inc_val = cand, val
            log.debug("new incumbent %.10g", cand.objective)

    def prune(bound: float) -> bool:
        nonlocal pruned_floor
        if not np.isfinite(inc_val) or relative_gap(inc_val, bound) > gap_target:
            return False
        if bound < inc_val:
            pruned_floor = min(pruned_floor, bound)
        return True

    def global_bound(extra: float = np.inf) -> float:
        open_min = heap[0][0] if heap else np.inf
        return min(open_min, extra, pruned_floor, inc_val)

    current: tuple[np.ndarray, np.ndarray, LpSolution] | None = (model.lb.copy(), model.ub.copy(), root)
    status = "optimal_within_gap"
    while True:
        if current is None:
            while heap and prune(heap[0][0]):
                heapq.heappop(heap)
            if not heap:
                break
            if nodes >= node_limit:
                status = "node_limit"
                break
            _, _, lo, hi = heapq.heappop(heap)
            current = (lo, hi, lp(lo, hi))
            nodes += 1
        lo, hi, sol = current
        current = None
        if sol.status == "optimal":
            bound = sign * sol.objective
            if not prune(bound):
                j = _most_fractional(sol.values, int_cols)
                if j < 0:
                    try_incumbent(sol, lo, hi)
                else:
                    v = sol.values[j]
                    down_hi = hi.copy()
                    down_hi[j] = np.floor(v)
                    up_lo = lo.copy()
                    up_lo[j] = np.ceil(v)
                    children = [(lo, down_hi), (up_lo, hi)]
                    # plunge into the child nearer the LP value, queue the other
                    first = 1 if v - np.floor(v) >= 0.5 else 0
                    for k in (1 - first, first):
                        c_lo, c_hi = children[k]
                        if k == first and nodes < node_limit:
                            current = (c_lo, c_hi, lp(c_lo, c_hi))
                            nodes += 1
                        else:
                            heapq.heappush(heap, (bound, seq, c_lo, c_hi))
                            seq += 1
        plunge = np.inf
        if current is not None and current[2].status == "optimal":
            plunge = sign * current[2].objective
        bb = global_bound(plunge)
        gap = relative_gap(inc_val, bb)
        trace.append((nodes, sign * bb, sign * inc_val, gap))
        if progress_every and nodes % progress_every == 0:
            log.info("node %d bound %.10g incumbent %.10g gap %.3g", nodes, sign * bb, sign * inc_val, gap)
        if incumbent is not None and gap <= gap_target:
            if current is not None:
                pruned_floor = min(pruned_floor, plunge)
            break

    bb = global_bound()
    if incumbent is None:
        if status == "node_limit":
            return MilpSolution("node_limit", None, sign * bb, np.inf, nodes, trace)
        return MilpSolution("infeasible", None, np.inf, np.inf, nodes, trace)
    violations = check_solution(model, incumbent.values, tol=FEAS_TOL, int_tol=INT_TOL)
    if violations:
        raise SolverError("incumbent failed independent feasibility check: " + "; ".join(violations[:5]))
    return MilpSolution(status, incumbent, sign * bb, relative_gap(inc_val, bb), nodes, trace)
