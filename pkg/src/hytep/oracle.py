"""Exhaustive ground-truth planner for tiny cases.

Every candidate (line or hydrogen route) is either never built or built in
exactly one period; each combination is priced by solving its operation LP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterator

from .formulation import CostBreakdown
from .grid_model import NetworkCase
from .operation import InvestmentPlan, OperationResult, evaluate_plan

DEFAULT_CAP = 4096


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True)
class PlanEnumeration:
    n_candidates: int
    n_periods: int

    @property
    def total(self) -> int:
        return (self.n_periods + 1) ** self.n_candidates


def _candidates(case: NetworkCase, include_routes: bool) -> tuple[list[int], list[int]]:
    lines = [ln.id for ln in case.candidate_lines]
    routes = [h.id for h in case.hydrogen_routes] if include_routes else []
    return lines, routes


def plan_count(case: NetworkCase, include_routes: bool = True) -> int:
    lines, routes = _candidates(case, include_routes)
    return PlanEnumeration(len(lines) + len(routes), case.horizon.n_periods).total


def enumerate_plans(case: NetworkCase, include_routes: bool = True,
                    cap: int = DEFAULT_CAP) -> Iterator[InvestmentPlan]:
    """Yield every build-consistent plan once.

    Order: odometer over candidate lines then routes (case order), each digit
    running never, period 0, period 1, ...; the last candidate varies fastest.
    With ``include_routes=False`` routes are never built.
    """
    lines, routes = _candidates(case, include_routes)
    total = plan_count(case, include_routes)
    if total > cap:
        raise EnumerationCapError(f"{total} plans exceed the enumeration cap of {cap}")
    choices = [None] + list(range(case.horizon.n_periods))
    for combo in itertools.product(choices, repeat=len(lines) + len(routes)):
        yield InvestmentPlan.from_build_periods(
            case, dict(zip(lines, combo[:len(lines)])), dict(zip(routes, combo[len(lines):])))


@dataclass
class OracleResult:
    plan: InvestmentPlan
    costs: CostBreakdown
    operation: OperationResult
    plans_evaluated: int

    @property
    def total(self) -> float:
        return self.costs.total


def brute_force_optimum(case: NetworkCase, model: str = "tep_h", cap: int = DEFAULT_CAP) -> OracleResult:
    """Cheapest plan by enumeration; the first plan in enumeration order wins ties.

    ``model="tep_t"`` drops the hydrogen routes from the case, so the operation
    LPs match the line-only model.
    """
    if model not in ("tep_h", "tep_t"):
        raise ValueError(f"unknown model {model!r}")
    if model == "tep_t":
        case = replace(case, hydrogen_routes=())
    best: OracleResult | None = None
    n = 0
    for plan in enumerate_plans(case, cap=cap):
        res = evaluate_plan(case, plan)
        n += 1
        if best is None or res.costs.total < best.costs.total:
            best = OracleResult(plan, res.costs, res, 0)
    assert best is not None  # the empty plan is always enumerated
    best.plans_evaluated = n
    return best


__all__ = ["DEFAULT_CAP", "EnumerationCapError", "OracleResult", "PlanEnumeration", "brute_force_optimum",
           "enumerate_plans", "plan_count"]
