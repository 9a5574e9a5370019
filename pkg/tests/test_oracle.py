from dataclasses import replace

import numpy as np
import pytest

from hytep.formulation import build_tep_h, route_build_cost
from hytep.operation import InvestmentPlan, evaluate_plan
from hytep.oracle import EnumerationCapError, brute_force_optimum, enumerate_plans, plan_count
from hytep.solver import solve_milp
from random_cases import random_case


def _signature(plan):
    return (plan.line_built.tobytes(), plan.h_built.tobytes())


def test_counts(fig2, six_bus):
    empty = replace(fig2, hydrogen_routes=())
    assert len(list(enumerate_plans(empty))) == 1
    assert len(list(enumerate_plans(fig2))) == 2  # one period: never or now
    one = replace(six_bus, candidate_lines=(), hydrogen_routes=six_bus.hydrogen_routes[:1])
    plans = list(enumerate_plans(one))
    assert len(plans) == 3
    assert [p.build_period("route", 1) for p in plans] == [None, 0, 1]
    two = replace(six_bus, candidate_lines=())
    assert len(list(enumerate_plans(two))) == 9
    assert plan_count(six_bus) == 81


def test_exhaustive_and_duplicate_free():
    for seed in range(6):
        case = random_case(seed)
        plans = list(enumerate_plans(case))
        n = len(case.candidate_lines) + len(case.hydrogen_routes)
        assert len(plans) == (case.horizon.n_periods + 1) ** n
        assert len({_signature(p) for p in plans}) == len(plans)
        for p in plans:
            p.check(case)
        # deterministic order
        assert [_signature(p) for p in plans] == [_signature(p) for p in enumerate_plans(case)]


def test_cap(six_bus):
    with pytest.raises(EnumerationCapError, match="cap"):
        list(enumerate_plans(six_bus, cap=80))
    with pytest.raises(EnumerationCapError):
        brute_force_optimum(six_bus, cap=10)


def test_fig2_builds_route(fig2):
    res = brute_force_optimum(fig2)
    assert res.plan.routes_built == [1]
    # the two plan totals, written out: build = investment + extra fuel; skip = 5 p.u. shed at penalty M
    skip = evaluate_plan(fig2, InvestmentPlan.empty(fig2)).costs.total
    assert skip == pytest.approx(5.0 * fig2.shed_penalty + 0.0, rel=1e-9)
    build_cost = route_build_cost(fig2, 0, 0)
    fuel = 0.00005 * fig2.annualization * 9.5  # gas covers the 9.5 p.u. line export at the peak
    assert res.total == pytest.approx(build_cost + fuel, rel=1e-9)


def test_fig2_prohibitive_route(fig2):
    # capital at or above the penalty for the 5 p.u. that would otherwise go unserved
    pricey = replace(fig2.hydrogen_routes[0], pipeline_cost=5.0 * fig2.shed_penalty)
    case = replace(fig2, hydrogen_routes=(pricey,))
    res = brute_force_optimum(case)
    assert res.plan.routes_built == []
    assert res.costs.shed_penalty_value == pytest.approx(5.0 * fig2.shed_penalty)


def test_zero_candidates(fig2):
    case = replace(fig2, hydrogen_routes=())
    res = brute_force_optimum(case)
    assert res.plans_evaluated == 1
    assert res.total == pytest.approx(evaluate_plan(case, InvestmentPlan.empty(case)).objective)


def test_tie_break_follows_enumeration_order(fig2):
    # two identical routes, only one needed: the first optimal plan in enumeration order wins
    r1 = fig2.hydrogen_routes[0]
    case = replace(fig2, hydrogen_routes=(r1, replace(r1, id=2)))
    res = brute_force_optimum(case)
    totals = [evaluate_plan(case, p).costs.total for p in enumerate_plans(case)]
    first = int(np.argmin(totals))
    expected = list(enumerate_plans(case))[first]
    assert _signature(res.plan) == _signature(expected)
    assert len(res.plan.routes_built) == 1


def test_tep_t_enumeration_not_cheaper():
    for seed in range(6):
        case = random_case(seed)
        assert brute_force_optimum(case, "tep_t").total >= brute_force_optimum(case).total - 1e-9


def test_milp_matches_oracle_on_small_cases(fig2, fig3):
    for case in (fig2, fig3, random_case(2), random_case(13)):
        ref = brute_force_optimum(case)
        sol = solve_milp(build_tep_h(case), gap_target=1e-3)
        assert abs(sol.objective - ref.total) <= 1e-3 * abs(ref.total)


def test_unknown_model(fig2):
    with pytest.raises(ValueError):
        brute_force_optimum(fig2, "tep_x")
