"""Assembly of the hydrogen-aware (TEP-H) and traditional (TEP-T) planning models.

Column names follow ``<symbol>[entity,hour,day,period]`` for operating
variables and ``<symbol>[entity,period]`` for investment binaries, all indices
1-based, e.g. ``pG[3,14,2,1]`` or ``uNL[7,2]``.  Row names use the same index
pattern with the prefixes listed in :data:`ROW_PREFIXES`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, NamedTuple

import numpy as np

from .grid_model import NetworkCase, validate
from .solver.model import MilpModel, ModelBuilder

if TYPE_CHECKING:
    from .operation import InvestmentPlan

# VarKey.kind -> column-name symbol
SYMBOLS = {
    "gen_existing": "pG", "gen_new": "pNG",
    "ren_out": "pR", "ren_new_out": "pNR", "ren_cur": "pRCUR", "ren_new_cur": "pNRCUR",
    "flow_line": "pL", "flow_newline": "pNL", "angle": "theta", "shed": "pSD",
    "h_flow": "hH", "p_elec": "pE", "p_fc": "pF", "p_comp": "pC",
    "build_line": "vNL", "online_line": "uNL", "build_h": "vH", "online_h": "uH",
}
BINARY_KINDS = ("build_line", "online_line", "build_h", "online_h")

ROW_PREFIXES = {
    "bal": "nodal balance", "curt": "curtailment <= output", "dc": "DC flow, existing line",
    "dcNL": "DC flow, candidate online (fixed plan)",
    "bigMup": "big-M upper", "bigMlo": "big-M lower", "capNLup": "candidate rating upper",
    "capNLlo": "candidate rating lower", "elz": "electrolyzer conversion", "fc": "fuel-cell conversion",
    "comp": "compressor power", "capH": "pipeline capacity", "capE": "electrolyzer rating",
    "capF": "fuel-cell rating", "onsum": "online requires a build", "bld": "build event",
    "bld1": "first-period build", "mono": "online stays online", "once": "build at most once",
}


class PreconditionError(ValueError):
    pass


class VarKey(NamedTuple):
    kind: str
    entity: int
    period: int
    day: int | None = None
    hour: int | None = None

    def name(self) -> str:
        sym = SYMBOLS[self.kind]
        if self.day is None:
            return f"{sym}[{self.entity},{self.period + 1}]"
        return f"{sym}[{self.entity},{self.hour + 1},{self.day + 1},{self.period + 1}]"


@dataclass(frozen=True)
class CostBreakdown:
    generation: float
    new_lines: float
    hydrogen: float
    shed_penalty_value: float
    total: float

    @classmethod
    def from_parts(cls, generation: float, new_lines: float, hydrogen: float, shed: float) -> "CostBreakdown":
        return cls(generation, new_lines, hydrogen, shed, generation + new_lines + hydrogen + shed)

    def as_dict(self) -> dict[str, float]:
        return {"generation": self.generation, "new_lines": self.new_lines, "hydrogen": self.hydrogen,
                "shed_penalty_value": self.shed_penalty_value, "total": self.total}


# ---------------------------------------------------------------------------
# cost evaluators


def line_cost_multiplier(case: NetworkCase, ratio: float, period: int) -> float:
    """Capital plus maintenance over the remaining periods for a build in 0-based ``period``."""
    hz = case.horizon
    return 1.0 + (hz.n_periods - (period + 1) + 1) * ratio * hz.years_per_period


def line_build_cost(case: NetworkCase, line_index: int, period: int) -> float:
    ln = case.candidate_lines[line_index]
    return ln.capital_cost * line_cost_multiplier(case, ln.maintenance_ratio, period)


def route_build_cost(case: NetworkCase, route_index: int, period: int) -> float:
    # maintenance applies to the pipeline term only
    h = case.hydrogen_routes[route_index]
    return (h.pipeline_cost * line_cost_multiplier(case, h.maintenance_ratio, period)
            + h.fuelcell_cost + h.electrolyzer_cost)


def generation_cost(case: NetworkCase, dispatch: Mapping[int, np.ndarray]) -> float:
    """Production cost of thermal units; ``dispatch`` maps generator id to a (period, day, hour) array."""
    cost = {g.id: g.energy_cost for g in case.generators}
    return case.annualization * sum(cost[g] * float(np.sum(p)) for g, p in dispatch.items())


def line_investment_cost(case: NetworkCase, built: Mapping[int, np.ndarray]) -> float:
    """Candidate-line capital and maintenance; ``built`` maps line id to per-period build flags."""
    pos = {ln.id: i for i, ln in enumerate(case.candidate_lines)}
    return sum(float(v[p]) * line_build_cost(case, pos[k], p)
               for k, v in built.items() for p in range(case.horizon.n_periods))


def hydrogen_investment_cost(case: NetworkCase, built: Mapping[int, np.ndarray]) -> float:
    pos = {h.id: i for i, h in enumerate(case.hydrogen_routes)}
    return sum(float(v[p]) * route_build_cost(case, pos[h], p)
               for h, v in built.items() for p in range(case.horizon.n_periods))


def shed_penalty_value(case: NetworkCase, shed: np.ndarray) -> float:
    return case.shed_penalty * float(np.sum(shed))


# ---------------------------------------------------------------------------
# model assembly


def _require_valid(case: NetworkCase) -> None:
    problems = validate(case)
    if problems:
        raise PreconditionError("invalid case: " + "; ".join(problems))


def _assemble(case: NetworkCase, *, hydrogen: bool, plan: "InvestmentPlan | None", name: str) -> MilpModel:
    hz = case.horizon
    NP, ND, T = hz.shape
    W = case.annualization
    M_shed = case.shed_penalty
    base = case.mva_base
    ab = case.angle_bound
    slack = case.slack_bus
    mb = ModelBuilder(name)
    routes = case.hydrogen_routes if hydrogen else ()
    cands = case.candidate_lines

    def var(kind, ent, p, d=None, t=None, lb=0.0, ub=np.inf, cost=0.0, integer=False):
        key = VarKey(kind, ent, p, d, t)
        return mb.add_var(key, key.name(), lb, ub, cost, integer)

    if plan is None:
        line_on = None
        h_on = None
        for kind_b, kind_u, ents, costf in (("build_line", "online_line", cands, line_build_cost),
                                            ("build_h", "online_h", routes, route_build_cost)):
            for i, e in enumerate(ents):
                for p in range(NP):
                    var(kind_b, e.id, p, lb=0, ub=1, cost=costf(case, i, p), integer=True)
                    var(kind_u, e.id, p, lb=0, ub=1, integer=True)
    else:
        line_on = plan.line_online
        h_on = plan.h_online

    for p in range(NP):
        for d in range(ND):
            for t in range(T):
                idx = f"{t + 1},{d + 1},{p + 1}"
                inj: dict[int, dict[int, float]] = {b.id: {} for b in case.buses}

                def add(bus, col, coef):
                    inj[bus][col] = inj[bus].get(col, 0.0) + coef

                for g in case.generators:
                    lo, hi = g.limits(p)
                    kind = "gen_new" if g.kind == "new" else "gen_existing"
                    add(g.bus, var(kind, g.id, p, d, t, lo, hi, W * g.energy_cost), 1.0)
                for r in case.renewables:
                    new = r.kind == "new"
                    out = var("ren_new_out" if new else "ren_out", r.id, p, d, t,
                              r.p_min, float(r.availability[p, d, t]))
                    cur = var("ren_new_cur" if new else "ren_cur", r.id, p, d, t)
                    add(r.bus, out, 1.0)
                    add(r.bus, cur, -1.0)
                    mb.add_row({cur: 1.0, out: -1.0}, "L", 0.0, f"curt[{r.id},{idx}]")
                theta = {}
                for b in case.buses:
                    lim = 0.0 if b.id == slack else ab
                    theta[b.id] = var("angle", b.id, p, d, t, -lim, lim)
                    load = float(case.load.demand[case.bus_index(b.id), p, d, t])
                    add(b.id, var("shed", b.id, p, d, t, 0.0, load, M_shed), 1.0)
                for ln in case.lines:
                    rating = float(ln.rating[p, d, t])
                    f = var("flow_line", ln.id, p, d, t, -rating, rating)
                    add(ln.to_bus, f, 1.0)
                    add(ln.from_bus, f, -1.0)
                    mb.add_row({f: 1.0, theta[ln.from_bus]: -1.0 / ln.reactance,
                                theta[ln.to_bus]: 1.0 / ln.reactance}, "E", 0.0, f"dc[{ln.id},{idx}]")
                for k, ln in enumerate(cands):
                    if line_on is not None and not line_on[k, p]:
                        continue
                    rating = float(ln.rating[p, d, t])
                    f = var("flow_newline", ln.id, p, d, t, -rating, rating)
                    add(ln.to_bus, f, 1.0)
                    add(ln.from_bus, f, -1.0)
                    tf, tt = theta[ln.from_bus], theta[ln.to_bus]
                    inv_x = 1.0 / ln.reactance
                    if line_on is not None:
                        mb.add_row({f: 1.0, tf: -inv_x, tt: inv_x}, "E", 0.0, f"dcNL[{ln.id},{idx}]")
                        continue
                    u = mb.col(VarKey("online_line", ln.id, p))
                    big_m = 2.0 * ab / ln.reactance
                    mb.add_row({f: 1.0, tf: -inv_x, tt: inv_x, u: big_m}, "L", big_m, f"bigMup[{ln.id},{idx}]")
                    mb.add_row({f: -1.0, tf: inv_x, tt: -inv_x, u: big_m}, "L", big_m, f"bigMlo[{ln.id},{idx}]")
                    mb.add_row({f: 1.0, u: -rating}, "L", 0.0, f"capNLup[{ln.id},{idx}]")
                    mb.add_row({f: -1.0, u: -rating}, "L", 0.0, f"capNLlo[{ln.id},{idx}]")
                for k, h in enumerate(routes):
                    if h_on is not None and not h_on[k, p]:
                        continue
                    hh = var("h_flow", h.id, p, d, t, 0.0, h.pipeline_capacity)
                    pe = var("p_elec", h.id, p, d, t, 0.0, h.electrolyzer_rating)
                    pf = var("p_fc", h.id, p, d, t, 0.0, h.fuelcell_rating)
                    pc = var("p_comp", h.id, p, d, t)
                    add(h.to_bus, pf, 1.0)
                    add(h.from_bus, pe, -1.0)
                    add(h.from_bus, pc, -1.0)
                    mb.add_row({pe: h.eta_e * base, hh: -1.0}, "E", 0.0, f"elz[{h.id},{idx}]")
                    mb.add_row({pf: base, hh: -h.eta_f}, "E", 0.0, f"fc[{h.id},{idx}]")
                    mb.add_row({hh: h.eta_c, pc: -base}, "E", 0.0, f"comp[{h.id},{idx}]")
                    if h_on is None:
                        u = mb.col(VarKey("online_h", h.id, p))
                        mb.add_row({hh: 1.0, u: -h.pipeline_capacity}, "L", 0.0, f"capH[{h.id},{idx}]")
                        mb.add_row({pe: 1.0, u: -h.electrolyzer_rating}, "L", 0.0, f"capE[{h.id},{idx}]")
                        mb.add_row({pf: 1.0, u: -h.fuelcell_rating}, "L", 0.0, f"capF[{h.id},{idx}]")
                for b in case.buses:
                    load = float(case.load.demand[case.bus_index(b.id), p, d, t])
                    mb.add_row(inj[b.id], "E", load, f"bal[{b.id},{idx}]")

    if plan is None:
        for kind_b, kind_u, ents in (("build_line", "online_line", cands), ("build_h", "online_h", routes)):
            for e in ents:
                v = [mb.col(VarKey(kind_b, e.id, p)) for p in range(NP)]
                u = [mb.col(VarKey(kind_u, e.id, p)) for p in range(NP)]
                for p in range(NP):
                    terms = {v[q]: 1.0 for q in range(p + 1)}
                    terms[u[p]] = terms.get(u[p], 0.0) - 1.0
                    mb.add_row(terms, "G", 0.0, f"onsum[{SYMBOLS[kind_u]}{e.id},{p + 1}]")
                    if p == 0:
                        mb.add_row({v[0]: 1.0, u[0]: -1.0}, "E", 0.0, f"bld1[{SYMBOLS[kind_b]}{e.id}]")
                    else:
                        mb.add_row({v[p]: 1.0, u[p]: -1.0, u[p - 1]: 1.0}, "G", 0.0,
                                   f"bld[{SYMBOLS[kind_b]}{e.id},{p + 1}]")
                        mb.add_row({u[p]: 1.0, u[p - 1]: -1.0}, "G", 0.0, f"mono[{SYMBOLS[kind_u]}{e.id},{p + 1}]")
                mb.add_row({c: 1.0 for c in v}, "L", 1.0, f"once[{SYMBOLS[kind_b]}{e.id}]")
        return mb.build(metadata={"kind": name, "hydrogen": hydrogen, "plan": None})

    offset_lines = line_investment_cost(case, plan.line_built_map())
    offset_h = hydrogen_investment_cost(case, plan.h_built_map()) if hydrogen else 0.0
    return mb.build(objective_offset=offset_lines + offset_h,
                    metadata={"kind": name, "hydrogen": hydrogen, "plan": plan})


def build_tep_h(case: NetworkCase) -> MilpModel:
    """Joint line/hydrogen-route expansion MILP."""
    _require_valid(case)
    return _assemble(case, hydrogen=True, plan=None, name="tep_h")


def build_tep_t(case: NetworkCase) -> MilpModel:
    """Line-only expansion MILP: no hydrogen columns, rows or costs."""
    _require_valid(case)
    return _assemble(case, hydrogen=False, plan=None, name="tep_t")


def build_operation_lp(case: NetworkCase, plan: "InvestmentPlan") -> MilpModel:
    """Operation LP with the investment decisions fixed to ``plan``.

    Offline candidates get no columns at all; online candidate lines obey the
    DC flow equality outright.  The plan's investment cost enters as the
    objective constant, so the LP optimum is the full planning objective.
    """
    _require_valid(case)
    plan.check(case)
    hydrogen = bool(np.any(plan.h_online))
    return _assemble(case, hydrogen=hydrogen, plan=plan, name="operation")


# ---------------------------------------------------------------------------
# solution decomposition


def tensor(model: MilpModel, x: np.ndarray, case: NetworkCase, kind: str, entity: int) -> np.ndarray:
    """Collect one variable family for one entity as a (period, day, hour) array; absent columns read 0."""
    NP, ND, T = case.horizon.shape
    out = np.zeros((NP, ND, T))
    idx = model.var_index
    for p in range(NP):
        for d in range(ND):
            for t in range(T):
                j = idx.get(VarKey(kind, entity, p, d, t))
                if j is not None:
                    out[p, d, t] = x[j]
    return out


def binary_flags(model: MilpModel, x: np.ndarray, kind: str, entity: int, n_periods: int) -> np.ndarray:
    out = np.zeros(n_periods)
    for p in range(n_periods):
        j = model.var_index.get(VarKey(kind, entity, p))
        if j is not None:
            out[p] = round(float(x[j]))
    return out


def cost_breakdown(model: MilpModel, solution, case: NetworkCase) -> CostBreakdown:
    """Evaluate the objective terms from solution values and case data."""
    x = np.asarray(solution, dtype=float)
    if x.shape != (model.n_cols,):
        raise ValueError(f"solution has {x.size} values, model has {model.n_cols} columns")
    NP = case.horizon.n_periods
    dispatch = {}
    for g in case.generators:
        kind = "gen_new" if g.kind == "new" else "gen_existing"
        dispatch[g.id] = tensor(model, x, case, kind, g.id)
    shed = np.stack([tensor(model, x, case, "shed", b.id) for b in case.buses]) if case.buses else np.zeros(0)
    plan = model.metadata.get("plan")
    if plan is not None:
        line_built = plan.line_built_map()
        h_built = plan.h_built_map() if model.metadata.get("hydrogen") else {}
    else:
        line_built = {ln.id: binary_flags(model, x, "build_line", ln.id, NP) for ln in case.candidate_lines}
        h_built = {h.id: binary_flags(model, x, "build_h", h.id, NP) for h in case.hydrogen_routes}
    return CostBreakdown.from_parts(
        generation_cost(case, dispatch),
        line_investment_cost(case, line_built),
        hydrogen_investment_cost(case, h_built),
        shed_penalty_value(case, shed),
    )
