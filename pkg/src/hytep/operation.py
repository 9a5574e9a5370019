"""Fixed-plan operation: investment plans, the operation LP, and physical checks."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .formulation import CostBreakdown, VarKey, binary_flags, build_operation_lp, cost_breakdown, tensor
from .grid_model import NetworkCase
from .solver.model import MilpModel
from .solver.simplex import solve_lp

BALANCE_TOL = 1e-6


class PlanError(ValueError):
    """Plan is not build-consistent or does not match the case."""


class OperationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class InvestmentPlan:
    """Build events and online status per candidate and period (rows follow case order)."""

    line_ids: tuple[int, ...]
    route_ids: tuple[int, ...]
    line_built: np.ndarray
    line_online: np.ndarray
    h_built: np.ndarray
    h_online: np.ndarray

    @classmethod
    def from_build_periods(cls, case: NetworkCase, lines: Mapping[int, int | None] | None = None,
                           routes: Mapping[int, int | None] | None = None) -> "InvestmentPlan":
        """``lines``/``routes`` map candidate id to its 0-based build period (None or absent: never)."""
        NP = case.horizon.n_periods
        lines, routes = dict(lines or {}), dict(routes or {})

        def flags(ents, chosen):
            unknown = set(chosen) - {e.id for e in ents}
            if unknown:
                raise PlanError(f"plan names unknown candidates {sorted(unknown)}")
            built = np.zeros((len(ents), NP), dtype=bool)
            for i, e in enumerate(ents):
                p = chosen.get(e.id)
                if p is not None:
                    if not 0 <= p < NP:
                        raise PlanError(f"candidate {e.id}: build period {p} outside horizon")
                    built[i, p] = True
            return built, np.logical_or.accumulate(built, axis=1) if NP else built

        lb, lo = flags(case.candidate_lines, lines)
        hb, ho = flags(case.hydrogen_routes, routes)
        return cls(tuple(ln.id for ln in case.candidate_lines), tuple(h.id for h in case.hydrogen_routes),
                   lb, lo, hb, ho)

    @classmethod
    def empty(cls, case: NetworkCase) -> "InvestmentPlan":
        return cls.from_build_periods(case)

    def check(self, case: NetworkCase) -> None:
        NP = case.horizon.n_periods
        if self.line_ids != tuple(ln.id for ln in case.candidate_lines) or \
                self.route_ids != tuple(h.id for h in case.hydrogen_routes):
            raise PlanError("plan does not cover exactly the case's candidates")
        for label, ids, built, online in (("candidate line", self.line_ids, self.line_built, self.line_online),
                                          ("hydrogen route", self.route_ids, self.h_built, self.h_online)):
            if built.shape != (len(ids), NP) or online.shape != (len(ids), NP):
                raise PlanError(f"{label} flags must have shape ({len(ids)}, {NP})")
            for i, k in enumerate(ids):
                if built[i].sum() > 1:
                    raise PlanError(f"{label} {k}: built more than once")
                expect = np.logical_or.accumulate(built[i].astype(bool))
                if not np.array_equal(online[i].astype(bool), expect):
                    raise PlanError(f"{label} {k}: online status inconsistent with build period "
                                    "(online before built, or offline after built)")

    def line_built_map(self) -> dict[int, np.ndarray]:
        return {k: self.line_built[i].astype(float) for i, k in enumerate(self.line_ids)}

    def h_built_map(self) -> dict[int, np.ndarray]:
        return {k: self.h_built[i].astype(float) for i, k in enumerate(self.route_ids)}

    def build_period(self, kind: str, entity: int) -> int | None:
        ids, built = (self.line_ids, self.line_built) if kind == "line" else (self.route_ids, self.h_built)
        row = built[ids.index(entity)]
        hits = np.flatnonzero(row)
        return int(hits[0]) if hits.size else None

    @property
    def routes_built(self) -> list[int]:
        return [k for i, k in enumerate(self.route_ids) if self.h_built[i].any()]

    @property
    def lines_built(self) -> list[int]:
        return [k for i, k in enumerate(self.line_ids) if self.line_built[i].any()]

    def to_dict(self, case: NetworkCase) -> dict:
        hz = case.horizon

        def rows(ids, built, online, kind):
            out = []
            for i, k in enumerate(ids):
                p = self.build_period(kind, k)
                out.append({"id": k, "build_period": p,
                            "build_label": hz.label(p) if p is not None else None,
                            "built": built[i].astype(int).tolist(), "online": online[i].astype(int).tolist()})
            return out

        return {"n_periods": hz.n_periods,
                "candidate_lines": rows(self.line_ids, self.line_built, self.line_online, "line"),
                "hydrogen_routes": rows(self.route_ids, self.h_built, self.h_online, "route")}

    @classmethod
    def from_dict(cls, case: NetworkCase, data: dict) -> "InvestmentPlan":
        NP = case.horizon.n_periods

        def flags(ents, rows):
            by_id = {r["id"]: r for r in rows}
            unknown = set(by_id) - {e.id for e in ents}
            if unknown:
                raise PlanError(f"plan names unknown candidates {sorted(unknown)}")
            built = np.zeros((len(ents), NP), dtype=bool)
            online = np.zeros((len(ents), NP), dtype=bool)
            for i, e in enumerate(ents):
                r = by_id.get(e.id)
                if r is None:
                    continue
                if "built" in r:
                    built[i] = np.asarray(r["built"], dtype=bool)
                    online[i] = np.asarray(r.get("online", np.logical_or.accumulate(built[i])), dtype=bool)
                elif r.get("build_period") is not None:
                    built[i, r["build_period"]] = True
                    online[i] = np.logical_or.accumulate(built[i])
            return built, online

        lb, lo = flags(case.candidate_lines, data.get("candidate_lines", []))
        hb, ho = flags(case.hydrogen_routes, data.get("hydrogen_routes", []))
        plan = cls(tuple(ln.id for ln in case.candidate_lines), tuple(h.id for h in case.hydrogen_routes),
                   lb, lo, hb, ho)
        plan.check(case)
        return plan


def plan_from_solution(model: MilpModel, x: np.ndarray, case: NetworkCase) -> InvestmentPlan:
    """Read the build/online binaries of a planning-model solution."""
    NP = case.horizon.n_periods
    x = np.asarray(x, dtype=float)

    def grab(ents, kind):
        return np.array([binary_flags(model, x, kind, e.id, NP) for e in ents], dtype=bool).reshape(len(ents), NP)

    return InvestmentPlan(
        tuple(ln.id for ln in case.candidate_lines), tuple(h.id for h in case.hydrogen_routes),
        grab(case.candidate_lines, "build_line"), grab(case.candidate_lines, "online_line"),
        grab(case.hydrogen_routes, "build_h"), grab(case.hydrogen_routes, "online_h"),
    )


@dataclass
class HydrogenOps:
    h: np.ndarray  # MWh-H2 per hour
    p_elec: np.ndarray  # p.u.
    p_fc: np.ndarray
    p_comp: np.ndarray


@dataclass
class OperationResult:
    """Per (period, day, hour) operating values; powers per-unit, angles in radians."""

    plan: InvestmentPlan
    dispatch: dict[int, np.ndarray]
    renewable_out: dict[int, np.ndarray]
    curtailment: dict[int, np.ndarray]
    line_flows: dict[int, np.ndarray]
    candidate_flows: dict[int, np.ndarray]
    angles: dict[int, np.ndarray]
    shed: dict[int, np.ndarray]
    hydrogen: dict[int, HydrogenOps]
    costs: CostBreakdown
    objective: float
    model_kind: str = "operation"
    extras: dict = field(default_factory=dict)

    @property
    def total_shed(self) -> float:
        return float(sum(np.sum(s) for s in self.shed.values()))


def extract_result(case: NetworkCase, model: MilpModel, x: np.ndarray, objective: float,
                   plan: InvestmentPlan | None = None) -> OperationResult:
    x = np.asarray(x, dtype=float)
    if plan is None:
        plan = model.metadata.get("plan") or plan_from_solution(model, x, case)

    def fam(kind_of, ents):
        return {e.id: tensor(model, x, case, kind_of(e), e.id) for e in ents}

    gen_kind = lambda g: "gen_new" if g.kind == "new" else "gen_existing"  # noqa: E731
    hyd = {}
    for h in case.hydrogen_routes:
        hyd[h.id] = HydrogenOps(*(tensor(model, x, case, k, h.id) for k in ("h_flow", "p_elec", "p_fc", "p_comp")))
    return OperationResult(
        plan=plan,
        dispatch=fam(gen_kind, case.generators),
        renewable_out=fam(lambda r: "ren_new_out" if r.kind == "new" else "ren_out", case.renewables),
        curtailment=fam(lambda r: "ren_new_cur" if r.kind == "new" else "ren_cur", case.renewables),
        line_flows=fam(lambda _: "flow_line", case.lines),
        candidate_flows=fam(lambda _: "flow_newline", case.candidate_lines),
        angles=fam(lambda _: "angle", case.buses),
        shed=fam(lambda _: "shed", case.buses),
        hydrogen=hyd,
        costs=cost_breakdown(model, x, case),
        objective=objective,
        model_kind=model.metadata.get("kind", "operation"),
    )


def evaluate_plan(case: NetworkCase, plan: InvestmentPlan) -> OperationResult:
    """Optimal operation (and total planning cost) for a fixed investment plan."""
    model = build_operation_lp(case, plan)
    sol = solve_lp(model)
    if sol.status != "optimal":
        # shedding and curtailment always leave a feasible point, so this is a data problem
        raise OperationError(f"operation LP {sol.status}; check generator and renewable limits")
    return extract_result(case, model, sol.values, sol.objective, plan)


# ---------------------------------------------------------------------------
# physical checks


def balance_residuals(result: OperationResult, case: NetworkCase) -> np.ndarray:
    """Nodal balance residual, injections minus (load - shed), shape (bus, period, day, hour)."""
    res = np.zeros((len(case.buses),) + case.horizon.shape)
    pos = case.bus_index
    for g in case.generators:
        res[pos(g.bus)] += result.dispatch[g.id]
    for r in case.renewables:
        res[pos(r.bus)] += result.renewable_out[r.id] - result.curtailment[r.id]
    for flows, lines in ((result.line_flows, case.lines), (result.candidate_flows, case.candidate_lines)):
        for ln in lines:
            res[pos(ln.to_bus)] += flows[ln.id]
            res[pos(ln.from_bus)] -= flows[ln.id]
    for h in case.hydrogen_routes:
        ops = result.hydrogen[h.id]
        res[pos(h.to_bus)] += ops.p_fc
        res[pos(h.from_bus)] -= ops.p_elec + ops.p_comp
    for b in case.buses:
        i = pos(b.id)
        res[i] -= case.load.demand[i] - result.shed[b.id]
    return res


def energy_accounting_residual(result: OperationResult, case: NetworkCase) -> np.ndarray:
    """System-wide per-interval residual: supply minus conversion losses minus served load."""
    supply = sum(result.dispatch.values(), np.zeros(case.horizon.shape))
    for r in case.renewables:
        supply = supply + result.renewable_out[r.id] - result.curtailment[r.id]
    for ops in result.hydrogen.values():
        supply = supply - (ops.p_elec + ops.p_comp - ops.p_fc)
    served = case.load.demand.sum(axis=0) - sum(result.shed.values(), np.zeros(case.horizon.shape))
    return supply - served


def hydrogen_chain_check(result: OperationResult, case: NetworkCase, tol: float = 1e-6) -> list[dict]:
    """Conversion equalities and online-gated capacities for every route-interval."""
    base = case.mva_base
    NP, ND, T = case.horizon.shape
    out = []
    for i, h in enumerate(case.hydrogen_routes):
        ops = result.hydrogen[h.id]
        online = result.plan.h_online[i].astype(float)[:, None, None]
        checks = {
            "electrolyzer: h = eta_e*pE*base": ops.h - h.eta_e * ops.p_elec * base,
            "fuel cell: pF*base = eta_f*h": ops.p_fc * base - h.eta_f * ops.h,
            "compressor: pC*base = eta_c*h": ops.p_comp * base - h.eta_c * ops.h,
            "pipeline capacity": np.maximum(ops.h - h.pipeline_capacity * online, 0.0),
            "electrolyzer rating": np.maximum(ops.p_elec - h.electrolyzer_rating * online, 0.0),
            "fuel-cell rating": np.maximum(ops.p_fc - h.fuelcell_rating * online, 0.0),
            "nonnegative": np.maximum(-np.minimum.reduce([ops.h, ops.p_elec, ops.p_fc, ops.p_comp]), 0.0),
        }
        for rule, resid in checks.items():
            for p, d, t in zip(*np.nonzero(np.abs(resid) > tol)):
                out.append({"route": h.id, "period": int(p), "day": int(d), "hour": int(t),
                            "rule": rule, "magnitude": float(abs(resid[p, d, t]))})
    return out


def offline_usage(result: OperationResult, case: NetworkCase) -> list[str]:
    """Candidates carrying any flow or conversion while offline in the plan."""
    out = []
    for i, ln in enumerate(case.candidate_lines):
        off = ~result.plan.line_online[i].astype(bool)
        if np.any(result.candidate_flows[ln.id][off] != 0.0):
            out.append(f"candidate line {ln.id} carries flow while offline")
    for i, h in enumerate(case.hydrogen_routes):
        off = ~result.plan.h_online[i].astype(bool)
        ops = result.hydrogen[h.id]
        if any(np.any(a[off] != 0.0) for a in (ops.h, ops.p_elec, ops.p_fc, ops.p_comp)):
            out.append(f"hydrogen route {h.id} operates while offline")
    return out


# ---------------------------------------------------------------------------
# serialization


_FAMILIES = ("dispatch", "renewable_out", "curtailment", "line_flows", "candidate_flows", "angles", "shed")


def result_to_dict(result: OperationResult, case: NetworkCase) -> dict:
    """Structured document; powers in per-unit with the MVA base recorded alongside."""
    return {
        "mva_base": case.mva_base,
        "model": result.model_kind,
        "objective": result.objective,
        "costs": result.costs.as_dict(),
        "plan": result.plan.to_dict(case),
        **{fam: {str(k): v.tolist() for k, v in getattr(result, fam).items()} for fam in _FAMILIES},
        "hydrogen": {str(k): {"h": o.h.tolist(), "p_elec": o.p_elec.tolist(), "p_fc": o.p_fc.tolist(),
                              "p_comp": o.p_comp.tolist()} for k, o in result.hydrogen.items()},
    }


def write_result(result: OperationResult, case: NetworkCase, outdir: str | Path) -> list[Path]:
    """Write ``operation.json`` plus one flat CSV per tensor family (one row per index tuple)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / "operation.json"]
    paths[0].write_text(json.dumps(result_to_dict(result, case), indent=1))
    NP, ND, T = case.horizon.shape
    base = case.mva_base
    tensors = {fam: getattr(result, fam) for fam in _FAMILIES}
    for k, o in result.hydrogen.items():
        for name in ("h", "p_elec", "p_fc", "p_comp"):
            tensors.setdefault(f"hydrogen_{name}", {})[k] = getattr(o, name)
    for fam, data in tensors.items():
        path = outdir / f"{fam}.csv"
        mw_col = "value_mwh_h2" if fam == "hydrogen_h" else ("value_rad" if fam == "angles" else "value_mw")
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["entity", "period", "day", "hour", "value_pu" if fam != "hydrogen_h" else "value", mw_col])
            for k, arr in data.items():
                for p in range(NP):
                    for d in range(ND):
                        for t in range(T):
                            v = float(arr[p, d, t])
                            scaled = v if fam in ("hydrogen_h", "angles") else v * base
                            w.writerow([k, p + 1, d + 1, t + 1, repr(v), repr(scaled)])
        paths.append(path)
    return paths


__all__ = [
    "HydrogenOps", "InvestmentPlan", "OperationError", "OperationResult", "PlanError", "VarKey",
    "balance_residuals", "energy_accounting_residual", "evaluate_plan", "extract_result",
    "hydrogen_chain_check", "offline_usage", "plan_from_solution", "result_to_dict", "write_result",
]
