"""Scenario sweeps over renewable penetration, round-trip efficiency and hydrogen cost, plus report files."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .formulation import CostBreakdown, PreconditionError, build_tep_h, build_tep_t, cost_breakdown
from .grid_model import (NetworkCase, apply_hydrogen_cost_reduction, scale_renewable_penetration,
                         set_round_trip)
from .operation import InvestmentPlan, OperationResult, evaluate_plan, plan_from_solution
from .solver.bnb import MilpSolution, SolverError, solve_milp
from .solver.model import MilpModel

log = logging.getLogger(__name__)

MODELS = ("tep_h", "tep_t")
# above these sizes the built-in branch-and-bound is not a sensible tool
MAX_BINARIES = 48
MAX_COLUMNS = 60_000


class ModelTooLargeError(SolverError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    """Axis values; an empty axis leaves that parameter at the case's own value."""

    penetration_levels: tuple[float, ...] = ()
    round_trip_levels: tuple[float, ...] = ()
    cost_reductions: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("penetration_levels", "round_trip_levels", "cost_reductions"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if any(v < 0 for v in self.penetration_levels):
            raise ValueError("penetration levels must be >= 0")
        if any(not 0 < v <= 1 for v in self.round_trip_levels):
            raise ValueError("round-trip levels must lie in (0, 1]")
        if any(not 0 <= v < 1 for v in self.cost_reductions):
            raise ValueError("cost reductions must lie in [0, 1)")

    def points(self) -> list[tuple[float | None, float | None, float | None]]:
        """Axis combinations in lexicographic order (penetration, round trip, cost reduction)."""
        axes = [sorted(set(a)) or [None] for a in
                (self.penetration_levels, self.round_trip_levels, self.cost_reductions)]
        return list(itertools.product(*axes))

    @classmethod
    def from_dict(cls, data: dict) -> "SweepAxis":
        return cls(tuple(data.get("penetration_levels", ())), tuple(data.get("round_trip_levels", ())),
                   tuple(data.get("cost_reductions", ())))

    def to_dict(self) -> dict:
        return {"penetration_levels": list(self.penetration_levels),
                "round_trip_levels": list(self.round_trip_levels),
                "cost_reductions": list(self.cost_reductions)}

    def slug(self) -> str:
        parts = []
        for tag, vals in (("pen", self.penetration_levels), ("rt", self.round_trip_levels),
                          ("cr", self.cost_reductions)):
            if vals:
                parts.append(tag + "-".join(f"{v:g}" for v in sorted(set(vals))))
        return "_".join(parts) or "base"


def transform_case(case: NetworkCase, penetration: float | None, round_trip: float | None,
                   cost_reduction: float | None) -> NetworkCase:
    if penetration is not None:
        case = scale_renewable_penetration(case, penetration)
    if round_trip is not None:
        case = set_round_trip(case, round_trip)
    if cost_reduction is not None:
        case = apply_hydrogen_cost_reduction(case, cost_reduction)
    return case


# ---------------------------------------------------------------------------
# single solves


@dataclass
class PlanningOutcome:
    model: MilpModel
    milp: MilpSolution
    plan: InvestmentPlan
    costs: CostBreakdown


def check_size(model: MilpModel, max_binaries: int = MAX_BINARIES, max_columns: int = MAX_COLUMNS) -> None:
    if model.n_integer > max_binaries or model.n_cols > max_columns:
        raise ModelTooLargeError(
            f"model {model.name} has {model.n_cols} columns and {model.n_integer} binaries, above the "
            f"built-in solver limit ({max_columns} columns, {max_binaries} binaries); "
            "write it out with export-mps and use an external MILP solver")


def solve_planning(case: NetworkCase, model: str = "tep_h", gap: float = 1e-3,
                   node_limit: int = 100_000) -> PlanningOutcome:
    """Build and solve one planning model; raises SolverError if no plan is found."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    m = build_tep_h(case) if model == "tep_h" else build_tep_t(case)
    check_size(m)
    sol = solve_milp(m, gap_target=gap, node_limit=node_limit)
    if sol.incumbent is None:
        raise SolverError(f"{model}: no feasible plan found ({sol.status}, {sol.nodes_explored} nodes)")
    return PlanningOutcome(m, sol, plan_from_solution(m, sol.values, case), cost_breakdown(m, sol.values, case))


def operate(case: NetworkCase, plan: InvestmentPlan) -> OperationResult:
    """Operation schedules for a plan; routes unknown to ``case`` (line-only plans) are padded as unbuilt."""
    if plan.route_ids != tuple(h.id for h in case.hydrogen_routes):
        NP = case.horizon.n_periods
        zeros = np.zeros((len(case.hydrogen_routes), NP), dtype=bool)
        plan = InvestmentPlan(plan.line_ids, tuple(h.id for h in case.hydrogen_routes),
                              plan.line_built, plan.line_online, zeros, zeros.copy())
    return evaluate_plan(case, plan)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class ScenarioRow:
    model: str
    penetration: float | None
    round_trip: float | None
    cost_reduction: float | None
    status: str = "ok"
    pipelines_built: int = 0
    construction_periods: list[str] = field(default_factory=list)
    hydrogen_investment: float = float("nan")
    line_investment: float = float("nan")
    generation_cost: float = float("nan")
    shed_penalty_value: float = float("nan")
    total: float = float("nan")
    gap: float = float("nan")
    nodes: int = 0
    oracle_total: float | None = None
    error: str = ""

    @property
    def axis_values(self) -> tuple:
        return (self.penetration, self.round_trip, self.cost_reduction)


COLUMNS = ("model", "penetration", "round_trip", "cost_reduction", "status", "pipelines_built",
           "construction_periods", "hydrogen_investment", "line_investment", "generation_cost",
           "shed_penalty_value", "total", "gap", "nodes", "oracle_total", "error")


def _solve_point(args) -> ScenarioRow:
    case, model, point, gap, node_limit, verify = args
    pen, rt, cr = point
    row = ScenarioRow(model, pen, rt, cr)
    try:
        c = transform_case(case, pen, rt, cr)
        out = solve_planning(c, model, gap, node_limit)
    except (SolverError, PreconditionError, ValueError) as exc:
        row.status, row.error = "failed", str(exc)
        log.warning("sweep point %s failed: %s", point, exc)
        return row
    hz = c.horizon
    periods = [out.plan.build_period("route", h) for h in out.plan.routes_built]
    row.pipelines_built = len(periods)
    row.construction_periods = [hz.label(p) for p in periods]
    row.hydrogen_investment = out.costs.hydrogen
    row.line_investment = out.costs.new_lines
    row.generation_cost = out.costs.generation
    row.shed_penalty_value = out.costs.shed_penalty_value
    row.total = out.costs.total
    row.gap = out.milp.gap
    row.nodes = out.milp.nodes_explored
    if out.milp.status != "optimal_within_gap":
        row.status = out.milp.status
    if verify:
        from .oracle import brute_force_optimum
        row.oracle_total = brute_force_optimum(c, model).total
    return row


def run_sweep(case: NetworkCase, axes: SweepAxis, model: str = "tep_h", gap: float = 1e-3,
              node_limit: int = 100_000, verify_oracle: bool = False, workers: int = 1) -> list[ScenarioRow]:
    """One row per axis combination in lexicographic order; failed points are kept and marked."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    jobs = [(case, model, pt, gap, node_limit, verify_oracle) for pt in axes.points()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_solve_point, jobs))  # map keeps submission order
    return [_solve_point(j) for j in jobs]


# ---------------------------------------------------------------------------
# report files


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, list):
        return ";".join(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_tables(rows: Sequence[ScenarioRow], outdir: str | Path, axes: SweepAxis | None = None) -> list[Path]:
    """Write ``{model}_{axis-values}.csv`` and a matching ``.json`` per model present in ``rows``."""
    if not rows:
        raise ValueError("no rows to emit")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if axes is None:
        axes = SweepAxis(*(tuple(v for v in {getattr(r, a) for r in rows} if v is not None)
                           for a in ("penetration", "round_trip", "cost_reduction")))
    written = []
    for model in sorted({r.model for r in rows}):
        subset = [r for r in rows if r.model == model]
        stem = f"{model}_{axes.slug()}"
        csv_path = outdir / f"{stem}.csv"
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in subset:
                d = asdict(r)
                w.writerow([_cell(d[c]) for c in COLUMNS])
        json_path = outdir / f"{stem}.json"
        doc = {"model": model, "axes": axes.to_dict(), "columns": list(COLUMNS),
               "rows": [{c: asdict(r)[c] for c in COLUMNS} for r in subset]}
        json_path.write_text(json.dumps(doc, indent=1, allow_nan=True))
        written += [csv_path, json_path]
    return written


TIMESERIES_FIELDS = (("h", "h_mwh_h2"), ("p_elec", "pE_mw"), ("p_fc", "pF_mw"), ("p_comp", "pC_mw"))


def emit_timeseries(result: OperationResult, case: NetworkCase, route_ids: Sequence[int] | None,
                    outdir: str | Path) -> list[Path]:
    """Hourly hydrogen-chain series, one CSV per (period, day), powers in MW and flow in MWh-H2/h."""
    ids = list(result.hydrogen) if route_ids is None else list(route_ids)
    unknown = [k for k in ids if k not in result.hydrogen]
    if unknown:
        raise KeyError(f"unknown hydrogen route ids {unknown}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    NP, ND, T = case.horizon.shape
    base = case.mva_base
    paths = []
    for p in range(NP):
        for d in range(ND):
            path = outdir / f"timeseries_p{p + 1}_d{d + 1}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["hour"] + [f"{col}[{k}]" for k in ids for _, col in TIMESERIES_FIELDS])
                for t in range(T):
                    vals = []
                    for k in ids:
                        ops = result.hydrogen[k]
                        for attr, _ in TIMESERIES_FIELDS:
                            v = float(getattr(ops, attr)[p, d, t])
                            vals.append(repr(v if attr == "h" else v * base))
                    w.writerow([t + 1] + vals)
            paths.append(path)
    return paths


__all__ = ["COLUMNS", "MODELS", "ModelTooLargeError", "PlanningOutcome", "ScenarioRow", "SweepAxis",
           "check_size", "emit_tables", "emit_timeseries", "operate", "run_sweep", "solve_planning",
           "transform_case"]
