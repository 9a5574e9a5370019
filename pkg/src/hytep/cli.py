"""Command-line entry point: validate | plan | evaluate | sweep | export-mps | oracle-check.

Exit codes: 0 success, 2 usage error, 3 data error, 4 solver failure.  On any
failure a one-line JSON summary is written to standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .formulation import PreconditionError, build_tep_h, build_tep_t
from .grid_model import CaseError, NetworkCase, bundled_case_path, load_case, validate
from .operation import InvestmentPlan, OperationError, PlanError, write_result
from .oracle import EnumerationCapError, brute_force_optimum
from .scenario import SweepAxis, emit_tables, emit_timeseries, operate, run_sweep, solve_planning
from .solver.bnb import SolverError
from .solver.mps import export_mps

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 2, 3, 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    case: str | None = None
    model: str = "tep_h"
    gap: float = 1e-3
    node_limit: int = 100_000
    out: Path = Path("out")
    plan: str | None = None
    axes: SweepAxis = field(default_factory=SweepAxis)
    oracle: bool = False
    workers: int = 1
    cap: int = 4096

    def __post_init__(self):
        self.model = self.model.replace("-", "_")
        if self.model not in ("tep_h", "tep_t"):
            raise UsageError(f"--model must be tep-h or tep-t, got {self.model!r}")
        if not 0 < self.gap < 1:
            raise UsageError("--gap must lie in (0, 1)")
        if self.node_limit < 1:
            raise UsageError("--node-limit must be positive")
        self.out = Path(self.out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hytep", description="Joint transmission and hydrogen-route expansion planning.")
    p.add_argument("--version", action="version", version=f"hytep {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, solver=True):
        # defaults are None so that --config values can fill the gaps
        sp.add_argument("--case", help="case file, or the name of a bundled case")
        sp.add_argument("--config", help="JSON file with any of the run options")
        sp.add_argument("--out", help="output directory (default: out)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if solver:
            sp.add_argument("--model", choices=["tep-h", "tep-t", "tep_h", "tep_t"])
            sp.add_argument("--gap", type=float, help="relative optimality gap (default 0.001)")
            sp.add_argument("--node-limit", type=int, dest="node_limit")

    common(sub.add_parser("validate", help="check a case file and list violations"), solver=False)
    common(sub.add_parser("plan", help="solve the planning model and write plan, costs and schedules"))
    ev = sub.add_parser("evaluate", help="operate a fixed investment plan")
    common(ev, solver=False)
    ev.add_argument("--plan", help="plan JSON as written by the plan command")
    sw = sub.add_parser("sweep", help="solve a grid of scenarios and write tables")
    common(sw)
    sw.add_argument("--penetration", type=_floats, help="renewable penetration levels, e.g. 0.2,0.8")
    sw.add_argument("--round-trip", type=_floats, dest="round_trip", help="round-trip efficiencies")
    sw.add_argument("--cost-reduction", type=_floats, dest="cost_reduction", help="hydrogen cost reductions")
    sw.add_argument("--oracle", action="store_true", default=None, help="verify every point by enumeration")
    sw.add_argument("--workers", type=int)
    common(sub.add_parser("export-mps", help="write the planning model as an MPS file"))
    oc = sub.add_parser("oracle-check", help="compare the MILP optimum with exhaustive enumeration")
    common(oc)
    oc.add_argument("--cap", type=int, help="maximum number of plans to enumerate (default 4096)")
    return p


def _config(args: argparse.Namespace) -> RunConfig:
    conf: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            bundled = Path(str(resources.files("hytep.data").joinpath(args.config)))
            if bundled.exists():
                args.config = str(bundled)
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(conf, dict):
            raise DataError("config must be a JSON object")

    def pick(name, conf_key=None, default=None):
        v = getattr(args, name, None)
        if v is None:
            v = conf.get(conf_key or name, default)
        return default if v is None else v

    axes_conf = {
        "penetration_levels": pick("penetration", "penetration_levels", []),
        "round_trip_levels": pick("round_trip", "round_trip_levels", []),
        "cost_reductions": pick("cost_reduction", "cost_reductions", []),
    }
    try:
        axes = SweepAxis.from_dict(axes_conf)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    case = pick("case")
    if case is not None and args.config and "case" in conf and getattr(args, "case", None) is None:
        # relative case paths in a config file are relative to that file
        cand = Path(args.config).parent / case
        case = str(cand) if cand.exists() else case
    return RunConfig(
        command=args.command, case=case, model=str(pick("model", default="tep_h")),
        gap=float(pick("gap", default=1e-3)), node_limit=int(pick("node_limit", default=100_000)),
        out=Path(pick("out", default="out")), plan=pick("plan"), axes=axes,
        oracle=bool(pick("oracle", default=False)), workers=int(pick("workers", default=1)),
        cap=int(pick("cap", default=4096)),
    )


def resolve_case(ref: str | None) -> NetworkCase:
    if not ref:
        raise UsageError("--case is required")
    path = Path(ref)
    if not path.exists():
        try:
            path = bundled_case_path(ref)
        except FileNotFoundError:
            raise DataError(f"case file {ref} not found (and no bundled case of that name)") from None
    return load_case(path)


def _dump(path: Path, doc) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1))
    return path


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=1))


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: RunConfig) -> int:
    case = resolve_case(cfg.case)
    problems = validate(case)
    for msg in problems:
        print(msg)
    if problems:
        raise DataError(f"{len(problems)} validation violation(s)")
    print(f"{case.name}: ok")
    return EXIT_OK


def cmd_plan(cfg: RunConfig) -> int:
    case = resolve_case(cfg.case)
    out = solve_planning(case, cfg.model, cfg.gap, cfg.node_limit)
    result = operate(case, out.plan)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _dump(cfg.out / "plan.json", out.plan.to_dict(case))
    summary = {"case": case.name, "model": cfg.model, "status": out.milp.status,
               "objective": out.milp.objective, "best_bound": out.milp.best_bound, "gap": out.milp.gap,
               "nodes": out.milp.nodes_explored, "costs": out.costs.as_dict(),
               "routes_built": out.plan.routes_built, "lines_built": out.plan.lines_built}
    _dump(cfg.out / "costs.json", summary)
    write_result(result, case, cfg.out / "operation")
    emit_timeseries(result, case, None, cfg.out / "timeseries")
    _emit(summary)
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    case = resolve_case(cfg.case)
    if not cfg.plan:
        raise UsageError("--plan is required")
    try:
        plan = InvestmentPlan.from_dict(case, json.loads(Path(cfg.plan).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"cannot read plan {cfg.plan}: {exc}") from None
    result = operate(case, plan)
    summary = {"case": case.name, "objective": result.objective, "costs": result.costs.as_dict(),
               "total_shed_pu": result.total_shed}
    _dump(cfg.out / "costs.json", summary)
    write_result(result, case, cfg.out / "operation")
    emit_timeseries(result, case, None, cfg.out / "timeseries")
    _emit(summary)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    case = resolve_case(cfg.case)
    rows = run_sweep(case, cfg.axes, cfg.model, cfg.gap, cfg.node_limit, cfg.oracle, cfg.workers)
    paths = emit_tables(rows, cfg.out, cfg.axes)
    for r in rows:
        print(f"{r.model} pen={r.penetration} rt={r.round_trip} cr={r.cost_reduction} status={r.status} "
              f"pipelines={r.pipelines_built} total={r.total:.6f}")
    print("wrote " + ", ".join(str(p) for p in paths))
    failed = [r for r in rows if r.status == "failed"]
    if failed:
        raise SolverError(f"{len(failed)} of {len(rows)} sweep points failed")
    return EXIT_OK


def cmd_export_mps(cfg: RunConfig) -> int:
    case = resolve_case(cfg.case)
    model = build_tep_h(case) if cfg.model == "tep_h" else build_tep_t(case)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = export_mps(model, cfg.out / f"{case.name or 'case'}_{cfg.model}.mps")
    print(f"wrote {path} ({model.n_cols} columns, {model.n_rows} rows, {model.n_integer} integer)")
    return EXIT_OK


def cmd_oracle_check(cfg: RunConfig) -> int:
    case = resolve_case(cfg.case)
    oracle = brute_force_optimum(case, cfg.model, cap=cfg.cap)
    milp = solve_planning(case, cfg.model, cfg.gap, cfg.node_limit)
    gap = abs(milp.milp.objective - oracle.total) / max(abs(oracle.total), 1e-9)
    doc = {"case": case.name, "model": cfg.model, "oracle_total": oracle.total,
           "milp_objective": milp.milp.objective, "relative_gap": gap, "gap_target": cfg.gap,
           "plans_enumerated": oracle.plans_evaluated, "milp_nodes": milp.milp.nodes_explored,
           "agree": gap <= cfg.gap}
    _emit(doc)
    print(f"relative gap {gap:.3g}")
    if gap > cfg.gap:
        raise SolverError(f"MILP and enumeration disagree by {gap:.3g} (> {cfg.gap})")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "plan": cmd_plan, "evaluate": cmd_evaluate, "sweep": cmd_sweep,
            "export-mps": cmd_export_mps, "oracle-check": cmd_oracle_check}


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}),
          file=sys.stderr)
    return code


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (DataError, CaseError, PlanError, PreconditionError, EnumerationCapError, OperationError) as exc:
        return _fail(EXIT_DATA, "data", exc)
    except SolverError as exc:
        return _fail(EXIT_SOLVER, "solver", exc)
    except OSError as exc:
        return _fail(EXIT_DATA, "io", exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
