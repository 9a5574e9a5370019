"""Domain types for the hybrid power/hydrogen grid and case-file handling.

All electrical quantities are held per-unit on the case MVA base; hydrogen
pipeline capacity is kept in MWh-H2 per hour.  Case files store powers in MW
and costs in million currency units (M$).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

import jsonschema
import numpy as np

DEFAULT_ETA_C = 0.05
DEFAULT_SHED_PENALTY = 1.0e6
DEFAULT_ANGLE_BOUND = math.pi


class CaseError(ValueError):
    """Base class for problems found while reading a case."""


class CaseParseError(CaseError):
    pass


class CaseReferenceError(CaseError):
    pass


class CaseShapeError(CaseError):
    pass


def _frozen(a: Any, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PlanningHorizon:
    n_periods: int
    years_per_period: int
    typical_days_per_year: int
    intervals_per_day: int
    period_labels: tuple[str, ...] = ()
    day_labels: tuple[str, ...] = ()

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_periods, self.typical_days_per_year, self.intervals_per_day)

    @property
    def day_weight(self) -> float:
        """Calendar days represented by one typical day."""
        return 365.0 / self.typical_days_per_year

    def label(self, period: int) -> str:
        if period < len(self.period_labels):
            return self.period_labels[period]
        return f"P{period + 1}"


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""
    is_slack: bool = False


@dataclass(frozen=True, eq=False)
class ThermalGenerator:
    id: int
    bus: int
    kind: str  # "existing" | "new"
    energy_cost: float  # M$ per MWh
    p_min: float = 0.0
    p_max: float = 0.0
    # (n_periods, 2) array of [min, max] per period, new units only
    per_period_limits: np.ndarray | None = None
    retire_period: int | None = None  # first period (0-based) the unit is offline

    def limits(self, period: int) -> tuple[float, float]:
        if self.retire_period is not None and period >= self.retire_period:
            return 0.0, 0.0
        if self.kind == "new":
            lo, hi = self.per_period_limits[period]
            return float(lo), float(hi)
        return self.p_min, self.p_max


@dataclass(frozen=True, eq=False)
class RenewablePlant:
    id: int
    bus: int
    kind: str
    availability: np.ndarray  # (period, day, hour)
    p_min: float = 0.0


@dataclass(frozen=True, eq=False)
class TransmissionLine:
    id: int
    from_bus: int
    to_bus: int
    reactance: float
    rating: np.ndarray  # (period, day, hour)


@dataclass(frozen=True, eq=False)
class CandidateLine(TransmissionLine):
    capital_cost: float = 0.0
    maintenance_ratio: float = 0.0


@dataclass(frozen=True)
class HydrogenRoute:
    id: int
    from_bus: int
    to_bus: int
    pipeline_capacity: float  # MWh-H2 per hour
    electrolyzer_rating: float  # p.u.
    fuelcell_rating: float  # p.u.
    eta_e: float
    eta_f: float
    pipeline_cost: float
    electrolyzer_cost: float
    fuelcell_cost: float
    maintenance_ratio: float = 0.0
    eta_c: float = DEFAULT_ETA_C

    @property
    def round_trip(self) -> float:
        return self.eta_e * self.eta_f


@dataclass(frozen=True, eq=False)
class LoadProfile:
    demand: np.ndarray  # (bus, period, day, hour), bus order follows NetworkCase.buses


@dataclass(frozen=True, eq=False)
class NetworkCase:
    mva_base: float
    horizon: PlanningHorizon
    buses: tuple[Bus, ...]
    generators: tuple[ThermalGenerator, ...]
    renewables: tuple[RenewablePlant, ...]
    lines: tuple[TransmissionLine, ...]
    candidate_lines: tuple[CandidateLine, ...]
    hydrogen_routes: tuple[HydrogenRoute, ...]
    load: LoadProfile
    shed_penalty: float = DEFAULT_SHED_PENALTY
    angle_bound: float = DEFAULT_ANGLE_BOUND
    name: str = ""
    _bus_pos: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_bus_pos", {b.id: i for i, b in enumerate(self.buses)})

    def bus_index(self, bus_id: int) -> int:
        return self._bus_pos[bus_id]

    @property
    def slack_bus(self) -> int | None:
        for b in self.buses:
            if b.is_slack:
                return b.id
        return None

    @property
    def annualization(self) -> float:
        """N^Y * B^MVA * 365/N^D: converts per-unit hourly output to MWh over a period."""
        h = self.horizon
        return h.years_per_period * self.mva_base * h.day_weight

    def route(self, route_id: int) -> HydrogenRoute:
        for r in self.hydrogen_routes:
            if r.id == route_id:
                return r
        raise KeyError(route_id)


# ---------------------------------------------------------------------------
# file I/O


def _schema() -> dict:
    text = resources.files("hytep.data").joinpath("case.schema.json").read_text()
    return json.loads(text)


def bundled_case_path(name: str) -> Path:
    """Resolve a bundled case by name, e.g. ``fig2_two_bus``."""
    stem = name[:-5] if name.endswith(".json") else name
    path = Path(str(resources.files("hytep.data").joinpath(f"{stem}.json")))
    if not path.exists():
        raise FileNotFoundError(f"no bundled case named {name!r}")
    return path


BUNDLED_CASES = ("fig2_two_bus", "fig3_low_demand", "six_bus_sweep")


def _profile(value: Any, shape: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape != shape:
        raise CaseShapeError(f"{what}: profile shape {arr.shape} does not match horizon {shape}")
    return arr


def case_from_dict(data: dict) -> NetworkCase:
    """Build a NetworkCase from a parsed case document (MW units)."""
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CaseParseError(f"schema violation at {loc}: {exc.message}") from None

    base = float(data["mva_base"])
    hz = data["horizon"]
    horizon = PlanningHorizon(
        n_periods=hz["n_periods"],
        years_per_period=hz["years_per_period"],
        typical_days_per_year=hz["typical_days_per_year"],
        intervals_per_day=hz["intervals_per_day"],
        period_labels=tuple(hz.get("period_labels", ())),
        day_labels=tuple(hz.get("day_labels", ())),
    )
    shape = horizon.shape

    buses = tuple(Bus(b["id"], b.get("name", ""), bool(b.get("is_slack", False))) for b in data["buses"])
    bus_ids = {b.id for b in buses}

    def check_bus(bus_id: int, owner: str) -> int:
        if bus_id not in bus_ids:
            raise CaseReferenceError(f"{owner} references unknown bus {bus_id}")
        return bus_id

    gens = []
    for g in data.get("generators", []):
        owner = f"generator {g['id']}"
        limits = None
        if g.get("kind", "existing") == "new":
            raw = np.asarray(g.get("per_period_limits", []), dtype=float)
            if raw.shape != (horizon.n_periods, 2):
                raise CaseShapeError(
                    f"{owner}: per_period_limits shape {raw.shape} != ({horizon.n_periods}, 2)")
            limits = _frozen(raw / base)
        gens.append(ThermalGenerator(
            id=g["id"], bus=check_bus(g["bus"], owner), kind=g.get("kind", "existing"),
            energy_cost=float(g["energy_cost"]),
            p_min=float(g.get("p_min", 0.0)) / base, p_max=float(g.get("p_max", 0.0)) / base,
            per_period_limits=limits, retire_period=g.get("retire_period"),
        ))

    rens = []
    for r in data.get("renewables", []):
        owner = f"renewable {r['id']}"
        rens.append(RenewablePlant(
            id=r["id"], bus=check_bus(r["bus"], owner), kind=r.get("kind", "existing"),
            availability=_frozen(_profile(r["availability"], shape, owner) / base),
            p_min=float(r.get("p_min", 0.0)) / base,
        ))

    lines = []
    for ln in data.get("lines", []):
        owner = f"line {ln['id']}"
        lines.append(TransmissionLine(
            id=ln["id"], from_bus=check_bus(ln["from_bus"], owner), to_bus=check_bus(ln["to_bus"], owner),
            reactance=float(ln["reactance"]),
            rating=_frozen(_profile(ln["rating"], shape, owner) / base),
        ))

    cands = []
    for ln in data.get("candidate_lines", []):
        owner = f"candidate line {ln['id']}"
        cands.append(CandidateLine(
            id=ln["id"], from_bus=check_bus(ln["from_bus"], owner), to_bus=check_bus(ln["to_bus"], owner),
            reactance=float(ln["reactance"]),
            rating=_frozen(_profile(ln["rating"], shape, owner) / base),
            capital_cost=float(ln["capital_cost"]),
            maintenance_ratio=float(ln.get("maintenance_ratio", 0.0)),
        ))

    routes = []
    for h in data.get("hydrogen_routes", []):
        owner = f"hydrogen route {h['id']}"
        routes.append(HydrogenRoute(
            id=h["id"], from_bus=check_bus(h["from_bus"], owner), to_bus=check_bus(h["to_bus"], owner),
            pipeline_capacity=float(h["pipeline_capacity"]),
            electrolyzer_rating=float(h["electrolyzer_rating"]) / base,
            fuelcell_rating=float(h["fuelcell_rating"]) / base,
            eta_e=float(h["eta_e"]), eta_f=float(h["eta_f"]),
            eta_c=float(h.get("eta_c", DEFAULT_ETA_C)),
            pipeline_cost=float(h["pipeline_cost"]),
            electrolyzer_cost=float(h["electrolyzer_cost"]),
            fuelcell_cost=float(h["fuelcell_cost"]),
            maintenance_ratio=float(h.get("maintenance_ratio", 0.0)),
        ))

    demand = np.zeros((len(buses),) + shape)
    pos = {b.id: i for i, b in enumerate(buses)}
    for key, profile in data.get("load", {}).items():
        bus_id = int(key)
        check_bus(bus_id, "load")
        demand[pos[bus_id]] = _profile(profile, shape, f"load at bus {bus_id}") / base

    return NetworkCase(
        mva_base=base, horizon=horizon, buses=buses, generators=tuple(gens), renewables=tuple(rens),
        lines=tuple(lines), candidate_lines=tuple(cands), hydrogen_routes=tuple(routes),
        load=LoadProfile(_frozen(demand)),
        shed_penalty=float(data.get("shed_penalty", DEFAULT_SHED_PENALTY)),
        angle_bound=float(data.get("angle_bound", DEFAULT_ANGLE_BOUND)),
        name=data.get("name", ""),
    )


def load_case(path: str | Path) -> NetworkCase:
    """Read and resolve a JSON case file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from None
    case = case_from_dict(data)
    if not case.name:
        case = replace(case, name=path.stem)
    return case


def case_to_dict(case: NetworkCase) -> dict:
    """Inverse of :func:`case_from_dict`; powers written back in MW."""
    base = case.mva_base
    hz = case.horizon

    def mw(a: np.ndarray) -> list:
        return (np.asarray(a) * base).tolist()

    gens = []
    for g in case.generators:
        d = {"id": g.id, "bus": g.bus, "kind": g.kind, "energy_cost": g.energy_cost}
        if g.kind == "new":
            d["per_period_limits"] = mw(g.per_period_limits)
        else:
            d["p_min"] = g.p_min * base
            d["p_max"] = g.p_max * base
        if g.retire_period is not None:
            d["retire_period"] = g.retire_period
        gens.append(d)

    return {
        "name": case.name,
        "mva_base": base,
        "horizon": {
            "n_periods": hz.n_periods, "years_per_period": hz.years_per_period,
            "typical_days_per_year": hz.typical_days_per_year, "intervals_per_day": hz.intervals_per_day,
            "period_labels": list(hz.period_labels), "day_labels": list(hz.day_labels),
        },
        "buses": [{"id": b.id, "name": b.name, "is_slack": b.is_slack} for b in case.buses],
        "generators": gens,
        "renewables": [
            {"id": r.id, "bus": r.bus, "kind": r.kind, "p_min": r.p_min * base,
             "availability": mw(r.availability)} for r in case.renewables],
        "lines": [
            {"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "reactance": ln.reactance,
             "rating": mw(ln.rating)} for ln in case.lines],
        "candidate_lines": [
            {"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "reactance": ln.reactance,
             "rating": mw(ln.rating), "capital_cost": ln.capital_cost,
             "maintenance_ratio": ln.maintenance_ratio} for ln in case.candidate_lines],
        "hydrogen_routes": [
            {"id": h.id, "from_bus": h.from_bus, "to_bus": h.to_bus,
             "pipeline_capacity": h.pipeline_capacity,
             "electrolyzer_rating": h.electrolyzer_rating * base,
             "fuelcell_rating": h.fuelcell_rating * base,
             "eta_e": h.eta_e, "eta_f": h.eta_f, "eta_c": h.eta_c,
             "pipeline_cost": h.pipeline_cost, "electrolyzer_cost": h.electrolyzer_cost,
             "fuelcell_cost": h.fuelcell_cost, "maintenance_ratio": h.maintenance_ratio}
            for h in case.hydrogen_routes],
        "load": {str(b.id): mw(case.load.demand[i]) for i, b in enumerate(case.buses)
                 if np.any(case.load.demand[i])},
        "shed_penalty": case.shed_penalty,
        "angle_bound": case.angle_bound,
    }


def save_case(case: NetworkCase, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(case_to_dict(case), indent=1))
    return path


# ---------------------------------------------------------------------------
# validation


def _dupes(ids: Iterable[int]) -> set[int]:
    seen, dup = set(), set()
    for i in ids:
        (dup if i in seen else seen).add(i)
    return dup


def validate(case: NetworkCase) -> list[str]:
    """Return one descriptor per violated invariant; empty means the case is usable."""
    out: list[str] = []
    hz = case.horizon
    shape = hz.shape
    for fname in ("n_periods", "years_per_period", "typical_days_per_year", "intervals_per_day"):
        if getattr(hz, fname) < 1:
            out.append(f"horizon: {fname} must be >= 1")
    if hz.period_labels and len(hz.period_labels) != hz.n_periods:
        out.append("horizon: period_labels length must equal n_periods")
    if hz.day_labels and len(hz.day_labels) != hz.typical_days_per_year:
        out.append("horizon: day_labels length must equal typical_days_per_year")
    if case.mva_base <= 0:
        out.append("case: mva_base must be positive")

    bus_ids = {b.id for b in case.buses}
    for d in _dupes(b.id for b in case.buses):
        out.append(f"bus {d}: duplicate id")
    n_slack = sum(b.is_slack for b in case.buses)
    if n_slack != 1:
        out.append(f"case: exactly one slack bus required (found {n_slack})")

    def bus_ok(owner: str, *ids: int) -> None:
        for i in ids:
            if i not in bus_ids:
                out.append(f"{owner}: unknown bus {i}")

    for coll, label in ((case.generators, "generator"), (case.renewables, "renewable"),
                        (case.lines, "line"), (case.candidate_lines, "candidate line"),
                        (case.hydrogen_routes, "hydrogen route")):
        for d in _dupes(x.id for x in coll):
            out.append(f"{label} {d}: duplicate id")

    for g in case.generators:
        owner = f"generator {g.id}"
        bus_ok(owner, g.bus)
        if g.kind not in ("existing", "new"):
            out.append(f"{owner}: kind must be existing or new")
        if g.energy_cost < 0:
            out.append(f"{owner}: energy_cost must be >= 0")
        if g.kind == "new":
            lim = g.per_period_limits
            if lim is None or lim.shape != (hz.n_periods, 2):
                out.append(f"{owner}: per_period_limits length must equal n_periods")
            elif np.any(lim[:, 0] < 0) or np.any(lim[:, 0] > lim[:, 1]):
                out.append(f"{owner}: per-period limits need 0 <= p_min <= p_max")
        elif not (0 <= g.p_min <= g.p_max):
            out.append(f"{owner}: need 0 <= p_min <= p_max")

    for r in case.renewables:
        owner = f"renewable {r.id}"
        bus_ok(owner, r.bus)
        if r.availability.shape != shape:
            out.append(f"{owner}: availability shape {r.availability.shape} != {shape}")
        elif np.any(r.availability < r.p_min - 1e-12):
            out.append(f"{owner}: availability below p_min")
        if r.p_min < 0:
            out.append(f"{owner}: p_min must be >= 0")

    for ln in tuple(case.lines) + tuple(case.candidate_lines):
        owner = f"{'candidate line' if isinstance(ln, CandidateLine) else 'line'} {ln.id}"
        bus_ok(owner, ln.from_bus, ln.to_bus)
        if ln.from_bus == ln.to_bus:
            out.append(f"{owner}: from_bus equals to_bus")
        if not ln.reactance > 0:
            out.append(f"{owner}: reactance must be > 0")
        if ln.rating.shape != shape:
            out.append(f"{owner}: rating shape {ln.rating.shape} != {shape}")
        elif np.any(ln.rating <= 0):
            out.append(f"{owner}: rating must be > 0")
        if isinstance(ln, CandidateLine):
            if ln.capital_cost < 0:
                out.append(f"{owner}: capital_cost must be >= 0")
            if not (0 <= ln.maintenance_ratio < 1):
                out.append(f"{owner}: maintenance_ratio out of [0,1)")

    for h in case.hydrogen_routes:
        owner = f"hydrogen route {h.id}"
        bus_ok(owner, h.from_bus, h.to_bus)
        if h.from_bus == h.to_bus:
            out.append(f"{owner}: from_bus equals to_bus")
        if not (0 < h.eta_e <= 1):
            out.append(f"{owner}: eta_e out of (0,1]")
        if not (0 < h.eta_f <= 1):
            out.append(f"{owner}: eta_f out of (0,1]")
        if h.eta_c < 0:
            out.append(f"{owner}: eta_c must be >= 0")
        for attr in ("pipeline_capacity", "electrolyzer_rating", "fuelcell_rating",
                     "pipeline_cost", "electrolyzer_cost", "fuelcell_cost"):
            if getattr(h, attr) < 0:
                out.append(f"{owner}: {attr} must be >= 0")
        if not (0 <= h.maintenance_ratio < 1):
            out.append(f"{owner}: maintenance_ratio out of [0,1)")

    dem = case.load.demand
    if dem.shape != (len(case.buses),) + shape:
        out.append(f"load: shape {dem.shape} != {(len(case.buses),) + shape}")
    elif np.any(dem < 0):
        out.append("load: demand must be >= 0")

    max_cost = max((g.energy_cost for g in case.generators), default=0.0)
    # shedding one p.u. for one interval must cost more than serving it
    if not case.shed_penalty > case.annualization * max_cost:
        out.append("case: shed_penalty must exceed the largest annualized generation cost "
                   f"({case.annualization * max_cost:g})")
    if not case.angle_bound > 0:
        out.append("case: angle_bound must be > 0")
    return out


# ---------------------------------------------------------------------------
# scenario transforms


def _energy(tensor: np.ndarray, horizon: PlanningHorizon) -> float:
    return float(np.sum(tensor) * horizon.day_weight)


def renewable_penetration(case: NetworkCase) -> float:
    """Available renewable energy divided by load energy over the horizon."""
    avail = sum(_energy(r.availability, case.horizon) for r in case.renewables)
    load = _energy(case.load.demand, case.horizon)
    return avail / load if load > 0 else math.inf


def scale_renewable_penetration(case: NetworkCase, target: float) -> NetworkCase:
    """Rescale every availability profile by one factor to hit ``target`` penetration."""
    if target < 0:
        raise ValueError("penetration target must be >= 0")
    avail = sum(_energy(r.availability, case.horizon) for r in case.renewables)
    load = _energy(case.load.demand, case.horizon)
    if avail <= 0:
        if target > 0:
            raise ValueError("penetration target unachievable: no renewable energy available")
        return case
    factor = target * load / avail
    rens = tuple(replace(r, availability=_frozen(r.availability * factor)) for r in case.renewables)
    return replace(case, renewables=rens)


def apply_hydrogen_cost_reduction(case: NetworkCase, reduction: float) -> NetworkCase:
    """Scale pipeline, electrolyzer and fuel-cell capital costs by ``1 - reduction``."""
    if not (0 <= reduction < 1):
        raise ValueError("cost reduction must lie in [0, 1)")
    keep = 1.0 - reduction
    routes = tuple(replace(h, pipeline_cost=h.pipeline_cost * keep,
                           electrolyzer_cost=h.electrolyzer_cost * keep,
                           fuelcell_cost=h.fuelcell_cost * keep)
                   for h in case.hydrogen_routes)
    return replace(case, hydrogen_routes=routes)


def set_round_trip(case: NetworkCase, round_trip: float) -> NetworkCase:
    """Scale eta_e and eta_f of every route by the same factor so their product is ``round_trip``."""
    if not (0 < round_trip <= 1):
        raise ValueError("round-trip efficiency must lie in (0, 1]")
    routes = []
    for h in case.hydrogen_routes:
        k = math.sqrt(round_trip / h.round_trip)
        eta_e, eta_f = h.eta_e * k, h.eta_f * k
        if eta_e > 1 + 1e-12 or eta_f > 1 + 1e-12:
            raise ValueError(f"hydrogen route {h.id}: round trip {round_trip} pushes an efficiency above 1")
        routes.append(replace(h, eta_e=min(eta_e, 1.0), eta_f=min(eta_f, 1.0)))
    return replace(case, hydrogen_routes=tuple(routes))
