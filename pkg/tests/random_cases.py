"""Seeded generator of tiny planning cases for oracle comparisons."""

from __future__ import annotations

import numpy as np

from hytep.grid_model import NetworkCase, case_from_dict


def random_case_dict(seed: int, n_periods: int = 2, hours: int = 4, max_buses: int = 5,
                     max_lines: int = 2, max_routes: int = 2) -> dict:
    rng = np.random.default_rng(seed)
    nb = int(rng.integers(3, max_buses + 1))
    shape = (n_periods, 1, hours)

    def profile(lo, hi):
        return np.round(rng.uniform(lo, hi, size=shape), 1).tolist()

    buses = [{"id": i + 1, "is_slack": i == 0} for i in range(nb)]
    lines = []
    for i in range(1, nb):  # random spanning tree keeps the network connected
        j = int(rng.integers(0, i))
        lines.append({"id": i, "from_bus": j + 1, "to_bus": i + 1,
                      "reactance": round(float(rng.uniform(0.05, 0.3)), 3), "rating": profile(120, 400)})

    def pair():
        a, b = rng.choice(nb, size=2, replace=False)
        return int(a) + 1, int(b) + 1

    load_buses = rng.choice(np.arange(1, nb + 1), size=int(rng.integers(1, min(3, nb) + 1)), replace=False)
    load = {str(int(b)): profile(40, 220) for b in load_buses}
    peak = float(np.max(np.sum([np.asarray(v) for v in load.values()], axis=0)))
    n_gen = int(rng.integers(1, 3))
    # thermal fleet covers the peak, so shedding only comes from network limits
    gens = [{"id": g + 1, "bus": int(rng.integers(1, nb + 1)),
             "energy_cost": round(float(rng.uniform(2e-5, 1e-4)), 7),
             "p_min": 0.0, "p_max": round(1.3 * peak / n_gen + 10, 1)} for g in range(n_gen)]
    rens = [{"id": r + 1, "bus": int(rng.integers(1, nb + 1)), "availability": profile(0, 300)}
            for r in range(int(rng.integers(1, 3)))]

    cands = []
    for k in range(int(rng.integers(0, max_lines + 1))):
        a, b = pair()
        cands.append({"id": k + 1, "from_bus": a, "to_bus": b,
                      "reactance": round(float(rng.uniform(0.05, 0.3)), 3), "rating": profile(60, 200),
                      "capital_cost": round(float(rng.uniform(5, 80)), 2),
                      "maintenance_ratio": round(float(rng.uniform(0, 0.03)), 3)})
    routes = []
    for h in range(int(rng.integers(1, max_routes + 1))):
        a, b = pair()
        routes.append({"id": h + 1, "from_bus": a, "to_bus": b,
                       "pipeline_capacity": round(float(rng.uniform(100, 400)), 1),
                       "electrolyzer_rating": round(float(rng.uniform(50, 250)), 1),
                       "fuelcell_rating": round(float(rng.uniform(30, 150)), 1),
                       "eta_e": round(float(rng.uniform(0.5, 0.9)), 3),
                       "eta_f": round(float(rng.uniform(0.5, 0.9)), 3),
                       "eta_c": round(float(rng.uniform(0, 0.08)), 3),
                       "pipeline_cost": round(float(rng.uniform(5, 60)), 2),
                       "electrolyzer_cost": round(float(rng.uniform(1, 10)), 2),
                       "fuelcell_cost": round(float(rng.uniform(1, 10)), 2),
                       "maintenance_ratio": round(float(rng.uniform(0, 0.02)), 3)})
    return {
        "name": f"random_{seed}", "mva_base": 100,
        "horizon": {"n_periods": n_periods, "years_per_period": 5, "typical_days_per_year": 1,
                    "intervals_per_day": hours},
        "buses": buses, "generators": gens, "renewables": rens, "lines": lines,
        "candidate_lines": cands, "hydrogen_routes": routes, "load": load, "shed_penalty": 1e4,
    }


def random_case(seed: int, **kw) -> NetworkCase:
    return case_from_dict(random_case_dict(seed, **kw))
