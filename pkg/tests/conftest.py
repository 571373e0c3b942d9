import copy
import json
from pathlib import Path

import numpy as np
import pytest

from pfsm.model import Instance, load_instance, load_instance_path
from pfsm.solution import Solution

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "pfsm" / "data"


@pytest.fixture(scope="session")
def yushe() -> Instance:
    return load_instance_path(DATA_DIR / "yushe.json")


@pytest.fixture(scope="session")
def simnet() -> Instance:
    return load_instance_path(DATA_DIR / "simnet.json")


@pytest.fixture(scope="session")
def yushe_doc() -> dict:
    return json.loads((DATA_DIR / "yushe.json").read_text())


# reported optimal scheme of the two-line case study:
# duties (1,5)(2,4)(3,6)(7,10)(8,11)(9,12), types S S M L M L,
# passenger shares 100 100 80 50 90 70
REFERENCE_SCHEME = Solution.from_parts(
    x=[1, 2, 3, 2, 1, 3, 4, 5, 6, 4, 5, 6],
    y=[0, 0, 1, 2, 1, 2],
    lam=[100, 100, 80, 50, 90, 70],
)


@pytest.fixture(scope="session")
def reference_scheme() -> Solution:
    return REFERENCE_SCHEME


@pytest.fixture(scope="session")
def separated_medium() -> Solution:
    return Solution.from_parts(x=REFERENCE_SCHEME.x, y=[1] * 6, lam=[100] * 6)


# 64-scheme toy case: two non-overlapping runs, two buses, two types,
# passenger shares on the {50, 100} grid.  The only feasible scheme puts
# the big type on both buses, full passenger share on the passenger run
# (100 seats for 100 riders) and a 50/50 split on the parcel run
# (25 m3 for 250 parcels of 0.1 m3).
MICRO_DOC = {
    "schema_version": 1,
    "currency": "RMB",
    "stops": [{"id": 1, "kind": "ITSC"}, {"id": 2, "kind": "regular"}, {"id": 3, "kind": "ITSC"}],
    "lines": [{"id": 1, "stops": [1, 2, 3], "segments_km": [5.0, 5.0]}],
    "runs": [
        {"id": 1, "line": 1, "direction": 1, "departure": "08:00", "arrival": "08:30"},
        {"id": 2, "line": 1, "direction": 1, "departure": "10:00", "arrival": "10:30"},
    ],
    "vehicle_types": [
        {"id": "A", "capacity_m3": 10.0, "running_cost_per_km": 0.4,
         "purchase_cost_per_day": 100.0, "fare_per_km": 0.2},
        {"id": "B", "capacity_m3": 50.0, "running_cost_per_km": 0.8,
         "purchase_cost_per_day": 300.0, "fare_per_km": 0.2},
    ],
    "fleet": {"size": 2, "seat_volume_m3": 0.5, "parcel_volume_m3": 0.1},
    "demand": [
        {"run": 1, "from": 1, "to": 3, "passengers": 100},
        {"run": 2, "from": 1, "to": 3, "parcels": 250},
    ],
    "fares": {"passenger_base": 2.5, "passenger_base_km": 5.0,
              "freight_base": 1.0, "freight_base_km": 2.0, "freight_per_km": 0.05},
    "toll": None,
    "dwell": {"per_passenger_s": 3.0, "per_parcel_s": 5.0, "cost_per_hour": 30.0},
    "bpr": {"beta": 0.15, "z": 4.0, "sigma_minutes": 0.5},
    "reliability": {"gamma": 0.85},
    "limits": {"t_max_minutes": 60.0, "lambda_min": 0.5},
    "arrivals": {"window_minutes": 10.0},
    "carbon": {"diesel_kg_per_l": 2.6765, "grid_kg_per_kwh": 0.7967},
}


@pytest.fixture(scope="session")
def micro() -> Instance:
    return load_instance(copy.deepcopy(MICRO_DOC))


def micro_variant(**updates) -> dict:
    doc = copy.deepcopy(MICRO_DOC)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key].update(value)
        else:
            doc[key] = value
    return doc


# three-stop, two-run case used as the timeline oracle; every expected
# number below is derived by hand in tests/test_service_time.py
SPREADSHEET_DOC = {
    "schema_version": 1,
    "currency": "RMB",
    "stops": [{"id": 1, "kind": "ITSC"}, {"id": 2, "kind": "ITSC"}, {"id": 3, "kind": "ITSC"}],
    "lines": [{"id": 1, "stops": [1, 2, 3], "segments_km": [6.0, 4.0]}],
    "runs": [
        {"id": 1, "line": 1, "direction": 1, "departure": "08:00", "arrival": "08:20"},
        {"id": 2, "line": 1, "direction": 1, "departure": "09:00", "arrival": "09:20"},
    ],
    "vehicle_types": [
        {"id": "std", "capacity_m3": 10.0, "running_cost_per_km": 0.5,
         "purchase_cost_per_day": 200.0, "fare_per_km": 0.3},
    ],
    "fleet": {"size": 2, "seat_volume_m3": 0.5, "parcel_volume_m3": 0.1},
    "demand": [
        {"run": 1, "from": 1, "to": 3, "passengers": 15},
        {"run": 1, "from": 1, "to": 2, "passengers": 6},
        {"run": 1, "from": 2, "to": 3, "parcels": 12},
        {"run": 2, "from": 1, "to": 3, "passengers": 8},
    ],
    "fares": {"passenger_base": 2.0, "passenger_base_km": 5.0,
              "freight_base": 1.0, "freight_base_km": 5.0, "freight_per_km": 0.05},
    "toll": None,
    "dwell": {"per_passenger_s": 4.0, "per_parcel_s": 10.0, "cost_per_hour": 36.0},
    "bpr": {"beta": 0.15, "z": 4.0, "sigma_minutes": 0.0},
    "reliability": {"gamma": 0.85},
    "limits": {"t_max_minutes": 90.0, "lambda_min": 0.5},
    "arrivals": {"window_minutes": 10.0},
}


@pytest.fixture(scope="session")
def spreadsheet_case() -> tuple[Instance, Solution]:
    inst = load_instance(copy.deepcopy(SPREADSHEET_DOC))
    sol = Solution.from_parts(x=[1, 2], y=[0, 0], lam=[50, 100])
    return inst, sol


def random_solution(inst: Instance, rng: np.random.Generator) -> Solution:
    lam_lo = int(round(100 * inst.lambda_min))
    return Solution.from_parts(
        x=rng.integers(1, inst.fleet_size + 1, size=inst.n_runs),
        y=rng.integers(0, inst.n_types, size=inst.fleet_size),
        lam=rng.integers(lam_lo, 101, size=inst.fleet_size),
    )
