"""Build the bundled instance files and verify their calibration anchors.

Regenerates src/pfsm/data/{yushe,simnet}.json.  The demand-to-run mapping
reconstructs the case-study request tables using their pickup windows; the
two base-fare distances are calibrated so the bundled tariffs reproduce the
reported revenue totals.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

VEHICLE_TYPES = [
    {"id": "small", "capacity_m3": 13.56, "running_cost_per_km": 0.4,
     "purchase_cost_per_day": 421.23, "fare_per_km": 0.17, "energy_kwh_per_km": 0.75},
    {"id": "medium", "capacity_m3": 20.3, "running_cost_per_km": 0.6,
     "purchase_cost_per_day": 506.23, "fare_per_km": 0.22, "energy_kwh_per_km": 0.75},
    {"id": "large", "capacity_m3": 30.6, "running_cost_per_km": 0.8,
     "purchase_cost_per_day": 678.08, "fare_per_km": 0.27, "energy_kwh_per_km": 0.75},
]

CARBON = {"diesel_kg_per_l": 2.6765, "grid_kg_per_kwh": 0.7967}
TRUCKS = {"capacity_m3": 17.28, "fuel_cost_per_km": 1.6, "purchase_cost_per_day": 850.0,
          "driver_wage_per_day": 500.0, "diesel_l_per_km": 0.15}


def build_yushe() -> dict:
    stops = []
    for sid in range(1, 18):
        kind = "regular"
        if sid in (10, 11):
            kind = "DC"
        elif sid in (4, 16):
            kind = "ITSC"
        stops.append({"id": sid, "kind": kind})

    lines = [
        {"id": 1, "stops": [10, 1, 2, 3, 4, 5, 6, 7, 8, 9, 11],
         "segments_km": [3.00, 6.12, 6.58, 4.90, 2.16, 3.60, 2.60, 2.00, 12.28, 2.00]},
        {"id": 2, "stops": [10, 12, 13, 14, 15, 16, 17, 8, 9, 11],
         "segments_km": [3.00, 3.63, 3.19, 4.40, 3.49, 5.83, 4.51, 12.28, 2.00]},
    ]

    runs = [
        {"id": 1, "line": 1, "direction": 1, "departure": "06:00", "arrival": "07:10"},
        {"id": 2, "line": 1, "direction": 1, "departure": "07:30", "arrival": "08:40"},
        {"id": 3, "line": 1, "direction": 1, "departure": "09:00", "arrival": "10:10"},
        {"id": 4, "line": 1, "direction": -1, "departure": "15:00", "arrival": "16:10"},
        {"id": 5, "line": 1, "direction": -1, "departure": "16:30", "arrival": "17:40"},
        {"id": 6, "line": 1, "direction": -1, "departure": "18:00", "arrival": "19:10"},
        {"id": 7, "line": 2, "direction": 1, "departure": "06:10", "arrival": "07:15"},
        {"id": 8, "line": 2, "direction": 1, "departure": "08:10", "arrival": "09:15"},
        {"id": 9, "line": 2, "direction": 1, "departure": "10:10", "arrival": "11:15"},
        {"id": 10, "line": 2, "direction": -1, "departure": "15:10", "arrival": "16:15"},
        {"id": 11, "line": 2, "direction": -1, "departure": "17:10", "arrival": "18:15"},
        {"id": 12, "line": 2, "direction": -1, "departure": "19:10", "arrival": "20:15"},
    ]

    pax = [
        (1, 3, 9), (2, 8, 9),
        (3, 10, 4), (3, 4, 8), (3, 8, 9), (3, 2, 8),
        (4, 4, 10),
        (5, 9, 3), (5, 8, 4),
        (6, 9, 1), (6, 9, 8), (6, 8, 1),
        (8, 12, 9), (8, 16, 8),
        (9, 15, 9), (9, 14, 17),
        (10, 9, 12),
        (11, 9, 15), (11, 17, 12),
        (12, 8, 16),
    ]
    freight = [
        (3, 10, 4, 120), (3, 4, 11, 120),
        (6, 11, 4, 120), (6, 4, 10, 120),
        (7, 10, 11, 150), (7, 10, 11, 120),
        (8, 10, 16, 60),
        (9, 10, 16, 60), (9, 16, 11, 120),
        (10, 11, 10, 150), (10, 11, 10, 120),
        (11, 11, 16, 60),
        (12, 11, 16, 60), (12, 16, 10, 120),
    ]
    demand = [{"run": r, "from": a, "to": b, "passengers": 15} for r, a, b in pax]
    demand += [{"run": r, "from": a, "to": b, "parcels": q} for r, a, b, q in freight]

    return {
        "schema_version": 1,
        "currency": "RMB",
        "stops": stops,
        "lines": lines,
        "runs": runs,
        "vehicle_types": VEHICLE_TYPES,
        "fleet": {"size": 6, "seat_volume_m3": 0.45, "parcel_volume_m3": 0.03},
        "demand": demand,
        "fares": {
            "passenger_base": 2.5,
            "passenger_base_km": 22.11,     # calibrated against the revenue total
            "freight_base": 1.0,
            "freight_base_km": 5.8148,      # calibrated against the revenue total
            "freight_per_km": 0.05,
        },
        "toll": None,
        "dwell": {"per_passenger_s": 3.0, "per_parcel_s": 5.0, "cost_per_hour": 30.0},
        "bpr": {"beta": 0.15, "z": 4.0, "sigma_minutes": 0.5, "skewness": 0.0, "kurtosis": 0.0},
        "reliability": {"gamma": 0.85},
        "limits": {"t_max_minutes": 60.0, "lambda_min": 0.4},
        "arrivals": {"window_minutes": 10.0},
        "carbon": CARBON,
        "trucks": TRUCKS,
    }


def build_simnet() -> dict:
    corridor = [1] + list(range(11, 25))          # 1, 11..24
    terminals = [2, 3, 4, 5, 6, 7, 8]
    stops = [{"id": 9, "kind": "DC"}, {"id": 10, "kind": "DC"}]
    for sid in corridor + terminals:
        stops.append({"id": sid, "kind": "regular"})

    lines = []
    for ell in range(1, 8):
        seq = [9] + corridor + terminals[:ell] + [10]
        segs = [2.0] + [3.0] * (len(corridor) - 1 + ell) + [2.0]
        lines.append({"id": ell, "stops": seq, "segments_km": segs})

    runs = [
        {"id": 1, "line": 1, "direction": 1, "departure": "15:00", "arrival": "16:50", "energy_kwh": 30},
        {"id": 2, "line": 1, "direction": 1, "departure": "17:00", "arrival": "18:50", "energy_kwh": 30},
        {"id": 3, "line": 2, "direction": 1, "departure": "15:30", "arrival": "17:00", "energy_kwh": 25},
        {"id": 4, "line": 2, "direction": 1, "departure": "17:30", "arrival": "19:00", "energy_kwh": 25},
        {"id": 5, "line": 3, "direction": 1, "departure": "16:30", "arrival": "18:00", "energy_kwh": 25},
        {"id": 6, "line": 4, "direction": 1, "departure": "15:10", "arrival": "16:40", "energy_kwh": 25},
        {"id": 7, "line": 4, "direction": 1, "departure": "17:10", "arrival": "18:40", "energy_kwh": 25},
        {"id": 8, "line": 5, "direction": 1, "departure": "16:50", "arrival": "18:20", "energy_kwh": 25},
        {"id": 9, "line": 6, "direction": 1, "departure": "16:40", "arrival": "17:50", "energy_kwh": 19},
        {"id": 10, "line": 7, "direction": 1, "departure": "17:20", "arrival": "20:00", "energy_kwh": 44},
    ]

    pax = [
        (1, 1, 2), (1, 12, 18), (1, 1, 15),
        (2, 15, 2), (2, 11, 20), (2, 12, 19),
        (3, 1, 3), (3, 13, 16),
        (4, 1, 24), (4, 18, 3), (4, 17, 19),
        (5, 21, 23), (5, 1, 4), (5, 12, 4),
        (6, 11, 22), (6, 14, 24), (6, 1, 5),
        (7, 17, 22), (7, 1, 24), (7, 17, 5),
        (8, 1, 23), (8, 1, 6), (8, 15, 6),
        (9, 12, 24), (9, 1, 7), (9, 1, 12),
        (10, 16, 24), (10, 15, 21), (10, 1, 18), (10, 18, 8),
    ]
    demand = [{"run": r, "from": a, "to": b, "passengers": 30} for r, a, b in pax]
    demand += [{"run": r, "from": 9, "to": 10, "parcels": 250} for r in range(1, 11)]

    return {
        "schema_version": 1,
        "currency": "RMB",
        "stops": stops,
        "lines": lines,
        "runs": runs,
        "vehicle_types": VEHICLE_TYPES,
        "fleet": {"size": 8, "seat_volume_m3": 0.15, "parcel_volume_m3": 0.03},
        "demand": demand,
        "fares": {"passenger_base": 2.5, "passenger_base_km": 10.0,
                  "freight_base": 1.0, "freight_base_km": 5.0, "freight_per_km": 0.05},
        "toll": None,
        "dwell": {"per_passenger_s": 3.0, "per_parcel_s": 5.0, "cost_per_hour": 30.0},
        "bpr": {"beta": 0.15, "z": 4.0, "sigma_minutes": 0.5, "skewness": 0.0, "kurtosis": 0.0},
        "reliability": {"gamma": 0.85},
        "limits": {"t_max_minutes": 150.0, "lambda_min": 0.3},
        "arrivals": {"window_minutes": 10.0},
        "carbon": CARBON,
        "trucks": TRUCKS,
    }


def verify() -> None:
    import numpy as np

    from pfsm.economics import (FareMode, constraint_residuals, passenger_revenue,
                                freight_revenue, fixed_and_running_cost)
    from pfsm.model import load_instance_path, run_distance, validate_instance
    from pfsm.service_time import simulate_timeline, time_breakdown
    from pfsm.solution import Solution

    data_dir = ROOT / "src" / "pfsm" / "data"
    yushe = load_instance_path(data_dir / "yushe.json")
    simnet = load_instance_path(data_dir / "simnet.json")

    for name, inst in (("yushe", yushe), ("simnet", simnet)):
        rep = validate_instance(inst)
        print(f"{name}: errors={len(rep.errors)} warnings={len(rep.warnings)}")
        for f in rep.errors:
            print("   ERROR", f.code, f.message)

    base = sum(run_distance(yushe, r, include_dc_detour=False) for r in yushe.runs)
    full = sum(run_distance(yushe, r, include_dc_detour=True) for r in yushe.runs)
    print(f"yushe distance: passenger-only {base:.2f} (target 465.42), "
          f"with DC legs {full:.2f} (target 525.42)")

    # reported optimal scheme: duties (1,5)(2,4)(3,6)(7,10)(8,11)(9,12),
    # types S S M L M L, shares 100 100 80 50 90 70
    reference_scheme = Solution.from_parts(
        x=[1, 2, 3, 2, 1, 3, 4, 5, 6, 4, 5, 6],
        y=[0, 0, 1, 2, 1, 2],
        lam=[100, 100, 80, 50, 90, 70],
    )
    sep = Solution.from_parts(x=reference_scheme.x, y=[1] * 6, lam=[100] * 6)

    e_u_sep = passenger_revenue(yushe, sep, FareMode.DESCRIBED)
    e_f = freight_revenue(yushe, FareMode.DESCRIBED)
    print(f"E_u separated (all medium): {e_u_sep:.4f} (target 991.82)")
    print(f"E_f: {e_f:.4f} (target 3257.64)")

    c_km_sep, c_fix_sep = fixed_and_running_cost(yushe, sep, include_freight=False)
    print(f"separated C_km {c_km_sep:.2f} C_fix {c_fix_sep:.2f} (C_fix target 3037.38)")
    z_sep = e_u_sep - c_km_sep - c_fix_sep
    print(f"separated Z (before dwell): {z_sep:.2f} (reference -2462.16)")

    c_km, c_fix = fixed_and_running_cost(yushe, reference_scheme, include_freight=True)
    print(f"PFSM reference_scheme C_km {c_km:.2f} C_fix {c_fix:.2f}")

    tl = simulate_timeline(yushe, reference_scheme, include_freight=True)
    tb = time_breakdown(yushe, reference_scheme, tl, include_freight=True)
    res = constraint_residuals(yushe, reference_scheme, tl, tb.avg, include_freight=True)
    print(f"reference_scheme residual total: {res.normalized_total():.6f} (target 0)")
    print(f"reference_scheme T components: cruise {tb.cruise/300:.2f} dwell {tb.dwell/300:.2f} "
          f"wait {tb.wait/300:.2f} det {tb.detention/300:.2f} avg {tb.avg:.2f}")

    e_u = passenger_revenue(yushe, reference_scheme, FareMode.DESCRIBED)
    dwell_cost = yushe.dwell.cost_per_hour * tl.total_dwell_seconds() / 3600.0
    z = e_u + e_f - c_km - c_fix - dwell_cost
    print(f"reference_scheme: E_u {e_u:.2f} dwell_cost {dwell_cost:.2f} Z {z:.2f} (reference 580.17)")

    tl_sep = simulate_timeline(yushe, sep, include_freight=False)
    tb_sep = time_breakdown(yushe, sep, tl_sep, include_freight=False)
    print(f"separated avg T: {tb_sep.avg:.2f}; PFSM avg {tb.avg:.2f}; "
          f"increase {(tb.avg - tb_sep.avg)/tb_sep.avg*100:.1f}% (reference 19.46%)")

    energy = sum((r.energy_kwh if r.energy_kwh is not None else
                  run_distance(yushe, r, include_dc_detour=True) * 0.75) for r in yushe.runs)
    print(f"yushe daily energy {energy:.2f} kWh (target 394.06); "
          f"CO2 {energy*0.7967:.2f} kg (target 313.95)")

    # simnet: a couple of structural checks
    print(f"simnet: {len(simnet.lines)} lines (target 7), {simnet.n_runs} runs (target 10)")
    arrs = simnet.arrays(True)
    print(f"simnet peak pax per run: {arrs.peak_pax_raw}")
    print(f"simnet peak parcel vol per run: {arrs.peak_parcel_vol}")


def main() -> None:
    data_dir = ROOT / "src" / "pfsm" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    (data_dir / "yushe.json").write_text(json.dumps(build_yushe(), indent=1) + "\n")
    (data_dir / "simnet.json").write_text(json.dumps(build_simnet(), indent=1) + "\n")
    print("wrote yushe.json and simnet.json")
    verify()


if __name__ == "__main__":
    main()
