"""Command-line front end.

Subcommands: ``optimize`` (solve one instance and write a report plus an
iteration trace), ``compare`` (shared operation vs separate passenger buses
and a parcel truck fleet), ``sweep`` (grids over demand scale, the average
travel-time cap, or the minimum passenger share), ``validate`` (instance
checks) and ``carbon`` (emission arithmetic).

Exit codes: 0 success, 1 bad input, 2 optimization found no feasible scheme.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .economics import FareMode
from .evaluation import Evaluation, evaluate
from .model import (Instance, InstanceError, load_instance, load_instance_path,
                    run_distance, validate_instance)
from .service_time import monte_carlo_reliability, waiting_count_literal
from .solution import Solution
from .solver import ALGORITHMS, OptimizeResult, SolverConfig, optimize
from .capacity import separated_truck_plan, carbon_report, bus_energy_kwh

FLOAT_FMT = "%.6g"


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


# ---------------------------------------------------------------------------
# report assembly


def scheme_rows(inst: Instance, sol: Solution) -> list[dict]:
    duties: dict[int, list[int]] = {}
    for r, bus in enumerate(sol.x):
        duties.setdefault(bus, []).append(r)
    rows = []
    for bus in range(1, inst.fleet_size + 1):
        runs = duties.get(bus, [])
        rows.append({
            "bus": bus,
            "runs": [inst.runs[r].id for r in runs],
            "vehicle_type": inst.vehicle_types[sol.y[bus - 1]].id,
            "passenger_share_pct": sol.lam[bus - 1],
        })
    return rows


def build_report(inst: Instance, result: OptimizeResult, config: SolverConfig,
                 extras: dict | None = None) -> dict:
    ev = result.best_evaluation
    cost = ev.cost
    time = ev.time
    report = {
        "scheme": scheme_rows(inst, result.best_solution),
        "objectives": {
            "profit": cost.profit,
            "fitness": result.best_fitness,
            "total_passenger_minutes": time.total,
            "avg_passenger_minutes": time.avg,
            "feasible": ev.feasible,
        },
        "cost": {
            "toll": cost.toll,
            "dwell": cost.dwell,
            "running": cost.running,
            "purchasing": cost.purchasing,
            "passenger_revenue": cost.passenger_revenue,
            "freight_revenue": cost.freight_revenue,
            "total_cost": cost.total_cost,
        },
        "time": {
            "cruise": time.cruise,
            "dwell": time.dwell,
            "wait": time.wait,
            "detention": time.detention,
            "total_passengers": time.total_passengers,
        },
        "carbon": carbon_summary(inst, result.best_solution),
        "solver": {
            "algorithm": config.algorithm,
            "seed": config.seed,
            "population": config.n_pop,
            "iterations": config.max_iter,
            "evaluations": result.total_evaluations,
            "wall_time_s": result.trace.wall_time_s,
            "weights": {"profit": result.weights.w_profit, "time": result.weights.w_time},
            "penalty_coefficient": result.penalty_coefficient,
        },
    }
    if extras:
        report.update(extras)
    return report


def carbon_summary(inst: Instance, sol: Solution | None) -> dict:
    if inst.carbon is None:
        return {}
    kwh = bus_energy_kwh(inst, include_freight=True)
    return {
        "bus_energy_kwh": kwh,
        "bus_co2_kg": carbon_report(electric_kwh=kwh, kg_per_kwh=inst.carbon.grid_kg_per_kwh),
        "grid_kg_per_kwh": inst.carbon.grid_kg_per_kwh,
        "diesel_kg_per_l": inst.carbon.diesel_kg_per_l,
    }


def write_trace_csv(path: Path, result: OptimizeResult) -> None:
    tr = result.trace
    with open(path, "w") as fh:
        fh.write("iter,best_F,best_Z,best_T,feasible_count,evals\n")
        for i in range(len(tr.iteration)):
            fh.write(f"{tr.iteration[i]},{_fmt(tr.best_f[i])},{_fmt(tr.best_z[i])},"
                     f"{_fmt(tr.best_t[i])},{tr.feasible_count[i]},{tr.evals[i]}\n")


# ---------------------------------------------------------------------------
# demand scaling (sweeps)


def scale_demand(inst: Instance, passenger_total: float | None,
                 freight_total: float | None) -> Instance:
    """Rescale OD counts preserving proportions; totals match exactly.

    Largest-remainder rounding: counts are floored after scaling and the
    remaining units go to the records with the largest fractional parts.
    """
    def rescale(records, attr, target):
        counts = [getattr(rec, attr) for rec in records]
        current = sum(counts)
        if current == 0 or target is None:
            return counts
        scaled = [c * target / current for c in counts]
        floored = [math.floor(s) for s in scaled]
        leftover = round(target - sum(floored))
        order = sorted(range(len(scaled)), key=lambda i: scaled[i] - floored[i], reverse=True)
        for i in order[:leftover]:
            floored[i] += 1
        return floored

    pax_recs = [d for d in inst.demand if not d.is_freight]
    frt_recs = [d for d in inst.demand if d.is_freight]
    new_pax = rescale(pax_recs, "passengers", passenger_total)
    new_frt = rescale(frt_recs, "parcels", freight_total)

    demand = []
    for rec, n in zip(pax_recs, new_pax):
        if n > 0:
            demand.append(dataclasses.replace(rec, passengers=int(n)))
    for rec, n in zip(frt_recs, new_frt):
        if n > 0:
            demand.append(dataclasses.replace(rec, parcels=int(n)))
    return dataclasses.replace(inst, demand=tuple(demand), _array_cache={})


def override_limits(inst: Instance, t_max: float | None, lambda_min: float | None) -> Instance:
    changes = {}
    if t_max is not None:
        changes["t_max_minutes"] = float(t_max)
    if lambda_min is not None:
        changes["lambda_min"] = float(lambda_min)
    if not changes:
        return inst
    # the packed arrays do not depend on either limit, so the cache carries over
    return dataclasses.replace(inst, **changes)


# ---------------------------------------------------------------------------
# per-unit profit attribution (sweep metrics)

PARCELS_PER_SEAT = 10  # stacking convention for the space-based comparison


def contribution_metrics(inst: Instance, ev: Evaluation) -> dict:
    """Per-unit contribution comparison between the two services.

    Contribution-margin convention: each service carries only its direct
    costs (its own dwell work; for freight also the DC access mileage that
    exists only because of parcel service).  Shared vehicle costs are left
    out of the per-unit figures.  The space-based ratio values one seat as
    PARCELS_PER_SEAT parcels.
    """
    arrs = inst.arrays(True)
    n_pax = arrs.total_pax
    n_parcels = arrs.total_parcel_vol / inst.parcel_volume_m3 if inst.parcel_volume_m3 else 0.0
    if n_pax == 0 or n_parcels == 0:
        return {"pcr": None, "ier": None, "spcr": None}

    d = inst.dwell
    pax_ops = float(np.sum(arrs.new_pax_per_window)) * 2.0          # board + alight
    parcel_ops = float(np.sum(arrs.freight_on) + np.sum(arrs.freight_off))
    pax_dwell_cost = d.cost_per_hour * d.per_passenger_s * pax_ops / 3600.0
    frt_dwell_cost = d.cost_per_hour * d.per_parcel_s * parcel_ops / 3600.0
    detour_km = float(np.sum(arrs.run_km)) - float(np.sum(inst.arrays(False).run_km))
    km_rate = sum(vt.running_cost_per_km for vt in inst.vehicle_types) / inst.n_types
    frt_detour_cost = detour_km * km_rate

    cost = ev.cost
    pax_unit = (cost.passenger_revenue - pax_dwell_cost) / n_pax
    frt_unit = (cost.freight_revenue - frt_dwell_cost - frt_detour_cost) / n_parcels
    pax_rev_unit = cost.passenger_revenue / n_pax
    frt_rev_unit = cost.freight_revenue / n_parcels
    return {
        # per-parcel contribution relative to one passenger's, as "1:x"
        "pcr": frt_unit / pax_unit if pax_unit else None,
        # passengers per parcel for equal revenue
        "ier": frt_rev_unit / pax_rev_unit if pax_rev_unit else None,
        # same space: a seat's parcel stack vs one passenger
        "spcr": (frt_unit * PARCELS_PER_SEAT) / pax_unit if pax_unit else None,
    }


# ---------------------------------------------------------------------------
# commands


def _load(path: str) -> Instance:
    try:
        return load_instance_path(path)
    except FileNotFoundError:
        raise SystemExit(_fail(f"instance file not found: {path}"))
    except InstanceError as exc:
        raise SystemExit(_fail(f"bad instance: {exc}"))


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        algorithm=args.algo,
        n_pop=args.pop,
        max_iter=args.iters,
        seed=args.seed,
        fare_mode=FareMode(args.fare_mode),
    )


def cmd_optimize(args) -> int:
    inst = override_limits(_load(args.instance), args.tmax,
                           args.lambda_min / 100.0 if args.lambda_min is not None else None)
    config = _solver_config(args)
    result = optimize(inst, config)
    extras = {}
    if args.monte_carlo:
        extras["monte_carlo"] = monte_carlo_reliability(
            inst, result.best_solution, args.monte_carlo, seed=config.seed)
    if args.eq31_mode == "literal":
        extras["waiting_literal_count"] = waiting_count_literal(inst)
    report = build_report(inst, result, config, extras)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=1) + "\n")
    write_trace_csv(out / "trace.csv", result)
    print(f"Z {_fmt(report['objectives']['profit'])} "
          f"avg T {_fmt(report['objectives']['avg_passenger_minutes'])} min "
          f"feasible {report['objectives']['feasible']}")
    print(f"wrote {out / 'report.json'} and {out / 'trace.csv'}")
    return 0 if result.feasible else 2


def cmd_compare(args) -> int:
    inst = _load(args.instance)
    if inst.trucks is None:
        return _fail("instance has no truck parameters; the separate-fleet side needs them")
    config = _solver_config(args)
    result = optimize(inst, config)
    pfsm_report = build_report(inst, result, config)

    # separate operation: all-medium passenger-only buses on the same duties,
    # parcels on a dedicated truck fleet
    medium = _medium_type_index(inst)
    sep_sol = Solution.from_parts(result.best_solution.x,
                                  [medium] * inst.fleet_size,
                                  [100] * inst.fleet_size)
    sep_ev = evaluate(inst, sep_sol, include_freight=False)
    pax_only_ev = evaluate(inst, result.best_solution, include_freight=False)
    trucks = separated_truck_plan(inst)

    comparison = {
        "pfsm": pfsm_report,
        "separated": {
            "bus": {
                "profit": sep_ev.cost.profit,
                "cost": dataclasses.asdict(sep_ev.cost),
                "avg_passenger_minutes": sep_ev.time.avg,
                "fleet_size": inst.fleet_size,
                "running_km": float(np.sum(inst.arrays(False).run_km)),
                "energy_kwh": bus_energy_kwh(inst, include_freight=False),
                "co2_kg": carbon_report(
                    electric_kwh=bus_energy_kwh(inst, include_freight=False),
                    kg_per_kwh=inst.carbon.grid_kg_per_kwh) if inst.carbon else None,
            },
            "truck": trucks,
        },
        "pfsm_passenger_only_avg_minutes": pax_only_ev.time.avg,
        "deltas": {
            "profit_swing": result.best_evaluation.z - sep_ev.cost.profit,
            "avg_time_increase_pct": (
                (result.best_evaluation.avg_time - sep_ev.time.avg) / sep_ev.time.avg * 100.0
                if sep_ev.time.avg > 0 else None),
            "vehicle_count_pfsm": inst.fleet_size,
            "vehicle_count_separated": inst.fleet_size + trucks["fleet_size"],
        },
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.json").write_text(json.dumps(comparison, indent=1) + "\n")
    write_trace_csv(out / "trace.csv", result)
    print(f"PFSM Z {_fmt(result.best_evaluation.z)} vs separated bus Z {_fmt(sep_ev.cost.profit)} "
          f"(swing {_fmt(comparison['deltas']['profit_swing'])})")
    print(f"wrote {out / 'comparison.json'}")
    return 0 if result.feasible else 2


def _medium_type_index(inst: Instance) -> int:
    for i, vt in enumerate(inst.vehicle_types):
        if vt.id.lower() == "medium":
            return i
    return len(inst.vehicle_types) // 2


def cmd_sweep(args) -> int:
    inst = _load(args.instance)
    try:
        values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
    except ValueError:
        return _fail(f"bad sweep values: {args.sweep_values!r}")
    if not values:
        return _fail("empty sweep grid")
    axis = args.sweep_axis
    seeds = list(range(args.seed, args.seed + args.seeds_per_cell))

    pax_total = sum(d.passengers for d in inst.demand)
    frt_total = sum(d.parcels for d in inst.demand)

    rows = []
    for value in values:
        for seed in seeds:
            cell = inst
            if axis == "passenger_demand":
                cell = scale_demand(inst, value, None)
            elif axis == "freight_demand":
                cell = scale_demand(inst, None, value)
            elif axis == "T_max":
                cell = override_limits(inst, value, None)
            elif axis == "lambda_min":
                cell = override_limits(inst, None, value / 100.0)
            config = _solver_config(args)
            config.seed = seed
            result = optimize(cell, config)
            ev = result.best_evaluation
            metrics = contribution_metrics(cell, ev)
            rows.append({
                "axis": axis, "value": value, "seed": seed,
                "best_Z": ev.z, "avg_T": ev.avg_time, "best_F": result.best_fitness,
                "feasible": int(ev.feasible),
                "passenger_total": sum(d.passengers for d in cell.demand),
                "freight_total": sum(d.parcels for d in cell.demand),
                **{k: (v if v is not None else "") for k, v in metrics.items()},
            })
            print(f"{axis}={value:g} seed={seed}: Z {_fmt(ev.z)} avgT {_fmt(ev.avg_time)}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["axis", "value", "seed", "best_Z", "avg_T", "best_F", "feasible",
            "passenger_total", "freight_total", "pcr", "ier", "spcr"]
    with open(out / "sweep.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(
                _fmt(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols) + "\n")
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} cells); "
          f"base demand was {pax_total} passengers / {frt_total} parcels")
    return 0


def cmd_validate(args) -> int:
    inst = _load(args.instance)
    report = validate_instance(inst)
    for f in report.findings:
        print(f"{f.severity}: [{f.code}] {f.message}")
    print(f"{len(report.errors)} errors, {len(report.warnings)} warnings")
    return 0 if report.ok else 1


def cmd_carbon(args) -> int:
    total = 0.0
    if args.km and args.diesel_l_per_km:
        diesel = carbon_report(diesel_km=args.km, l_per_km=args.diesel_l_per_km,
                               kg_per_l=args.diesel_kg_per_l)
        print(f"diesel: {_fmt(diesel)} kg CO2")
        total += diesel
    if args.kwh:
        grid = carbon_report(electric_kwh=args.kwh, kg_per_kwh=args.grid_kg_per_kwh)
        print(f"electric: {_fmt(grid)} kg CO2")
        total += grid
    if args.instance:
        inst = _load(args.instance)
        if inst.carbon:
            kwh = bus_energy_kwh(inst, include_freight=True)
            grid = carbon_report(electric_kwh=kwh, kg_per_kwh=inst.carbon.grid_kg_per_kwh)
            print(f"instance buses: {_fmt(kwh)} kWh -> {_fmt(grid)} kg CO2")
            total += grid
    print(f"total: {_fmt(total)} kg CO2")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfsm",
                                description="Shared passenger-freight bus scheduling optimizer")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, needs_solver=True):
        sp.add_argument("--instance", required=True, help="instance JSON path")
        if needs_solver:
            sp.add_argument("--algo", default="ijs", choices=ALGORITHMS)
            sp.add_argument("--pop", type=int, default=100)
            sp.add_argument("--iters", type=int, default=150)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--fare-mode", dest="fare_mode", default="described",
                            choices=["described", "literal"])
            sp.add_argument("--eq31-mode", dest="eq31_mode", default="waiting",
                            choices=["waiting", "literal"])
            sp.add_argument("--monte-carlo", dest="monte_carlo", type=int, default=0,
                            metavar="N", help="sample count for the reliability check")
            sp.add_argument("--out", default="out", help="output directory")

    sp = sub.add_parser("optimize", help="solve one instance")
    add_common(sp)
    sp.add_argument("--tmax", type=float, default=None,
                    help="override the average travel-time cap, minutes")
    sp.add_argument("--lambda-min", dest="lambda_min", type=float, default=None,
                    help="override the minimum passenger share, percent")
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("compare", help="shared vs separated operation")
    add_common(sp)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("sweep", help="sensitivity grid")
    add_common(sp)
    sp.add_argument("--sweep-axis", dest="sweep_axis", required=True,
                    choices=["passenger_demand", "freight_demand", "T_max", "lambda_min"])
    sp.add_argument("--sweep-values", dest="sweep_values", required=True,
                    help="comma-separated grid values")
    sp.add_argument("--seeds-per-cell", dest="seeds_per_cell", type=int, default=3)
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("validate", help="check an instance file")
    sp.add_argument("--instance", required=True)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("carbon", help="emission arithmetic")
    sp.add_argument("--instance", default=None)
    sp.add_argument("--km", type=float, default=0.0)
    sp.add_argument("--diesel-l-per-km", dest="diesel_l_per_km", type=float, default=0.0)
    sp.add_argument("--diesel-kg-per-l", dest="diesel_kg_per_l", type=float, default=2.6765)
    sp.add_argument("--kwh", type=float, default=0.0)
    sp.add_argument("--grid-kg-per-kwh", dest="grid_kg_per_kwh", type=float, default=0.7967)
    sp.set_defaults(fn=cmd_carbon)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1


if __name__ == "__main__":
    sys.exit(main())
