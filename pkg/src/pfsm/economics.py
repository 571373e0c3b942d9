"""Operator economics: cost terms, fare revenues, profit, constraint residuals.

All functions are pure in (Instance, Solution, RunTimeline) and can be
evaluated concurrently.  These are the reference implementations; the
solver's hot path (``pfsm.evaluation``) recombines the same arithmetic from
precomputed arrays and is tested for exact agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Instance, TollTable, VehicleType, run_distance
from .solution import Solution


class FareMode(str, Enum):
    # "described": flat base fare up to the included distance, per-km beyond
    # (continuous in distance).  "literal": the per-km part also applies
    # below the included distance, yielding a jump at the boundary; kept for
    # fidelity experiments.
    DESCRIBED = "described"
    LITERAL = "literal"


@dataclass(frozen=True)
class CostBreakdown:
    toll: float
    dwell: float
    running: float
    purchasing: float
    passenger_revenue: float
    freight_revenue: float

    @property
    def profit(self) -> float:
        return (self.passenger_revenue + self.freight_revenue
                - self.running - self.dwell - self.purchasing - self.toll)

    @property
    def total_cost(self) -> float:
        return self.toll + self.dwell + self.running + self.purchasing


@dataclass(frozen=True)
class ConstraintResiduals:
    pax_overload: np.ndarray        # persons per run, peak onboard beyond seats
    freight_overload: np.ndarray    # m3 per run, peak volume beyond freight space
    lam_bound: np.ndarray           # per bus, max(0, lambda_min - lambda_k)
    agg_pax_shortfall: float        # persons, total demand beyond offered seats
    agg_freight_shortfall: float    # m3, total parcel volume beyond offered space
    avg_time_excess: float          # minutes beyond the average-travel-time cap

    @property
    def feasible(self) -> bool:
        return self.normalized_total() == 0.0

    def normalized_total(self) -> float:
        """Dimensionless violation magnitude used by the penalty term.

        Fixed unit scales (100 persons, 10 m3, 10 minutes) keep the terms
        commensurate; the smallest representable violation (one person, one
        parcel volume, one share percent) stays well above float noise.
        """
        total = float(self.pax_overload.sum()) / 100.0
        total += float(self.freight_overload.sum()) / 10.0
        total += float(self.lam_bound.sum())
        total += self.agg_pax_shortfall / 100.0
        total += self.agg_freight_shortfall / 10.0
        total += self.avg_time_excess / 10.0
        return total


def seat_count(vt: VehicleType, lam: float, seat_volume_m3: float) -> int:
    """Seats offered by a bus reserving the ``lam`` fraction for passengers."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    if seat_volume_m3 <= 0:
        raise ValueError("seat volume must be positive")
    return int(math.floor(lam * vt.capacity_m3 / seat_volume_m3))


def seats_per_run(inst: Instance, sol: Solution) -> np.ndarray:
    out = np.zeros(inst.n_runs, dtype=np.float64)
    for r in range(inst.n_runs):
        vt = inst.vehicle_types[sol.type_of_run(r)]
        out[r] = seat_count(vt, sol.lam_of_run(r) / 100.0, inst.seat_volume_m3)
    return out


def freight_volume_per_run(inst: Instance, sol: Solution) -> np.ndarray:
    out = np.zeros(inst.n_runs, dtype=np.float64)
    for r in range(inst.n_runs):
        vt = inst.vehicle_types[sol.type_of_run(r)]
        out[r] = (1.0 - sol.lam_of_run(r) / 100.0) * vt.capacity_m3
    return out


def toll_cost(inst: Instance, sol: Solution) -> float:
    """Per-run road toll, classed by seat count; zero for toll-free instances."""
    table: TollTable | None = inst.toll
    if table is None:
        return 0.0
    if not (table.seat_thresholds[0] < table.seat_thresholds[1] < table.seat_thresholds[2]):
        raise ValueError("toll table thresholds must be strictly increasing")
    total = 0.0
    for r, run in enumerate(inst.runs):
        vt = inst.vehicle_types[sol.type_of_run(r)]
        seats = seat_count(vt, sol.lam_of_run(r) / 100.0, inst.seat_volume_m3)
        total += table.rate_for_seats(seats) * inst.line_of_run(run).toll_km
    return total


def dwell_cost(inst: Instance, timeline) -> float:
    """Money value of all dwell time: cost rate is per hour, dwell in seconds."""
    return inst.dwell.cost_per_hour * float(np.sum(timeline.dwell_s)) / 3600.0


def fixed_and_running_cost(inst: Instance, sol: Solution,
                           include_freight: bool = True) -> tuple[float, float]:
    """(running cost over all runs, purchase cost of the typed fleet)."""
    c_km = 0.0
    for r, run in enumerate(inst.runs):
        vt = inst.vehicle_types[sol.type_of_run(r)]
        c_km += run_distance(inst, run, include_dc_detour=include_freight) * vt.running_cost_per_km
    c_fix = sum(inst.vehicle_types[t].purchase_cost_per_day for t in sol.y)
    return c_km, c_fix


def _piecewise_fare(length: float, base: float, base_km: float, per_km: float,
                    mode: FareMode) -> float:
    if mode is FareMode.DESCRIBED:
        return base if length <= base_km else base + per_km * (length - base_km)
    # literal: distance is charged from km zero below the included distance
    return base + per_km * length if length <= base_km else base + per_km * (length - base_km)


def passenger_revenue(inst: Instance, sol: Solution,
                      mode: FareMode = FareMode.DESCRIBED) -> float:
    fares = inst.fares
    run_pos = {run.id: r for r, run in enumerate(inst.runs)}
    total = 0.0
    for rec in inst.demand:
        if rec.is_freight:
            continue
        r = run_pos[rec.run_id]
        line = inst.line_of_run(inst.runs[r])
        length = line.distance_between(rec.origin, rec.dest)
        eta = inst.vehicle_types[sol.type_of_run(r)].fare_per_km
        total += rec.passengers * _piecewise_fare(
            length, fares.passenger_base, fares.passenger_base_km, eta, mode)
    return total


def freight_revenue(inst: Instance, mode: FareMode = FareMode.DESCRIBED) -> float:
    """Parcel revenue; depends on volume carried and distance only, never on
    which vehicle type happens to carry the parcel."""
    fares = inst.fares
    run_pos = {run.id: r for r, run in enumerate(inst.runs)}
    total = 0.0
    for rec in inst.demand:
        if not rec.is_freight:
            continue
        line = inst.line_of_run(inst.runs[run_pos[rec.run_id]])
        length = line.distance_between(rec.origin, rec.dest)
        total += rec.parcels * _piecewise_fare(
            length, fares.freight_base, fares.freight_base_km, fares.freight_per_km, mode)
    return total


_SNAP = 1e-9  # float-noise guard when comparing loads against capacities


def constraint_residuals(inst: Instance, sol: Solution, timeline,
                         avg_time_minutes: float,
                         include_freight: bool = True) -> ConstraintResiduals:
    """Violation magnitudes of the capacity, share-bound and time-cap rules.

    Passenger and freight loads are the raw demand prefixes per run (what the
    bus would carry if nobody were refused); one-type-per-bus and
    one-bus-per-run hold by construction of the encoding and are asserted
    upstream rather than penalized.
    """
    arrs = inst.arrays(include_freight)
    seats = seats_per_run(inst, sol)
    fvol = freight_volume_per_run(inst, sol)

    pax_over = np.maximum(0.0, arrs.peak_pax_raw - seats)
    pax_over[pax_over < _SNAP] = 0.0
    if include_freight:
        freight_over = np.maximum(0.0, arrs.peak_parcel_vol - fvol)
        freight_over[freight_over < _SNAP] = 0.0
        agg_freight = max(0.0, arrs.total_parcel_vol - float(np.sum(fvol)))
    else:
        freight_over = np.zeros(inst.n_runs)
        agg_freight = 0.0

    lam_bound = np.array([max(0.0, inst.lambda_min - l / 100.0) for l in sol.lam])
    lam_bound[lam_bound < _SNAP] = 0.0
    agg_pax = max(0.0, arrs.total_pax - float(np.sum(seats)))
    time_excess = max(0.0, avg_time_minutes - inst.t_max_minutes)
    if agg_freight < _SNAP:
        agg_freight = 0.0
    if time_excess < _SNAP:
        time_excess = 0.0

    return ConstraintResiduals(
        pax_overload=pax_over,
        freight_overload=freight_over,
        lam_bound=lam_bound,
        agg_pax_shortfall=agg_pax,
        agg_freight_shortfall=agg_freight,
        avg_time_excess=time_excess,
    )


def profit(inst: Instance, sol: Solution, timeline,
           mode: FareMode = FareMode.DESCRIBED,
           include_freight: bool = True) -> CostBreakdown:
    """Assemble the full money breakdown for one evaluated scheme."""
    c_km, c_fix = fixed_and_running_cost(inst, sol, include_freight=include_freight)
    return CostBreakdown(
        toll=toll_cost(inst, sol),
        dwell=dwell_cost(inst, timeline),
        running=c_km,
        purchasing=c_fix,
        passenger_revenue=passenger_revenue(inst, sol, mode),
        freight_revenue=freight_revenue(inst, mode) if include_freight else 0.0,
    )
