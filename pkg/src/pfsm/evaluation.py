"""Full evaluation of one decoded scheme: money, time, violations.

``evaluate`` is the solver's inner loop, so it works off the packed
instance arrays; the reference implementations in ``pfsm.economics`` and
``pfsm.service_time`` compute the same numbers record by record and the
test suite pins both paths to exact agreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .economics import ConstraintResiduals, CostBreakdown, FareMode, _SNAP
from .model import Instance
from .service_time import RunTimeline, TimeBreakdown, sweep
from .solution import Solution


@dataclass(frozen=True)
class Evaluation:
    cost: CostBreakdown
    time: TimeBreakdown
    residuals: ConstraintResiduals
    include_freight: bool
    fare_mode: FareMode

    @property
    def z(self) -> float:
        return self.cost.profit

    @property
    def t(self) -> float:
        return self.time.total

    @property
    def avg_time(self) -> float:
        return self.time.avg

    @property
    def feasible(self) -> bool:
        return self.residuals.feasible

    @property
    def violation(self) -> float:
        return self.residuals.normalized_total()


def _type_vectors(inst: Instance):
    key = ("typevec",)
    cached = inst._array_cache.get(key)
    if cached is None:
        cached = (
            np.array([vt.capacity_m3 for vt in inst.vehicle_types]),
            np.array([vt.running_cost_per_km for vt in inst.vehicle_types]),
            np.array([vt.purchase_cost_per_day for vt in inst.vehicle_types]),
            np.array([vt.fare_per_km for vt in inst.vehicle_types]),
        )
        inst._array_cache[key] = cached
    return cached


def evaluate(inst: Instance, sol: Solution, include_freight: bool = True,
             fare_mode: FareMode = FareMode.DESCRIBED,
             timeline_out: list | None = None,
             seg_time: np.ndarray | None = None) -> Evaluation:
    """Evaluate a scheme; optionally hand the timeline back via timeline_out."""
    arrs = inst.arrays(include_freight)
    cap, phi_km, phi_buy, eta = _type_vectors(inst)

    bus_idx = np.array(sol.x, dtype=np.int64) - 1
    y = np.array(sol.y, dtype=np.int64)
    lam = np.array(sol.lam, dtype=np.float64) / 100.0
    type_run = y[bus_idx]
    lam_run = lam[bus_idx]

    seats = np.floor(lam_run * cap[type_run] / inst.seat_volume_m3)
    fvol = (1.0 - lam_run) * cap[type_run]

    timeline: RunTimeline = sweep(arrs, seats, inst, seg_time=seg_time)
    if timeline_out is not None:
        timeline_out.append(timeline)

    c_km = float(arrs.run_km @ phi_km[type_run])
    c_fix = float(phi_buy[y].sum())
    c_dwell = inst.dwell.cost_per_hour * float(timeline.dwell_s.sum()) / 3600.0
    c_toll = 0.0
    if inst.toll is not None:
        for r, run in enumerate(inst.runs):
            rate = inst.toll.rate_for_seats(int(seats[r]))
            c_toll += rate * inst.line_of_run(run).toll_km

    if fare_mode is FareMode.DESCRIBED:
        e_u = arrs.eu_base + float(eta[type_run] @ arrs.eu_excess_km)
        e_f = arrs.ef_base + inst.fares.freight_per_km * arrs.ef_excess_km
    else:
        e_u = arrs.eu_base + float(eta[type_run] @ (arrs.eu_excess_km + arrs.eu_short_km))
        e_f = arrs.ef_base + inst.fares.freight_per_km * (arrs.ef_excess_km + arrs.ef_short_km)
    if not include_freight:
        e_f = 0.0

    cost = CostBreakdown(toll=c_toll, dwell=c_dwell, running=c_km,
                         purchasing=c_fix, passenger_revenue=e_u, freight_revenue=e_f)

    time = TimeBreakdown(
        cruise=arrs.t_cruise_paxmin,
        dwell=timeline.t_dwell_paxmin,
        wait=timeline.t_wait_paxmin,
        detention=timeline.t_det_paxmin,
        total_passengers=arrs.total_pax,
    )

    pax_over = np.maximum(0.0, arrs.peak_pax_raw - seats)
    pax_over[pax_over < _SNAP] = 0.0
    freight_over = np.maximum(0.0, arrs.peak_parcel_vol - fvol)
    freight_over[freight_over < _SNAP] = 0.0
    if not include_freight:
        freight_over[:] = 0.0
    lam_bound = np.maximum(0.0, inst.lambda_min - lam)
    lam_bound[lam_bound < _SNAP] = 0.0
    agg_pax = max(0.0, float(arrs.total_pax) - float(seats.sum()))
    agg_freight = (max(0.0, float(arrs.total_parcel_vol) - float(fvol.sum()))
                   if include_freight else 0.0)
    if agg_freight < _SNAP:
        agg_freight = 0.0
    time_excess = max(0.0, float(time.avg) - inst.t_max_minutes)
    if time_excess < _SNAP:
        time_excess = 0.0

    residuals = ConstraintResiduals(
        pax_overload=pax_over, freight_overload=freight_over, lam_bound=lam_bound,
        agg_pax_shortfall=agg_pax, agg_freight_shortfall=agg_freight,
        avg_time_excess=time_excess,
    )
    return Evaluation(cost=cost, time=time, residuals=residuals,
                      include_freight=include_freight, fare_mode=fare_mode)
