"""Carbon accounting and the separate-operation truck fleet model."""

from __future__ import annotations

import math

import numpy as np

from .model import Instance, run_distance


def carbon_report(diesel_km: float = 0.0, l_per_km: float = 0.0, kg_per_l: float = 0.0,
                  electric_kwh: float = 0.0, kg_per_kwh: float = 0.0) -> float:
    """kg CO2 of a diesel mileage and/or an electricity draw.

    Pure multiplication, no hidden rounding: km * L/km * kg/L plus
    kWh * kg/kWh.
    """
    if min(diesel_km, l_per_km, kg_per_l, electric_kwh, kg_per_kwh) < 0:
        raise ValueError("carbon inputs must be nonnegative")
    return diesel_km * l_per_km * kg_per_l + electric_kwh * kg_per_kwh


def bus_energy_kwh(inst: Instance, include_freight: bool = True) -> float:
    """Daily traction energy: per-run override when present, else distance
    times the type-level consumption (worst type as the conservative default
    when the serving type is unknown)."""
    rate = max(vt.energy_kwh_per_km for vt in inst.vehicle_types)
    total = 0.0
    for run in inst.runs:
        if run.energy_kwh is not None:
            total += run.energy_kwh
        else:
            total += run_distance(inst, run, include_dc_detour=include_freight) * rate
    return total


def separated_truck_plan(inst: Instance) -> dict:
    """Dedicated parcel fleet when buses carry passengers only.

    Convention: per line and half-day window, enough trucks cover the peak
    onboard parcel volume, each truck driving one round trip of the full
    line (DC to DC and back).  Trucks are not reused across windows.
    """
    if inst.trucks is None:
        raise ValueError("instance has no truck parameters")
    trucks = inst.trucks

    arrs = inst.arrays(True)
    window_vol: dict[tuple[int, int], float] = {}   # (line, direction) -> m3 loaded
    for run_idx, run in enumerate(inst.runs):
        key = (run.line_id, run.direction)
        window_vol[key] = window_vol.get(key, 0.0) + float(
            np.sum(arrs.freight_on[run_idx]) * inst.parcel_volume_m3)

    fleet = 0
    distance = 0.0
    for (line_id, _), vol in window_vol.items():
        if vol <= 0:
            continue
        line = inst.lines[line_id]
        n = math.ceil(vol / trucks.capacity_m3)
        fleet += n
        full_km = line.passenger_km + line.dc_head_km + line.dc_tail_km
        distance += n * 2.0 * full_km

    c_km = distance * trucks.fuel_cost_per_km
    c_fix = fleet * trucks.purchase_cost_per_day
    co2 = None
    if inst.carbon is not None:
        co2 = carbon_report(diesel_km=distance, l_per_km=trucks.diesel_l_per_km,
                            kg_per_l=inst.carbon.diesel_kg_per_l)
    return {
        "fleet_size": fleet,
        "running_km": distance,
        "fuel_cost": c_km,
        "purchase_cost": c_fix,
        "driver_wage_total": fleet * trucks.driver_wage_per_day,
        "total_cost": c_km + c_fix,
        "co2_kg": co2,
    }
