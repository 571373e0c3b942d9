"""Lower-level service model: travel times, run timelines, time objective.

The forward sweep per run chain (same line, same direction, departure order)
follows the operational story: passengers accumulate at stops between
consecutive buses, board up to the remaining seats, and anyone left over is
detained for the next bus of the chain.  Parcels load and unload only at
freight-enabled stops and never displace a seated passenger; the capacity
split decides how much of either fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._stats import norm_cdf, norm_ppf
from .economics import seats_per_run
from .model import Instance, Run, run_distance
from .solution import Solution


@dataclass(frozen=True)
class SegmentTimeStats:
    mean: float          # expected in-vehicle minutes
    std: float
    skewness: float
    kurtosis: float
    free_flow: float
    demand_volume: float
    capacity: float


@dataclass(frozen=True)
class TimeBreakdown:
    cruise: float     # passenger-minutes in vehicle
    dwell: float      # passenger-minutes held at intermediate stops
    wait: float       # passenger-minutes before first boarding attempt
    detention: float  # passenger-minutes of left-behind passengers
    total_passengers: float

    @property
    def total(self) -> float:
        return self.cruise + self.dwell + self.wait + self.detention

    @property
    def avg(self) -> float:
        return self.total / self.total_passengers if self.total_passengers > 0 else 0.0


@dataclass
class RunTimeline:
    """Per (run, path position) state of one simulated day."""

    path_stop_ids: np.ndarray    # (n_runs, max_path) int64, -1 pads
    path_len: np.ndarray         # (n_runs,)
    arrival_min: np.ndarray      # (n_runs, max_path)
    departure_min: np.ndarray
    dwell_s: np.ndarray
    boardings: np.ndarray
    alightings: np.ndarray
    waiting: np.ndarray
    detained: np.ndarray
    onboard_pax: np.ndarray
    onboard_parcels: np.ndarray
    remaining_seats: np.ndarray
    freight_on: np.ndarray
    freight_off: np.ndarray
    # aggregates accumulated during the sweep (passenger-minutes / seconds)
    t_dwell_paxmin: float = 0.0
    t_wait_paxmin: float = 0.0
    t_det_paxmin: float = 0.0

    def _pos(self, run_idx: int, stop_id: int) -> int:
        row = self.path_stop_ids[run_idx]
        for p in range(int(self.path_len[run_idx])):
            if row[p] == stop_id:
                return p
        raise KeyError(f"stop {stop_id} not on the path of run index {run_idx}")

    def arrival(self, run_idx: int, stop_id: int) -> float:
        return float(self.arrival_min[run_idx, self._pos(run_idx, stop_id)])

    def departure(self, run_idx: int, stop_id: int) -> float:
        return float(self.departure_min[run_idx, self._pos(run_idx, stop_id)])

    def dwell_seconds(self, run_idx: int, stop_id: int) -> float:
        return float(self.dwell_s[run_idx, self._pos(run_idx, stop_id)])

    def total_dwell_seconds(self) -> float:
        return float(np.sum(self.dwell_s))


@dataclass
class InstanceArrays:
    """Packed per-mode instance data feeding the sweep kernel."""

    include_freight: bool
    n_runs: int
    max_path: int
    path_stop_ids: np.ndarray
    path_len: np.ndarray
    anchor_pos: np.ndarray
    anchor_time: np.ndarray
    chain_ptr: np.ndarray
    chain_runs: np.ndarray
    seg_time: np.ndarray          # mean minutes, position p -> p+1
    seg_sigma: np.ndarray
    freight_on: np.ndarray
    freight_off: np.ndarray
    freight_allowed: np.ndarray
    rec_start: np.ndarray
    rec_end: np.ndarray
    rec_dest: np.ndarray
    rec_count: np.ndarray
    window_cap: float
    # precomputed, solution-independent aggregates
    t_cruise_paxmin: float
    total_pax: float
    total_parcel_vol: float
    peak_pax_raw: np.ndarray      # per run, max onboard of raw demand
    peak_parcel_vol: np.ndarray   # per run, max onboard parcel volume (m3)
    run_km: np.ndarray            # per run, mode-aware distance
    eu_base: float                # flat-fare part of passenger revenue
    eu_excess_km: np.ndarray      # per run: sum count * (l - included km)+
    eu_short_km: np.ndarray       # per run: sum count * l over l <= included km
    ef_base: float                # flat-fee part of freight revenue
    ef_excess_km: float           # sum parcels * (l - included km)+
    ef_short_km: float            # sum parcels * l over l <= included km
    new_pax_per_window: np.ndarray  # per (run, pos): fresh arrivals o^u


def _bpr_mean(free_flow: float, q: float, c: float, beta: float, z: float) -> float:
    if c <= 0:
        raise ValueError("segment capacity must be positive")
    return free_flow * (1.0 + beta * (q / c) ** z)


def segment_time(inst: Instance, run: Run | int, i: int, j: int) -> SegmentTimeStats:
    """Expected travel-time statistics between two stops of a run's line.

    The mean follows the volume-delay form free_flow * (1 + beta*(Q/C)^z)
    summed along the path; the additive noise terms of consecutive segments
    are independent, so variances add.
    """
    if isinstance(run, int):
        run = inst.run_by_id(run)
    line = inst.line_of_run(run)
    pi, pj = line.index_of(i), line.index_of(j)
    if pi == pj:
        raise ValueError("segment undefined for identical stops")
    lo, hi = min(pi, pj), max(pi, pj)
    pace = (run.arrival_min - run.departure_min) / line.passenger_km
    mean = 0.0
    var = 0.0
    free_total = 0.0
    q_seen, c_seen = 0.0, 1.0
    for p in range(lo, hi):
        a, b = line.stops[p], line.stops[p + 1]
        key = (run.id, a, b) if run.direction == 1 else (run.id, b, a)
        over = inst.bpr.segment_overrides.get(key, {})
        free = over.get("free_flow_minutes")
        if free is None:
            free = pace * line.segments_km[p]
        q = over.get("demand_volume")
        q = 0.0 if q is None else float(q)
        c = over.get("capacity")
        c = 1.0 if c is None else float(c)
        mean += _bpr_mean(float(free), q, c, inst.bpr.beta, inst.bpr.z)
        free_total += float(free)
        var += inst.bpr.sigma_minutes ** 2
        q_seen, c_seen = q, c
    return SegmentTimeStats(
        mean=mean, std=math.sqrt(var),
        skewness=inst.bpr.skewness, kurtosis=inst.bpr.kurtosis,
        free_flow=free_total, demand_volume=q_seen, capacity=c_seen,
    )


def cornish_fisher_quantile(gamma: float, skewness: float, kurtosis: float) -> float:
    """Normal quantile corrected for skewness and excess kurtosis."""
    z = norm_ppf(gamma)
    return (z
            + (skewness / 6.0) * (z * z - 1.0)
            + (kurtosis / 24.0) * (z ** 3 - 3.0 * z)
            - (skewness ** 2 / 36.0) * (2.0 * z ** 3 - 5.0 * z))


def time_budget(stats: SegmentTimeStats, gamma: float) -> float:
    """Travel-time budget met with probability gamma."""
    if not 0.5 < gamma < 1.0:
        raise ValueError(f"confidence level must be in (0.5, 1), got {gamma}")
    return stats.mean + stats.std * cornish_fisher_quantile(gamma, stats.skewness, stats.kurtosis)


def reliability(stats: SegmentTimeStats, budget: float) -> float:
    """P(travel time <= budget) under the normal noise model."""
    if stats.std <= 0.0:
        return 1.0 if budget >= stats.mean else 0.0
    return norm_cdf((budget - stats.mean) / stats.std)


def stop_dwell(inst: Instance, alightings: float, boardings: float,
               remaining_seats: float, parcels_on: float, parcels_off: float,
               freight_enabled: bool) -> float:
    """Dwell seconds at one stop: slowest of alighting, boarding, cargo work."""
    if min(alightings, boardings, remaining_seats, parcels_on, parcels_off) < 0:
        raise ValueError("counts must be nonnegative")
    d = inst.dwell
    terms = [d.per_passenger_s * alightings,
             d.per_passenger_s * min(boardings, remaining_seats)]
    if freight_enabled:
        terms.append(d.per_parcel_s * (parcels_on + parcels_off))
    return max(terms)


# ---------------------------------------------------------------------------
# packed-array construction


def _run_path(inst: Instance, run: Run, include_freight: bool) -> list[int]:
    line = inst.line_of_run(run)
    if include_freight and inst.line_has_freight(line.id):
        seq = list(line.stops)
    else:
        seq = list(line.stops[line.pax_start:line.pax_end + 1])
    return seq if run.direction == 1 else seq[::-1]


def _run_seg_times(inst: Instance, run: Run, path: list[int]) -> np.ndarray:
    line = inst.line_of_run(run)
    pace = (run.arrival_min - run.departure_min) / line.passenger_km
    cum = line.cumulative_km()
    out = np.zeros(len(path), dtype=np.float64)
    for p in range(len(path) - 1):
        a, b = path[p], path[p + 1]
        km = abs(cum[line.index_of(b)] - cum[line.index_of(a)])
        over = inst.bpr.segment_overrides.get((run.id, a, b), {})
        free = over.get("free_flow_minutes")
        free = pace * km if free is None else float(free)
        q = over.get("demand_volume")
        q = 0.0 if q is None else float(q)
        c = over.get("capacity")
        c = 1.0 if c is None else float(c)
        out[p] = _bpr_mean(free, q, c, inst.bpr.beta, inst.bpr.z)
    return out


def build_instance_arrays(inst: Instance, include_freight: bool = True) -> InstanceArrays:
    runs = inst.runs
    n_runs = len(runs)
    paths = [_run_path(inst, r, include_freight) for r in runs]
    max_path = max(len(p) for p in paths)

    path_stop_ids = np.full((n_runs, max_path), -1, dtype=np.int64)
    path_len = np.zeros(n_runs, dtype=np.int64)
    anchor_pos = np.zeros(n_runs, dtype=np.int64)
    anchor_time = np.zeros(n_runs, dtype=np.float64)
    seg_time = np.zeros((n_runs, max_path), dtype=np.float64)
    freight_on = np.zeros((n_runs, max_path), dtype=np.float64)
    freight_off = np.zeros((n_runs, max_path), dtype=np.float64)
    freight_allowed = np.zeros((n_runs, max_path), dtype=np.uint8)

    pos_of = []
    for r, run in enumerate(runs):
        path = paths[r]
        path_len[r] = len(path)
        path_stop_ids[r, :len(path)] = path
        seg_time[r, :len(path)] = _run_seg_times(inst, run, path)
        lookup = {sid: p for p, sid in enumerate(path)}
        pos_of.append(lookup)
        line = inst.line_of_run(run)
        first_pax_stop = line.stops[line.pax_start] if run.direction == 1 else line.stops[line.pax_end]
        anchor_pos[r] = lookup[first_pax_stop]
        anchor_time[r] = run.departure_min
        for p, sid in enumerate(path):
            freight_allowed[r, p] = 1 if inst.stops[sid].allows_freight else 0

    # chains: runs of the same line and direction, in departure order
    chain_key = {}
    for r, run in enumerate(runs):
        chain_key.setdefault((run.line_id, run.direction), []).append(r)
    chain_ids = sorted(chain_key)
    chain_runs_list: list[int] = []
    chain_ptr = [0]
    for key in chain_ids:
        members = sorted(chain_key[key], key=lambda r: (runs[r].departure_min, runs[r].id))
        chain_runs_list.extend(members)
        chain_ptr.append(len(chain_runs_list))

    run_pos = {run.id: r for r, run in enumerate(runs)}
    fares = inst.fares

    # passenger records in CSR layout keyed by (run, boarding position);
    # endpoints off the trimmed path clamp to the nearest served stop
    per_slot: dict[tuple[int, int], list[tuple[int, float]]] = {}
    t_cruise = 0.0
    total_pax = 0.0
    total_parcel_vol = 0.0
    eu_base = 0.0
    eu_excess = np.zeros(n_runs, dtype=np.float64)
    eu_short = np.zeros(n_runs, dtype=np.float64)
    ef_base = 0.0
    ef_excess = 0.0
    ef_short = 0.0
    board_raw = np.zeros((n_runs, max_path), dtype=np.float64)
    alight_raw = np.zeros((n_runs, max_path), dtype=np.float64)

    def clamp_pos(r: int, stop_id: int) -> int:
        lookup = pos_of[r]
        if stop_id in lookup:
            return lookup[stop_id]
        run = runs[r]
        line = inst.line_of_run(run)
        idx = line.index_of(stop_id)
        idx = min(max(idx, line.pax_start), line.pax_end)
        return lookup[line.stops[idx]]

    for rec in inst.demand:
        r = run_pos[rec.run_id]
        line = inst.line_of_run(runs[r])
        length = line.distance_between(rec.origin, rec.dest)
        if rec.is_freight:
            if not include_freight:
                continue
            bpos = pos_of[r][rec.origin]
            apos = pos_of[r][rec.dest]
            freight_on[r, bpos] += rec.parcels
            freight_off[r, apos] += rec.parcels
            total_parcel_vol += rec.parcels * inst.parcel_volume_m3
            ef_base += rec.parcels * fares.freight_base
            ef_excess += rec.parcels * max(0.0, length - fares.freight_base_km)
            if length <= fares.freight_base_km:
                ef_short += rec.parcels * length
            continue
        bpos = clamp_pos(r, rec.origin)
        apos = clamp_pos(r, rec.dest)
        total_pax += rec.passengers
        eu_base += rec.passengers * fares.passenger_base
        excess = max(0.0, length - fares.passenger_base_km)
        eu_excess[r] += rec.passengers * excess
        if length <= fares.passenger_base_km:
            eu_short[r] += rec.passengers * length
        if bpos >= apos:
            # ride collapsed by endpoint clamping (counts for revenue and
            # the passenger total, contributes no in-vehicle time)
            continue
        per_slot.setdefault((r, bpos), []).append((apos, float(rec.passengers)))
        t_cruise += rec.passengers * float(np.sum(seg_time[r, bpos:apos]))
        board_raw[r, bpos] += rec.passengers
        alight_raw[r, apos] += rec.passengers

    rec_start = np.zeros((n_runs, max_path), dtype=np.int64)
    rec_end = np.zeros((n_runs, max_path), dtype=np.int64)
    rec_dest_list: list[int] = []
    rec_count_list: list[float] = []
    new_pax = np.zeros((n_runs, max_path), dtype=np.float64)
    cursor = 0
    for r in range(n_runs):
        for p in range(int(path_len[r])):
            rec_start[r, p] = cursor
            for apos, cnt in sorted(per_slot.get((r, p), [])):
                rec_dest_list.append(apos)
                rec_count_list.append(cnt)
                new_pax[r, p] += cnt
                cursor += 1
            rec_end[r, p] = cursor

    peak_pax = np.zeros(n_runs, dtype=np.float64)
    peak_vol = np.zeros(n_runs, dtype=np.float64)
    for r in range(n_runs):
        onboard = np.cumsum(board_raw[r] - alight_raw[r])
        peak_pax[r] = float(np.max(onboard)) if onboard.size else 0.0
        vol = np.cumsum(freight_on[r] - freight_off[r]) * inst.parcel_volume_m3
        peak_vol[r] = float(np.max(vol)) if vol.size else 0.0

    run_km = np.array([run_distance(inst, run, include_dc_detour=include_freight)
                       for run in runs])

    window_cap = inst.arrival_window_minutes
    return InstanceArrays(
        include_freight=include_freight,
        n_runs=n_runs, max_path=max_path,
        path_stop_ids=path_stop_ids, path_len=path_len,
        anchor_pos=anchor_pos, anchor_time=anchor_time,
        chain_ptr=np.array(chain_ptr, dtype=np.int64),
        chain_runs=np.array(chain_runs_list, dtype=np.int64),
        seg_time=seg_time,
        seg_sigma=np.full((n_runs, max_path), inst.bpr.sigma_minutes),
        freight_on=freight_on, freight_off=freight_off,
        freight_allowed=freight_allowed,
        rec_start=rec_start, rec_end=rec_end,
        rec_dest=np.array(rec_dest_list, dtype=np.int64),
        rec_count=np.array(rec_count_list, dtype=np.float64),
        window_cap=float("inf") if window_cap is None else float(window_cap),
        t_cruise_paxmin=t_cruise,
        total_pax=total_pax,
        total_parcel_vol=total_parcel_vol,
        peak_pax_raw=peak_pax,
        peak_parcel_vol=peak_vol,
        run_km=run_km,
        eu_base=eu_base,
        eu_excess_km=eu_excess,
        eu_short_km=eu_short,
        ef_base=ef_base,
        ef_excess_km=ef_excess,
        ef_short_km=ef_short,
        new_pax_per_window=new_pax,
    )


# ---------------------------------------------------------------------------
# simulation


def sweep(arrs: InstanceArrays, seats: np.ndarray, inst: Instance,
          seg_time: np.ndarray | None = None) -> RunTimeline:
    """Run the chain sweep for one seats-per-run vector."""
    st = arrs.seg_time if seg_time is None else seg_time
    out = _kernels.chain_sweep(
        arrs.chain_ptr, arrs.chain_runs, arrs.path_len,
        arrs.anchor_pos, arrs.anchor_time, st,
        arrs.freight_on, arrs.freight_off, arrs.freight_allowed,
        arrs.rec_start, arrs.rec_end, arrs.rec_dest, arrs.rec_count,
        np.asarray(seats, dtype=np.float64),
        inst.dwell.per_passenger_s, inst.dwell.per_parcel_s,
        arrs.window_cap,
    )
    (arr_t, dep_t, dwell_s, board, alight, wait, det,
     onboard_pax, onboard_parcels, remaining, t_dwell, t_wait, t_det) = out
    return RunTimeline(
        path_stop_ids=arrs.path_stop_ids, path_len=arrs.path_len,
        arrival_min=arr_t, departure_min=dep_t, dwell_s=dwell_s,
        boardings=board, alightings=alight, waiting=wait, detained=det,
        onboard_pax=onboard_pax, onboard_parcels=onboard_parcels,
        remaining_seats=remaining,
        freight_on=arrs.freight_on, freight_off=arrs.freight_off,
        t_dwell_paxmin=float(t_dwell), t_wait_paxmin=float(t_wait),
        t_det_paxmin=float(t_det),
    )


def simulate_timeline(inst: Instance, sol: Solution, include_freight: bool = True,
                      seg_time: np.ndarray | None = None) -> RunTimeline:
    """Simulate the full day for one decoded scheme."""
    arrs = inst.arrays(include_freight)
    return sweep(arrs, seats_per_run(inst, sol), inst, seg_time=seg_time)


def time_breakdown(inst: Instance, sol: Solution, timeline: RunTimeline,
                   include_freight: bool = True) -> TimeBreakdown:
    """Assemble the passenger time objective from a simulated timeline."""
    arrs = inst.arrays(include_freight)
    return TimeBreakdown(
        cruise=arrs.t_cruise_paxmin,
        dwell=timeline.t_dwell_paxmin,
        wait=timeline.t_wait_paxmin,
        detention=timeline.t_det_paxmin,
        total_passengers=arrs.total_pax,
    )


def waiting_count_literal(inst: Instance, include_freight: bool = True) -> float:
    """Alternative reading of the waiting term: the accumulation integral
    yields passenger counts rather than passenger-minutes.  Reported for
    fidelity runs; never used in the optimized objective."""
    arrs = inst.arrays(include_freight)
    return float(np.sum(arrs.new_pax_per_window))


def monte_carlo_reliability(inst: Instance, sol: Solution, n_samples: int,
                            seed: int, include_freight: bool = True) -> dict:
    """Empirical check of the travel-time budgets under sampled noise.

    Per sample, every segment time gets an independent normal perturbation;
    the fraction of samples within the budget is compared against the
    configured confidence level.
    """
    arrs = inst.arrays(include_freight)
    gamma = inst.reliability_gamma
    quantile = cornish_fisher_quantile(gamma, inst.bpr.skewness, inst.bpr.kurtosis)
    budgets = arrs.seg_time + quantile * arrs.seg_sigma
    rng = np.random.default_rng(seed)
    within = 0
    checked = 0
    seg_mask = np.zeros_like(arrs.seg_time, dtype=bool)
    for r in range(arrs.n_runs):
        seg_mask[r, :max(0, int(arrs.path_len[r]) - 1)] = True
    for _ in range(n_samples):
        noise = rng.normal(0.0, 1.0, size=arrs.seg_time.shape) * arrs.seg_sigma
        sampled = arrs.seg_time + noise
        within += int(np.sum(sampled[seg_mask] <= budgets[seg_mask]))
        checked += int(np.sum(seg_mask))
    return {
        "gamma": gamma,
        "samples": n_samples,
        "segments": int(np.sum(seg_mask)),
        "empirical_reliability": within / checked if checked else 1.0,
    }
