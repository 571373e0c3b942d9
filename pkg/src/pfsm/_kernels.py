"""Hot numeric kernel: the per-solution run-timeline sweep.

The sweep below is called once per candidate solution inside the
metaheuristics (tens of thousands of times per optimization run), so it is
compiled with numba when available.  Setting the environment variable
``PFSM_NO_NUMBA=1`` before import selects the pure-Python fallback, which
computes identical results; ``benchmarks/bench_kernels.py`` compares both.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("PFSM_NO_NUMBA", "0") != "1"


def _chain_sweep_py(
    chain_ptr,        # (n_chains+1,) int64: slices into chain_runs
    chain_runs,       # (n_runs,) int64: run indices grouped by chain, departure order
    path_len,         # (n_runs,) int64
    anchor_pos,       # (n_runs,) int64: index of the timetable-anchored stop
    anchor_time,      # (n_runs,) float64: scheduled departure at the anchor stop
    seg_time,         # (n_runs, max_path) float64: mean travel minutes pos -> pos+1
    freight_on,       # (n_runs, max_path) float64: parcels loaded
    freight_off,      # (n_runs, max_path) float64: parcels unloaded
    freight_allowed,  # (n_runs, max_path) uint8
    rec_start,        # (n_runs, max_path) int64: CSR into the record arrays
    rec_end,          # (n_runs, max_path) int64
    rec_dest,         # (n_rec,) int64: alighting position
    rec_count,        # (n_rec,) float64: passengers
    seats,            # (n_runs,) float64: passenger seats offered (solution input)
    dwell_pax_s,      # float64
    dwell_parcel_s,   # float64
    window_cap,       # float64: max accumulation window, minutes
):
    n_runs = path_len.shape[0]
    max_path = seg_time.shape[1]

    arr_t = np.zeros((n_runs, max_path), dtype=np.float64)
    dep_t = np.zeros((n_runs, max_path), dtype=np.float64)
    dwell_s = np.zeros((n_runs, max_path), dtype=np.float64)
    board = np.zeros((n_runs, max_path), dtype=np.float64)
    alight = np.zeros((n_runs, max_path), dtype=np.float64)
    wait = np.zeros((n_runs, max_path), dtype=np.float64)
    detained = np.zeros((n_runs, max_path), dtype=np.float64)
    onboard_pax = np.zeros((n_runs, max_path), dtype=np.float64)
    onboard_parcels = np.zeros((n_runs, max_path), dtype=np.float64)
    remaining_seats = np.zeros((n_runs, max_path), dtype=np.float64)

    t_dwell = 0.0   # passenger-minutes spent dwelling at intermediate stops
    t_wait = 0.0    # passenger-minutes of pre-boarding waiting
    t_det = 0.0     # passenger-minutes of detention (left behind, next bus)

    n_chains = chain_ptr.shape[0] - 1
    for c in range(n_chains):
        lo = chain_ptr[c]
        hi = chain_ptr[c + 1]
        if hi <= lo:
            continue
        first_run = chain_runs[lo]
        plen = path_len[first_run]
        service_start = anchor_time[first_run]

        carry = np.zeros((max_path, max_path), dtype=np.float64)  # detainees per (from, to)
        prev_dep = np.zeros(max_path, dtype=np.float64)
        prev_det = np.zeros(max_path, dtype=np.float64)
        have_prev = False

        for kk in range(lo, hi):
            r = chain_runs[kk]
            onboard_dest = np.zeros(max_path, dtype=np.float64)
            new_pax = np.zeros(max_path, dtype=np.float64)
            pax_run = 0.0
            parcels_run = 0.0

            # pass 1: loads and dwell per position (time-independent)
            for p in range(plen):
                a_cnt = onboard_dest[p]
                onboard_dest[p] = 0.0
                pax_run -= a_cnt
                through = pax_run

                f_off = freight_off[r, p]
                f_on = freight_on[r, p]
                parcels_run += f_on - f_off

                rem = seats[r] - pax_run
                if rem < 0.0:
                    rem = 0.0
                remaining_seats[r, p] = rem

                total_wait = 0.0
                boarded = 0.0
                det_here = 0.0
                s0 = rec_start[r, p]
                s1 = rec_end[r, p]
                for s in range(s0, s1):
                    new_pax[p] += rec_count[s]
                # merge fresh demand into the carryover pool, then board in
                # destination order while seats remain
                for s in range(s0, s1):
                    carry[p, rec_dest[s]] += rec_count[s]
                for j in range(p + 1, plen):
                    avail = carry[p, j]
                    if avail <= 0.0:
                        continue
                    total_wait += avail
                    take = avail if avail <= rem else rem
                    if take > 0.0:
                        onboard_dest[j] += take
                        boarded += take
                        rem -= take
                    carry[p, j] = avail - take
                    det_here += avail - take
                pax_run += boarded

                d_pax_off = dwell_pax_s * a_cnt
                d_pax_on = dwell_pax_s * boarded
                d_frt = dwell_parcel_s * (f_on + f_off) if freight_allowed[r, p] else 0.0
                dw = d_pax_off
                if d_pax_on > dw:
                    dw = d_pax_on
                if d_frt > dw:
                    dw = d_frt

                dwell_s[r, p] = dw
                board[r, p] = boarded
                alight[r, p] = a_cnt
                wait[r, p] = total_wait
                detained[r, p] = det_here
                onboard_pax[r, p] = pax_run
                onboard_parcels[r, p] = parcels_run
                t_dwell += through * dw / 60.0

            # pass 2: clock times anchored at the scheduled departure
            ap = anchor_pos[r]
            dep_t[r, ap] = anchor_time[r]
            arr_t[r, ap] = anchor_time[r] - dwell_s[r, ap] / 60.0
            for p in range(ap - 1, -1, -1):
                dep_t[r, p] = arr_t[r, p + 1] - seg_time[r, p]
                arr_t[r, p] = dep_t[r, p] - dwell_s[r, p] / 60.0
            for p in range(ap + 1, plen):
                arr_t[r, p] = dep_t[r, p - 1] + seg_time[r, p - 1]
                dep_t[r, p] = arr_t[r, p] + dwell_s[r, p] / 60.0

            # waiting of fresh arrivals (uniform over the accumulation window)
            for p in range(plen):
                if new_pax[p] <= 0.0:
                    continue
                open_t = prev_dep[p] if have_prev else service_start
                w = arr_t[r, p] - open_t
                if w < 0.0:
                    w = 0.0
                if w > window_cap:
                    w = window_cap
                t_wait += new_pax[p] * w * 0.5

            # detention of the previous run's leftovers, now resolved
            if have_prev:
                for p in range(plen):
                    if prev_det[p] > 0.0:
                        gap = arr_t[r, p] - prev_dep[p]
                        if gap > 0.0:
                            t_det += prev_det[p] * gap

            for p in range(plen):
                prev_dep[p] = dep_t[r, p]
                prev_det[p] = detained[r, p]
            have_prev = True

        # leftovers of the chain's last run wait until the service closes
        last_run = chain_runs[hi - 1]
        service_end = arr_t[last_run, plen - 1]
        for p in range(plen):
            if prev_det[p] > 0.0:
                gap = service_end - prev_dep[p]
                if gap > 0.0:
                    t_det += prev_det[p] * gap

    return (arr_t, dep_t, dwell_s, board, alight, wait, detained,
            onboard_pax, onboard_parcels, remaining_seats,
            t_dwell, t_wait, t_det)


if USE_NUMBA:
    chain_sweep = numba.njit(cache=True, fastmath=False)(_chain_sweep_py)
else:
    chain_sweep = _chain_sweep_py
