import math

import numpy as np
import pytest

from pfsm import _kernels
from pfsm._stats import norm_ppf
from pfsm.economics import seats_per_run
from pfsm.model import load_instance
from pfsm.service_time import (SegmentTimeStats, cornish_fisher_quantile,
                               monte_carlo_reliability, reliability, segment_time,
                               simulate_timeline, stop_dwell, time_breakdown, time_budget,
                               waiting_count_literal)
from pfsm.solution import Solution

from conftest import micro_variant, random_solution

# frozen from standard normal quantile tables
PHI_085 = 1.0364334132


def _stats(mean=10.0, std=2.0, skew=0.0, kurt=0.0):
    return SegmentTimeStats(mean=mean, std=std, skewness=skew, kurtosis=kurt,
                            free_flow=mean, demand_volume=0.0, capacity=1.0)


class TestSegmentTime:
    def _with_override(self, q, c, free=10.0):
        doc = micro_variant()
        doc["bpr"] = {"beta": 0.15, "z": 4.0, "sigma_minutes": 2.0,
                      "segments": [{"run": 1, "from": 1, "to": 2,
                                    "free_flow_minutes": free, "demand_volume": q,
                                    "capacity": c}]}
        return load_instance(doc)

    def test_congested_segment(self):
        inst = self._with_override(q=5.0, c=5.0)
        st = segment_time(inst, 1, 1, 2)
        assert st.mean == pytest.approx(10.0 * 1.15)

    def test_free_flow_at_zero_demand(self):
        inst = self._with_override(q=0.0, c=5.0)
        st = segment_time(inst, 1, 1, 2)
        assert st.mean == pytest.approx(10.0)

    def test_noise_scale(self):
        inst = self._with_override(q=0.0, c=5.0)
        st = segment_time(inst, 1, 1, 2)
        assert st.std == pytest.approx(2.0)
        assert st.std ** 2 == pytest.approx(4.0)

    def test_variance_adds_over_path(self):
        inst = self._with_override(q=0.0, c=5.0)
        st = segment_time(inst, 1, 1, 3)
        assert st.std == pytest.approx(2.0 * math.sqrt(2.0))

    def test_monotone_congestion(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            c = rng.uniform(1.0, 10.0)
            q1, q2 = sorted(rng.uniform(0.0, 20.0, size=2))
            m1 = self._with_override(q=q1, c=c)
            m2 = self._with_override(q=q2, c=c)
            assert (segment_time(m1, 1, 1, 2).mean
                    <= segment_time(m2, 1, 1, 2).mean + 1e-12)

    def test_nonpositive_capacity_rejected(self):
        inst = self._with_override(q=1.0, c=-1.0)
        with pytest.raises(ValueError):
            segment_time(inst, 1, 1, 2)


class TestTimeBudget:
    def test_normal_quantile_at_085(self):
        assert norm_ppf(0.85) == pytest.approx(1.036, abs=1e-3)
        assert cornish_fisher_quantile(0.85, 0.0, 0.0) == pytest.approx(PHI_085, abs=1e-7)

    def test_budget_example(self):
        st = _stats(mean=11.5, std=2.0)
        assert time_budget(st, 0.85) == pytest.approx(11.5 + 2.0 * PHI_085, abs=1e-6)
        assert time_budget(st, 0.85) == pytest.approx(13.573, abs=1e-3)

    def test_corrected_quantile_term_by_term(self):
        # hand evaluation of the four-term expansion at skew .5, kurtosis 1
        z = norm_ppf(0.85)
        expect = (z + (0.5 / 6) * (z * z - 1) + (1.0 / 24) * (z ** 3 - 3 * z)
                  - (0.25 / 36) * (2 * z ** 3 - 5 * z))
        assert cornish_fisher_quantile(0.85, 0.5, 1.0) == pytest.approx(expect, abs=1e-12)
        assert cornish_fisher_quantile(0.85, 0.5, 1.0) == pytest.approx(0.97998, abs=1e-4)

    def test_gamma_range_enforced(self):
        with pytest.raises(ValueError):
            time_budget(_stats(), 0.5)
        with pytest.raises(ValueError):
            time_budget(_stats(), 1.0)


class TestReliability:
    def test_round_trip_equals_confidence(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            st = _stats(mean=rng.uniform(5, 50), std=rng.uniform(0.1, 5.0))
            gamma = rng.uniform(0.55, 0.99)
            assert reliability(st, time_budget(st, gamma)) == pytest.approx(gamma, abs=1e-6)

    def test_median_budget(self):
        st = _stats(mean=20.0, std=3.0)
        assert reliability(st, 20.0) == pytest.approx(0.5)

    def test_limit(self):
        assert reliability(_stats(), 1e9) == pytest.approx(1.0)

    def test_degenerate_std(self):
        st = _stats(mean=10.0, std=0.0)
        assert reliability(st, 10.0) == 1.0
        assert reliability(st, 9.999) == 0.0


class TestStopDwell:
    def test_freight_stop(self, micro):
        got = stop_dwell(micro, alightings=5, boardings=10, remaining_seats=8,
                         parcels_on=4, parcels_off=0, freight_enabled=True)
        assert got == pytest.approx(24.0)

    def test_regular_stop_ignores_parcels(self, micro):
        got = stop_dwell(micro, alightings=5, boardings=10, remaining_seats=8,
                         parcels_on=4, parcels_off=0, freight_enabled=False)
        assert got == pytest.approx(24.0)
        got2 = stop_dwell(micro, alightings=5, boardings=2, remaining_seats=8,
                          parcels_on=4, parcels_off=0, freight_enabled=False)
        assert got2 == pytest.approx(15.0)

    def test_idle_stop(self, micro):
        assert stop_dwell(micro, 0, 0, 10, 0, 0, True) == 0.0

    def test_negative_rejected(self, micro):
        with pytest.raises(ValueError):
            stop_dwell(micro, -1, 0, 0, 0, 0, True)


class TestTimelineOracle:
    """Every expected value below is derived by hand.

    Two runs on a 10 km three-stop line, pace 2 min/km (segments 12 and
    8 minutes).  Run 1 (bus at 50% share, 10 seats) carries 6 riders to
    stop 2, 15 want stop 3, 12 parcels ride 2->3.  Run 2 (20 seats) picks
    up the 11 left behind plus 8 fresh riders.  Dwell work: 4 s per
    passenger move, 10 s per parcel move.
    """

    def test_full_timeline(self, spreadsheet_case):
        inst, sol = spreadsheet_case
        tl = simulate_timeline(inst, sol)

        # run 1: boarding fills 10 seats (6 to stop 2 board first, 4 of 15
        # to stop 3), 11 detained; dwell 40 s = 4 s x 10 boardings
        assert tl.boardings[0].tolist() == [10, 0, 0]
        assert tl.alightings[0].tolist() == [0, 6, 4]
        assert tl.waiting[0].tolist() == [21, 0, 0]
        assert tl.detained[0].tolist() == [11, 0, 0]
        assert tl.onboard_pax[0].tolist() == [10, 4, 0]
        assert tl.dwell_s[0].tolist() == [40.0, 120.0, 120.0]
        assert tl.onboard_parcels[0].tolist() == [0, 12, 0]
        # clock: departs 08:00 sharp, +12 min drive, 2 min parcel work,
        # +8 min drive
        assert tl.departure_min[0].tolist() == pytest.approx([480.0, 494.0, 504.0])
        assert tl.arrival_min[0].tolist() == pytest.approx([480.0 - 40 / 60, 492.0, 502.0])
        assert tl.remaining_seats[0].tolist() == pytest.approx([10.0, 6.0, 10.0])

        # run 2: 11 carryover + 8 fresh board into 20 seats
        assert tl.boardings[1].tolist() == [19, 0, 0]
        assert tl.waiting[1].tolist() == [19, 0, 0]
        assert tl.detained[1].tolist() == [0, 0, 0]
        assert tl.dwell_s[1].tolist() == pytest.approx([76.0, 0.0, 76.0])
        assert tl.departure_min[1].tolist() == pytest.approx([540.0, 552.0, 560.0 + 76 / 60])
        assert tl.arrival_min[1].tolist() == pytest.approx([540.0 - 76 / 60, 552.0, 560.0])

        # aggregates: 4 riders sit through 2 min of parcel work; 8 fresh
        # arrivals wait half the 10-minute window; the 11 detainees wait
        # from run 1's 08:00 departure to run 2's arrival at stop 1
        assert tl.t_dwell_paxmin == pytest.approx(8.0, abs=1e-9)
        assert tl.t_wait_paxmin == pytest.approx(40.0, abs=1e-9)
        assert tl.t_det_paxmin == pytest.approx(11 * (60.0 - 76 / 60), abs=1e-9)
        assert tl.total_dwell_seconds() == pytest.approx(432.0)

    def test_breakdown_and_identity(self, spreadsheet_case):
        inst, sol = spreadsheet_case
        tl = simulate_timeline(inst, sol)
        tb = time_breakdown(inst, sol, tl)
        # in-vehicle: 23 riders x 20 min end-to-end + 6 riders x 12 min
        assert tb.cruise == pytest.approx(532.0)
        assert tb.total == pytest.approx(tb.cruise + tb.dwell + tb.wait + tb.detention)
        assert tb.total == pytest.approx(532.0 + 8.0 + 40.0 + 11 * (60.0 - 76 / 60))
        assert tb.total_passengers == 29
        assert tb.avg == pytest.approx(tb.total / 29.0)

    def test_detention_example(self):
        # 15 waiting, 10 seats: 10 board, 5 detained, the 5 join the next run
        doc = micro_variant()
        doc["demand"] = [{"run": 1, "from": 1, "to": 3, "passengers": 15},
                         {"run": 2, "from": 1, "to": 3, "passengers": 0}]
        doc["demand"] = [doc["demand"][0]]
        inst = load_instance(doc)
        sol = Solution.from_parts([1, 2], [0, 0], [50, 100])  # 10 then 20 seats
        tl = simulate_timeline(inst, sol)
        assert tl.boardings[0][0] == 10
        assert tl.detained[0][0] == 5
        assert tl.waiting[1][0] == 5
        assert tl.boardings[1][0] == 5
        assert tl.detained[1][0] == 0


class TestWaiting:
    def test_uniform_window_closed_form(self):
        # 20 arrivals spread over a capped 10-minute window wait 100
        # passenger-minutes: rate * window^2 / 2 = 2 * 100 / 2
        doc = micro_variant()
        doc["demand"] = [{"run": 2, "from": 1, "to": 3, "passengers": 20}]
        inst = load_instance(doc)
        sol = Solution.from_parts([1, 2], [1, 1], [100, 100])
        tl = simulate_timeline(inst, sol)
        assert tl.t_wait_paxmin == pytest.approx(100.0)

    def test_zero_demand_all_zero(self):
        inst = load_instance(micro_variant(demand=[]))
        sol = Solution.from_parts([1, 2], [0, 0], [100, 100])
        tl = simulate_timeline(inst, sol)
        tb = time_breakdown(inst, sol, tl)
        assert tb.total == 0.0
        assert tb.avg == 0.0

    def test_literal_accumulation_count(self, spreadsheet_case):
        inst, _ = spreadsheet_case
        assert waiting_count_literal(inst) == pytest.approx(29.0)


class TestTimelineProperties:
    def test_causality_and_conservation(self, yushe):
        rng = np.random.default_rng(31)
        for _ in range(100):
            sol = random_solution(yushe, rng)
            tl = simulate_timeline(yushe, sol)
            seats = seats_per_run(yushe, sol)
            for r in range(yushe.n_runs):
                n = int(tl.path_len[r])
                arr = tl.arrival_min[r, :n]
                dep = tl.departure_min[r, :n]
                assert np.all(arr[1:] > dep[:-1] - 1e-12)
                onboard = np.cumsum(tl.boardings[r, :n] - tl.alightings[r, :n])
                assert np.all(onboard >= -1e-9)
                assert np.allclose(onboard, tl.onboard_pax[r, :n])
                assert np.all(tl.boardings[r, :n] <= tl.remaining_seats[r, :n] + 1e-9)
                assert np.all(onboard <= seats[r] + 1e-9)
                det = np.maximum(0.0, tl.waiting[r, :n] - tl.remaining_seats[r, :n])
                assert np.allclose(det, tl.detained[r, :n])

    def test_removing_freight_never_raises_dwell(self, spreadsheet_case):
        # this case keeps the same stop path in both modes (no DC-only
        # stops), so the dwell comparison is like-for-like per stop
        inst, sol = spreadsheet_case
        with_f = simulate_timeline(inst, sol, include_freight=True)
        without = simulate_timeline(inst, sol, include_freight=False)
        assert with_f.path_stop_ids.shape == without.path_stop_ids.shape
        assert np.all(without.dwell_s <= with_f.dwell_s + 1e-9)

    def test_dropping_freight_term_never_raises_stop_dwell(self, micro):
        rng = np.random.default_rng(53)
        for _ in range(100):
            a, b, seats = rng.integers(0, 40, size=3)
            on, off = rng.integers(0, 200, size=2)
            with_f = stop_dwell(micro, a, b, seats, on, off, freight_enabled=True)
            without = stop_dwell(micro, a, b, seats, 0, 0, freight_enabled=True)
            assert without <= with_f + 1e-12

    def test_decomposition_identity(self, yushe):
        rng = np.random.default_rng(41)
        for _ in range(100):
            sol = random_solution(yushe, rng)
            tl = simulate_timeline(yushe, sol)
            tb = time_breakdown(yushe, sol, tl)
            assert tb.total == pytest.approx(
                tb.cruise + tb.dwell + tb.wait + tb.detention, abs=1e-12)


class TestKernelParity:
    def test_python_fallback_matches(self, yushe, reference_scheme):
        arrs = yushe.arrays(True)
        seats = seats_per_run(yushe, reference_scheme)
        args = (arrs.chain_ptr, arrs.chain_runs, arrs.path_len, arrs.anchor_pos,
                arrs.anchor_time, arrs.seg_time, arrs.freight_on, arrs.freight_off,
                arrs.freight_allowed, arrs.rec_start, arrs.rec_end, arrs.rec_dest,
                arrs.rec_count, seats, yushe.dwell.per_passenger_s,
                yushe.dwell.per_parcel_s, arrs.window_cap)
        fast = _kernels.chain_sweep(*args)
        slow = _kernels._chain_sweep_py(*args)
        for a, b in zip(fast, slow):
            assert np.allclose(np.asarray(a), np.asarray(b), atol=0.0, rtol=0.0)


class TestMonteCarlo:
    def test_empirical_reliability_near_gamma(self, yushe, reference_scheme):
        out = monte_carlo_reliability(yushe, reference_scheme, n_samples=400, seed=3)
        assert out["gamma"] == 0.85
        assert out["empirical_reliability"] == pytest.approx(0.85, abs=0.02)

    def test_seeded_repeatability(self, yushe, reference_scheme):
        a = monte_carlo_reliability(yushe, reference_scheme, n_samples=50, seed=9)
        b = monte_carlo_reliability(yushe, reference_scheme, n_samples=50, seed=9)
        assert a == b
