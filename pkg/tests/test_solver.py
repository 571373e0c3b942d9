import itertools

import numpy as np
import pytest

from pfsm.evaluation import evaluate
from pfsm.model import load_instance
from pfsm.scalarize import fitness
from pfsm.solution import Solution
from pfsm.solver import (ALGORITHMS, SolverConfig, decode, encode, init_population_tent,
                         levy_step, ocean_current_move, optimize, search_bounds,
                         swarm_move_active, swarm_move_passive, time_control, wrap_bounds)

from conftest import micro_variant


class SeqRng:
    """Deterministic stand-in for a Generator: hands out preset scalars."""

    def __init__(self, values):
        self.values = list(values)

    def _next(self):
        return self.values.pop(0) if self.values else 0.5

    def random(self, size=None):
        if size is None:
            return self._next()
        return np.array([self._next() for _ in range(size)])

    def normal(self, loc, scale, size=None):
        if size is None:
            return self._next() * scale + loc
        return np.array([self._next() for _ in range(size)]) * scale + loc


class TestDecode:
    def test_worked_example_vector(self, yushe):
        # the worked encoding example: 12 runs on 6 buses, types 0/1/2,
        # shares in percent
        pos = np.array([1, 2, 3, 2, 1, 3, 4, 5, 6, 4, 5, 6,
                        0, 1, 2, 2, 0, 1,
                        70, 55, 60, 80, 100, 90], dtype=float)
        sol = decode(pos, yushe)
        assert sol.x == (1, 2, 3, 2, 1, 3, 4, 5, 6, 4, 5, 6)
        assert sol.y == (0, 1, 2, 2, 0, 1)
        assert sol.lam == (70, 55, 60, 80, 100, 90)

    def test_encode_decode_round_trip(self, yushe, reference_scheme):
        assert decode(encode(reference_scheme), yushe) == reference_scheme

    def test_integer_grid_identity(self, yushe):
        rng = np.random.default_rng(3)
        for _ in range(50):
            from conftest import random_solution
            sol = random_solution(yushe, rng)
            sol = decode(encode(sol), yushe)  # repair once
            assert decode(encode(sol), yushe) == sol

    def test_rounding_and_clipping(self, yushe):
        lb, ub = search_bounds(yushe)
        pos = ub + 10.0
        sol = decode(pos, yushe)
        assert all(1 <= b <= 6 for b in sol.x)
        assert all(0 <= t <= 2 for t in sol.y)
        assert all(40 <= l <= 100 for l in sol.lam)

    def test_repair_moves_overlapping_duty(self, yushe):
        # runs 1 and 7 overlap (06:00-07:10 vs 06:10-07:15); forcing them
        # onto bus 1 must reassign the later one deterministically
        pos = encode(Solution.from_parts([1, 2, 3, 2, 1, 3, 1, 5, 6, 4, 5, 6],
                                         [0, 0, 1, 2, 1, 2],
                                         [100, 100, 80, 50, 90, 70]))
        sol = decode(pos, yushe)
        assert sol.x[0] == 1
        assert sol.x[6] == 2  # lowest-numbered bus free at 06:10
        # structural guarantees: one bus per run, one type per bus
        assert len(sol.x) == yushe.n_runs
        assert len(sol.y) == yushe.fleet_size

    def test_repair_is_deterministic(self, yushe):
        rng = np.random.default_rng(11)
        lb, ub = search_bounds(yushe)
        for _ in range(100):
            pos = rng.uniform(lb, ub)
            assert decode(pos, yushe) == decode(pos.copy(), yushe)

    def test_no_duty_overlap_after_repair(self, yushe):
        rng = np.random.default_rng(13)
        lb, ub = search_bounds(yushe)
        for _ in range(100):
            sol = decode(rng.uniform(lb, ub), yushe)
            by_bus = {}
            for r, bus in enumerate(sol.x):
                by_bus.setdefault(bus, []).append(yushe.runs[r])
            for runs in by_bus.values():
                runs.sort(key=lambda r: r.departure_min)
                for a, b in zip(runs, runs[1:]):
                    assert b.departure_min >= a.arrival_min


class TestTentInit:
    def test_reference_sequence(self):
        # full-height tent from 0.3: 0.6, 0.8, 0.4, 0.8, ...
        rng = np.random.default_rng(0)
        lb, ub = np.array([0.0]), np.array([1.0])
        pop = init_population_tent(5, 1, lb, ub, rng)
        x0 = pop[0, 0]
        seq = [x0]
        for _ in range(4):
            x0 = 2 * x0 if x0 < 0.5 else 2 * (1 - x0)
            seq.append(x0)
        # the generator folds in a <=1e-9 jitter per step
        assert pop[:, 0] == pytest.approx(seq[:5], abs=1e-6)

    def test_explicit_start_point(self):
        x = 0.3
        seq = []
        for _ in range(4):
            x = 2 * x if x < 0.5 else 2 * (1 - x)
            seq.append(round(x, 9))
        assert seq == [0.6, 0.8, 0.4, 0.8]

    def test_range_and_mapping(self):
        rng = np.random.default_rng(5)
        lb = np.array([-3.0, 10.0])
        ub = np.array([5.0, 20.0])
        pop = init_population_tent(200, 2, lb, ub, rng)
        assert np.all(pop >= lb) and np.all(pop <= ub)

    def test_chi_square_uniformity(self):
        # 1e5 samples over 10 bins; critical value of the chi-square law
        # with 9 degrees of freedom at the 0.01 significance level
        rng = np.random.default_rng(123)
        lb, ub = np.array([0.0]), np.array([1.0])
        pop = init_population_tent(100_000, 1, lb, ub, rng)[:, 0]
        counts, _ = np.histogram(pop, bins=10, range=(0.0, 1.0))
        expected = len(pop) / 10
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < 21.666

    def test_mu_bounds(self):
        with pytest.raises(ValueError):
            SolverConfig(mu_tent=2.5)


class TestTimeControl:
    def test_vanishes_at_horizon(self):
        rng = np.random.default_rng(1)
        assert time_control(100, 100, rng) == 0.0

    def test_full_at_start(self):
        assert time_control(0, 100, SeqRng([1.0])) == pytest.approx(1.0)

    def test_range(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            t = int(rng.integers(0, 101))
            assert 0.0 <= time_control(t, 100, rng) <= 1.0


class TestMoves:
    def test_ocean_current_zero_step(self):
        x = np.array([2.0])
        out = ocean_current_move(x, x.copy(), x.copy(), beta_d=1.0, rng=SeqRng([0.0, 0.0]))
        assert out == pytest.approx(x)

    def test_ocean_current_example(self):
        # drift toward best past the scaled population mean
        out = ocean_current_move(np.array([0.0]), np.array([10.0]), np.array([2.0]),
                                 beta_d=3.0, rng=SeqRng([1.0, 1.0]))
        assert out[0] == pytest.approx(4.0)

    def test_passive_zero_coefficient(self):
        x = np.array([1.0, 2.0])
        out = swarm_move_passive(x, np.zeros(2), np.ones(2) * 10, 0.0, SeqRng([0.7, 0.7]))
        assert out == pytest.approx(x)

    def test_active_tie_moves_toward_other(self):
        out = swarm_move_active(np.array([2.0]), np.array([6.0]), f_x=1.0, f_other=1.0,
                                rng=SeqRng([0.5]))
        assert out[0] == pytest.approx(4.0)

    def test_active_example(self):
        out = swarm_move_active(np.array([2.0]), np.array([6.0]), f_x=1.0, f_other=5.0,
                                rng=SeqRng([0.5]))
        assert out[0] == pytest.approx(4.0)

    def test_active_away_from_worse(self):
        out = swarm_move_active(np.array([2.0]), np.array([6.0]), f_x=5.0, f_other=1.0,
                                rng=SeqRng([0.5]))
        assert out[0] == pytest.approx(0.0)


class TestLevy:
    def test_direct_ratio(self):
        from pfsm._stats import mantegna_sigma
        sigma = mantegna_sigma(1.5)
        # u drawn as 0.5 of the numerator scale, v exactly 1
        rng = SeqRng([0.5, 1.0])
        step = levy_step(1, 1.5, rng)
        assert step[0] == pytest.approx(0.5 * sigma)

    def test_zero_numerator(self):
        step = levy_step(1, 1.5, SeqRng([0.0, 0.3]))
        assert step[0] == 0.0

    def test_heavy_tail_kurtosis(self):
        rng = np.random.default_rng(77)
        steps = levy_step(100_000, 1.5, rng)
        z = steps - steps.mean()
        kurt = float(np.mean(z ** 4) / np.mean(z ** 2) ** 2)
        assert kurt > 10.0


class TestWrapBounds:
    LB = np.array([0.0])
    UB = np.array([10.0])

    def test_examples(self):
        assert wrap_bounds(np.array([12.0]), self.LB, self.UB)[0] == pytest.approx(2.0)
        assert wrap_bounds(np.array([-3.0]), self.LB, self.UB)[0] == pytest.approx(7.0)
        assert wrap_bounds(np.array([5.0]), self.LB, self.UB)[0] == 5.0

    def test_idempotent_inside(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.uniform(0.0, 10.0, size=4)
            lb, ub = np.zeros(4), np.full(4, 10.0)
            once = wrap_bounds(x, lb, ub)
            assert np.allclose(once, x)
            assert np.allclose(wrap_bounds(once, lb, ub), once)

    def test_one_span_overshoot_maps_inside(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            x = rng.uniform(-10.0, 20.0, size=3)
            lb, ub = np.zeros(3), np.full(3, 10.0)
            out = wrap_bounds(x, lb, ub)
            assert np.all(out >= lb) and np.all(out <= ub)


def _enumerate_micro(inst):
    sols = [Solution.from_parts(x, y, lam)
            for x in itertools.product([1, 2], repeat=2)
            for y in itertools.product([0, 1], repeat=2)
            for lam in itertools.product([50, 100], repeat=2)]
    return [(s, evaluate(inst, s)) for s in sols]


class TestOptimize:
    def test_deterministic_traces(self, micro):
        cfg = SolverConfig(algorithm="ijs", n_pop=12, max_iter=10, seed=42)
        a = optimize(micro, cfg)
        b = optimize(micro, SolverConfig(algorithm="ijs", n_pop=12, max_iter=10, seed=42))
        assert a.trace.best_f == b.trace.best_f
        assert a.trace.evals == b.trace.evals
        assert a.best_solution == b.best_solution

    def test_best_fitness_nondecreasing_all_algorithms(self, micro):
        for algo in ALGORITHMS:
            res = optimize(micro, SolverConfig(algorithm=algo, n_pop=10, max_iter=15, seed=3))
            bf = res.trace.best_f
            assert all(b >= a - 1e-12 for a, b in zip(bf, bf[1:]))

    def test_evaluation_budget_accounting(self, micro):
        n, it = 11, 9
        res = optimize(micro, SolverConfig(algorithm="ijs", n_pop=n, max_iter=it, seed=1))
        assert res.total_evaluations <= n * (1 + 2 * it)
        assert res.total_evaluations == res.trace.evals[-1]
        base = optimize(micro, SolverConfig(algorithm="js", n_pop=n, max_iter=it, seed=1))
        assert base.total_evaluations == n * (1 + it)

    def test_structural_constraints_after_decode(self, yushe):
        rng = np.random.default_rng(91)
        lb, ub = search_bounds(yushe)
        for _ in range(100):
            sol = decode(rng.uniform(lb, ub), yushe)
            assert len(sol.x) == yushe.n_runs                      # one bus per run
            assert all(1 <= b <= yushe.fleet_size for b in sol.x)
            assert len(sol.y) == yushe.fleet_size                  # one type per bus
            assert all(0 <= t < yushe.n_types for t in sol.y)

    def test_ijs_finds_enumerated_optimum(self, micro):
        pairs = _enumerate_micro(micro)
        for seed in (1, 2, 3):
            res = optimize(micro, SolverConfig(algorithm="ijs", n_pop=30, max_iter=50,
                                               seed=seed))
            best_s, best_e = max(
                pairs, key=lambda se: fitness(se[1].z, se[1].t, res.weights,
                                              res.norm_bounds, se[1].violation,
                                              res.penalty_coefficient).value)
            assert res.best_solution.canonical() == best_s.canonical()
            assert res.best_evaluation.z == pytest.approx(best_e.z, abs=1e-9)
            assert res.best_evaluation.t == pytest.approx(best_e.t, abs=1e-9)

    def test_infeasible_only_population_reports_least_penalty(self):
        # demand that cannot fit any vehicle keeps every scheme infeasible
        doc = micro_variant()
        doc["demand"][0]["passengers"] = 10_000
        inst = load_instance(doc)
        res = optimize(inst, SolverConfig(algorithm="ijs", n_pop=10, max_iter=10, seed=5))
        assert not res.feasible
        assert res.best_evaluation.violation > 0

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ValueError):
            SolverConfig(algorithm="sa")

    def test_de_selection_never_downgrades(self, micro):
        # with moves disabled by zero coefficients the only position change
        # besides the current drift is the DE step, which is elitist
        res = optimize(micro, SolverConfig(algorithm="ijs", n_pop=8, max_iter=12, seed=2))
        assert res.trace.best_f[-1] >= res.trace.best_f[0]
