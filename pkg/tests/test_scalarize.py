import itertools
import math

import numpy as np
import pytest

from pfsm.evaluation import evaluate
from pfsm.scalarize import NormBounds, auto_penalty_coefficient, ewm_weights, fitness
from pfsm.solution import Solution


class TestWeights:
    def test_symmetric_samples_split_evenly(self):
        # with Z = -T the inverted-time scores equal the profit scores
        # elementwise, so both indices carry identical information
        samples = [(10.0, -10.0), (20.0, -20.0), (40.0, -40.0)]
        w = ewm_weights(samples)
        assert w.w_profit == pytest.approx(0.5, abs=1e-12)
        assert w.w_time == pytest.approx(0.5, abs=1e-12)

    def test_constant_index_gets_no_weight(self):
        w = ewm_weights([(10.0, 5.0), (20.0, 5.0), (35.0, 5.0)])
        assert w.entropy_profit == pytest.approx(1.0)
        assert w.w_time == pytest.approx(1.0)
        assert w.w_profit == pytest.approx(0.0)

    def test_hand_computed_three_samples(self):
        # samples (T, Z): normalize T inverted -> [1, .5, 0], Z -> [0, .8, 1];
        # p_T = [2/3, 1/3, 0], p_Z = [0, 4/9, 5/9]; entropies over ln 3
        samples = [(10.0, 100.0), (20.0, 300.0), (30.0, 350.0)]
        ln3 = math.log(3.0)
        e_t = -(2 / 3 * math.log(2 / 3) + 1 / 3 * math.log(1 / 3)) / ln3
        e_z = -(4 / 9 * math.log(4 / 9) + 5 / 9 * math.log(5 / 9)) / ln3
        w_t = (1 - e_t) / ((1 - e_t) + (1 - e_z))
        w = ewm_weights(samples)
        assert w.entropy_time == pytest.approx(e_t, abs=1e-12)
        assert w.entropy_profit == pytest.approx(e_z, abs=1e-12)
        assert w.w_time == pytest.approx(w_t, abs=1e-12)
        assert w.w_profit == pytest.approx(1 - w_t, abs=1e-12)

    def test_weights_sum_to_one_entropies_in_range(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            n = int(rng.integers(2, 40))
            samples = list(zip(rng.uniform(0, 1000, n), rng.uniform(-500, 500, n)))
            if max(s[0] for s in samples) == min(s[0] for s in samples):
                continue
            w = ewm_weights(samples)
            assert w.w_profit + w.w_time == pytest.approx(1.0, abs=1e-12)
            assert 0.0 <= w.entropy_profit <= 1.0 + 1e-12
            assert 0.0 <= w.entropy_time <= 1.0 + 1e-12
            assert w.w_profit >= -1e-12 and w.w_time >= -1e-12

    def test_positive_scaling_invariance(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            n = int(rng.integers(3, 20))
            samples = [(float(t), float(z))
                       for t, z in zip(rng.uniform(1, 100, n), rng.uniform(1, 100, n))]
            c = float(rng.uniform(0.1, 50.0))
            scaled = [(t, z * c) for t, z in samples]
            w1, w2 = ewm_weights(samples), ewm_weights(scaled)
            assert w1.w_profit == pytest.approx(w2.w_profit, abs=1e-9)
            # min-max normalized values are unchanged by positive scaling
            b1, b2 = NormBounds.from_samples(samples), NormBounds.from_samples(scaled)
            for t, z in samples:
                assert b1.z_norm(z) == pytest.approx(b2.z_norm(z * c), abs=1e-9)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            ewm_weights([(1.0, 2.0)])

    def test_fully_degenerate_falls_back(self):
        with pytest.warns(UserWarning):
            w = ewm_weights([(5.0, 7.0), (5.0, 7.0)])
        assert w.w_profit == 0.5


class TestFitness:
    BOUNDS = NormBounds(z_min=0.0, z_max=100.0, t_min=50.0, t_max=150.0)

    def _weights(self):
        return ewm_weights([(50.0, 0.0), (100.0, 60.0), (150.0, 100.0)])

    def test_feasible_has_zero_penalty(self):
        f = fitness(50.0, 100.0, self._weights(), self.BOUNDS, violation=0.0,
                    penalty_coefficient=1000.0)
        assert f.penalty == 0.0
        assert f.feasible

    def test_monotone_in_profit(self):
        w = self._weights()
        f1 = fitness(10.0, 100.0, w, self.BOUNDS, 0.0, 1000.0)
        f2 = fitness(20.0, 100.0, w, self.BOUNDS, 0.0, 1000.0)
        assert f2.value > f1.value

    def test_monotone_in_time(self):
        w = self._weights()
        f1 = fitness(50.0, 100.0, w, self.BOUNDS, 0.0, 1000.0)
        f2 = fitness(50.0, 120.0, w, self.BOUNDS, 0.0, 1000.0)
        assert f2.value < f1.value

    def test_extrapolation_keeps_ordering(self):
        w = self._weights()
        inside = fitness(90.0, 100.0, w, self.BOUNDS, 0.0, 1000.0)
        outside = fitness(150.0, 100.0, w, self.BOUNDS, 0.0, 1000.0)
        assert outside.value > inside.value

    def test_death_penalty(self):
        f = fitness(50.0, 100.0, self._weights(), self.BOUNDS, violation=0.1,
                    penalty_coefficient=10.0, death_penalty=True)
        assert f.value == -np.inf

    def test_penalty_dominance_exhaustive_on_micro(self, micro):
        # every infeasible scheme of the 64-scheme case scores below every
        # feasible one under the auto coefficient
        sols = [Solution.from_parts(x, y, lam)
                for x in itertools.product([1, 2], repeat=2)
                for y in itertools.product([0, 1], repeat=2)
                for lam in itertools.product([50, 100], repeat=2)]
        evs = [evaluate(micro, s) for s in sols]
        samples = [(e.t, e.z) for e in evs]
        weights = ewm_weights(samples)
        bounds = NormBounds.from_samples(samples)
        coeff = auto_penalty_coefficient(samples, bounds, weights)
        values = [fitness(e.z, e.t, weights, bounds, e.violation, coeff) for e in evs]
        feas = [v.value for v, e in zip(values, evs) if e.feasible]
        infeas = [v.value for v, e in zip(values, evs) if not e.feasible]
        assert feas and infeas
        assert min(feas) > max(infeas)
