"""Entropy-weight scalarization of the (profit, travel time) pair.

The two objective values are min-max normalized over a reference sample
(the solver's evaluated initial population), information entropy decides
how much discriminating power each index carries, and the resulting convex
weights combine both into a single fitness to maximize.  Infeasible
solutions are pushed below every feasible one by a static linear penalty.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EwmWeights:
    w_profit: float
    w_time: float
    entropy_profit: float
    entropy_time: float
    n_samples: int


@dataclass(frozen=True)
class NormBounds:
    z_min: float
    z_max: float
    t_min: float
    t_max: float

    def z_norm(self, z: float) -> float:
        if self.z_max == self.z_min:
            return 0.5
        # linear, deliberately unclipped: ordering is preserved outside the
        # fitting range as well
        return (z - self.z_min) / (self.z_max - self.z_min)

    def t_norm(self, t: float) -> float:
        if self.t_max == self.t_min:
            return 0.5
        return (t - self.t_min) / (self.t_max - self.t_min)

    @classmethod
    def from_samples(cls, samples) -> "NormBounds":
        ts = [s[0] for s in samples]
        zs = [s[1] for s in samples]
        return cls(z_min=min(zs), z_max=max(zs), t_min=min(ts), t_max=max(ts))


@dataclass(frozen=True)
class Fitness:
    value: float
    z_norm: float
    t_norm: float
    penalty: float

    @property
    def feasible(self) -> bool:
        return self.penalty == 0.0


def _entropy(scores: np.ndarray) -> float:
    """Shannon entropy of one normalized index, scaled into [0, 1].

    The normalizer 1/ln(sample count) is the value that maps the uniform
    distribution over the samples to entropy exactly 1, which keeps the
    derived weights nonnegative.
    """
    total = float(np.sum(scores))
    n = scores.shape[0]
    if total <= 0.0:
        return 1.0
    p = scores / total
    mask = p > 0.0
    return float(-np.sum(p[mask] * np.log(p[mask])) / math.log(n))


def ewm_weights(samples) -> EwmWeights:
    """Entropy weights from a sample of (time, profit) pairs.

    Profit is normalized directly (more is better); time is inverted first
    so that for both indices a larger normalized score means better.
    """
    samples = list(samples)
    n = len(samples)
    if n < 2:
        raise ValueError(f"need at least 2 samples to fit weights, got {n}")
    ts = np.array([float(s[0]) for s in samples])
    zs = np.array([float(s[1]) for s in samples])

    t_span = ts.max() - ts.min()
    z_span = zs.max() - zs.min()
    if t_span == 0.0 and z_span == 0.0:
        warnings.warn("both indices constant over the sample; falling back to equal weights")
        return EwmWeights(w_profit=0.5, w_time=0.5, entropy_profit=1.0,
                          entropy_time=1.0, n_samples=n)

    t_norm = (ts.max() - ts) / t_span if t_span > 0 else np.zeros(n)
    z_norm = (zs - zs.min()) / z_span if z_span > 0 else np.zeros(n)
    e_t = _entropy(t_norm) if t_span > 0 else 1.0
    e_z = _entropy(z_norm) if z_span > 0 else 1.0

    d_t, d_z = 1.0 - e_t, 1.0 - e_z
    w_t = d_t / (d_t + d_z)
    w_z = d_z / (d_t + d_z)
    return EwmWeights(w_profit=w_z, w_time=w_t, entropy_profit=e_z,
                      entropy_time=e_t, n_samples=n)


def auto_penalty_coefficient(samples, bounds: NormBounds, weights: EwmWeights) -> float:
    """Static penalty factor safely above the feasible fitness span."""
    span = 0.0
    for t, z in samples:
        base = weights.w_profit * bounds.z_norm(z) - weights.w_time * bounds.t_norm(t)
        span = max(span, abs(base))
    return 1000.0 * (1.0 + 2.0 * span)


def fitness(z: float, t: float, weights: EwmWeights, bounds: NormBounds,
            violation: float, penalty_coefficient: float,
            death_penalty: bool = False) -> Fitness:
    """Scalar fitness of one evaluated solution (to maximize).

    ``violation`` is the normalized residual total; zero means feasible.
    """
    z_n = bounds.z_norm(z)
    t_n = bounds.t_norm(t)
    base = weights.w_profit * z_n - weights.w_time * t_n
    if violation <= 0.0:
        return Fitness(value=base, z_norm=z_n, t_norm=t_n, penalty=0.0)
    if death_penalty:
        penalty = float("inf")
    else:
        penalty = penalty_coefficient * violation
    return Fitness(value=base - penalty, z_norm=z_n, t_norm=t_n, penalty=penalty)
