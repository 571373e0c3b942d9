"""Encoded operating scheme: run-to-bus duties, bus types, capacity splits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Solution:
    """One decoded scheme.

    x[r]   1-based bus number serving run position r (runs in instance order)
    y[k]   vehicle-type index of bus k (0-based into the type catalog)
    lam[k] passenger share of bus k, integer percent
    """

    x: tuple[int, ...]
    y: tuple[int, ...]
    lam: tuple[int, ...]

    def __post_init__(self):
        for name in ("x", "y", "lam"):
            v = getattr(self, name)
            if hasattr(v, "tolist"):
                object.__setattr__(self, name, tuple(v.tolist()))
            else:
                object.__setattr__(self, name, tuple(int(e) for e in v))

    @property
    def n_runs(self) -> int:
        return len(self.x)

    @property
    def n_buses(self) -> int:
        return len(self.y)

    def bus_of_run(self, r: int) -> int:
        return self.x[r] - 1

    def type_of_run(self, r: int) -> int:
        return self.y[self.x[r] - 1]

    def lam_of_run(self, r: int) -> int:
        return self.lam[self.x[r] - 1]

    def canonical(self) -> tuple:
        """Bus-label-free fingerprint.

        Bus numbering is a gauge choice: permuting bus labels (together with
        their type/share columns) yields an operationally identical scheme.
        The fingerprint maps every run to its (type, share) pair and keeps
        the idle buses as a sorted multiset.
        """
        used = sorted(set(self.x))
        per_run = tuple((self.y[b - 1], self.lam[b - 1]) for b in self.x)
        duties: dict[int, list[int]] = {}
        for r, b in enumerate(self.x):
            duties.setdefault(b, []).append(r)
        duty_shape = tuple(sorted(tuple(v) for v in duties.values()))
        idle = tuple(sorted((self.y[b - 1],) for b in range(1, self.n_buses + 1) if b not in used))
        return (per_run, duty_shape, idle)

    def to_vector(self) -> np.ndarray:
        return np.array(list(self.x) + list(self.y) + list(self.lam), dtype=np.float64)

    @classmethod
    def from_parts(cls, x, y, lam) -> "Solution":
        return cls(x=tuple(x), y=tuple(y), lam=tuple(lam))
