"""Seeded sampling of evaluation points.

Generator: numpy ``PCG64`` seeded with the integer seed, wrapped in
``numpy.random.Generator``. For each point, ``n`` uniforms are drawn for x
from the box, then ``n`` uniforms for y from ``[y_low, y_high]``; the y draw
is repeated until ``|y| >= min_fiber_norm``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lagrangekit.jets import TangentPoint


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Box:
    x_low: tuple
    x_high: tuple
    y_low: float = -2.0
    y_high: float = 2.0
    min_fiber_norm: float = 0.1

    @classmethod
    def default(cls, n: int) -> "Box":
        return cls((-2.0,) * n, (2.0,) * n)

    @property
    def n(self) -> int:
        return len(self.x_low)

    def to_dict(self):
        return {"x_low": list(self.x_low), "x_high": list(self.x_high),
                "y_low": self.y_low, "y_high": self.y_high,
                "min_fiber_norm": self.min_fiber_norm}


def sample_points(box: Box, count: int, seed: int | np.random.Generator) -> list[TangentPoint]:
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    lo, hi = np.array(box.x_low), np.array(box.x_high)
    points = []
    for _ in range(count):
        x = rng.uniform(lo, hi)
        while True:
            y = rng.uniform(box.y_low, box.y_high, size=box.n)
            if np.linalg.norm(y) >= box.min_fiber_norm:
                break
        points.append(TangentPoint(x, y))
    return points
