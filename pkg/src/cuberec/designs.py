"""Sampling designs: regular grids, reflected cloud expansions, stencil designs."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import (
    GridSpec,
    InvalidStepError,
    MultiIndex,
    Point,
    UnderflowError,
    check_point_budget,
    enumerate_multiindices,
    point_key,
)


class PointSet:
    """An ordered, duplicate-free collection of points in the unit cube."""

    def __init__(self, points: Iterable[Sequence[float]] = (), d: int | None = None):
        self._points: list[Point] = []
        self._keys: set[tuple[float, ...]] = set()
        self.d = d
        for p in points:
            self.add(p)
        if self.d is None:
            raise ValueError("an empty PointSet needs an explicit dimension")

    def add(self, p: Sequence[float]) -> bool:
        """Append ``p`` unless an identical point is present; report whether it was new."""
        p = tuple(float(c) for c in p)
        if self.d is None:
            self.d = len(p)
        elif len(p) != self.d:
            raise ValueError(f"point of dimension {len(p)} added to a {self.d}-dimensional set")
        if any(c < 0.0 or c > 1.0 for c in p):
            raise ValueError(f"point {list(p)} lies outside the unit cube")
        key = point_key(p)
        if key in self._keys:
            return False
        self._keys.add(key)
        self._points.append(p)
        return True

    @property
    def points(self) -> list[Point]:
        return list(self._points)

    def __iter__(self) -> Iterator[Point]:
        return iter(self._points)

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, p: Sequence[float]) -> bool:
        return point_key(p) in self._keys

    def as_array(self) -> np.ndarray:
        if not self._points:
            return np.zeros((0, self.d), dtype=float)
        return np.array(self._points, dtype=float)

    def to_json(self) -> list[list[float]]:
        return [list(p) for p in self._points]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[float]], d: int | None = None) -> "PointSet":
        return cls(data, d=d)

    def __repr__(self) -> str:
        return f"PointSet(n={len(self)}, d={self.d})"


def grid_indices(grid: GridSpec) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(grid.m + 1), repeat=grid.d)


def grid_coords(index: Sequence[int], m: int) -> Point:
    return tuple(k / m for k in index)


def build_grid(grid: GridSpec) -> PointSet:
    """The lattice ``{0, 1/m, ..., 1}^d`` in lexicographic order."""
    check_point_budget(grid.size, f"grid Q_{grid.m}^{grid.d}")
    return PointSet((grid_coords(idx, grid.m) for idx in grid_indices(grid)), d=grid.d)


def expand_cloud(M: PointSet, h: float) -> PointSet:
    """Add one axis step of length ``h`` per point and coordinate.

    The step goes in the positive direction when that stays inside the cube
    and is reflected otherwise.
    """
    if not (0.0 < h <= 0.5):
        raise InvalidStepError(f"cloud step must lie in (0, 1/2], got {h!r}")
    out = PointSet(M, d=M.d)
    for x in M:
        for j in range(M.d):
            y = list(x)
            y[j] = x[j] + h if x[j] + h <= 1.0 else x[j] - h
            out.add(y)
    return out


@dataclass(frozen=True)
class ProofSchedule:
    delta: float
    steps: tuple[float, ...]


def proof_schedule(delta: float, r: int) -> ProofSchedule:
    """Step sizes ``h_i = 3 (delta/9)^(2^(i-1))`` for ``i = 1..r-1``."""
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if r < 1:
        raise ValueError(f"r must be at least 1, got {r}")
    steps = []
    for i in range(1, r):
        h = 3.0 * (delta / 9.0) ** (2 ** (i - 1))
        if h < 1e-300:
            raise UnderflowError(f"step h_{i} = {h!r} underflows (delta={delta}, r={r})")
        steps.append(h)
    return ProofSchedule(delta=float(delta), steps=tuple(steps))


def build_proof_pointset(Q: PointSet, delta: float, r: int) -> PointSet:
    P = PointSet(Q, d=Q.d)
    for h in proof_schedule(delta, r).steps:
        P = expand_cloud(P, h)
    return P


def default_step(m: int, r: int) -> float:
    return 1.0 / (2 * m * max(r - 1, 1))


def stencil_point(y: Sequence[float], k: Sequence[int], sigma: Sequence[int], h: float) -> Point:
    # single source of truth for stencil coordinates: design and fit must agree bitwise
    return tuple(yj + (sj * kj) * h if kj else yj for yj, kj, sj in zip(y, k, sigma))


@dataclass(frozen=True)
class RecoveryDesign:
    grid: GridSpec
    r: int
    h: float
    offsets: tuple[MultiIndex, ...]
    grid_points: tuple[Point, ...]
    orientations: tuple[tuple[int, ...], ...]
    all_points: PointSet

    @property
    def n_points(self) -> int:
        return len(self.all_points)

    @property
    def cost_cap(self) -> int:
        return (self.grid.d + 1) ** (self.r - 1) * self.grid.size

    def stencil(self, i: int) -> list[Point]:
        y, sigma = self.grid_points[i], self.orientations[i]
        return [stencil_point(y, k, sigma, self.h) for k in self.offsets]

    def to_json(self) -> dict:
        return {
            "grid": {"m": self.grid.m, "d": self.grid.d},
            "r": self.r,
            "h": self.h,
            "points": self.all_points.to_json(),
        }


def build_recovery_design(grid: GridSpec, r: int, h: float | None = None) -> RecoveryDesign:
    """Grid plus one-sided simplex stencils ``{k : |k| <= r-1}`` at every grid point.

    Along each axis the stencil points forward unless ``y_j + h (r-1)`` would
    leave the cube, in which case that axis is flipped.
    """
    if r < 1:
        raise ValueError(f"r must be at least 1, got {r}")
    if h is None:
        h = default_step(grid.m, r)
    if not h > 0.0:
        raise InvalidStepError(f"step must be positive, got {h!r}")
    reach = h * (r - 1)
    if reach > 1.0:
        raise InvalidStepError(f"stencil reach h*(r-1) = {reach} exceeds 1")

    offsets = tuple(enumerate_multiindices(grid.d, r - 1))
    check_point_budget(len(offsets) * grid.size, "recovery design")

    grid_points, orientations = [], []
    all_points = PointSet(d=grid.d)
    for idx in grid_indices(grid):
        y = grid_coords(idx, grid.m)
        sigma = tuple(1 if yj + reach <= 1.0 else -1 for yj in y)
        for yj, sj in zip(y, sigma):
            if sj < 0 and yj - reach < 0.0:
                raise InvalidStepError(
                    f"stencil of reach {reach} fits on neither side of coordinate {yj}"
                )
        grid_points.append(y)
        orientations.append(sigma)
        for k in offsets:
            all_points.add(stencil_point(y, k, sigma, h))

    return RecoveryDesign(
        grid=grid,
        r=r,
        h=float(h),
        offsets=offsets,
        grid_points=tuple(grid_points),
        orientations=tuple(orientations),
        all_points=all_points,
    )


def simplex_size(d: int, k: int) -> int:
    return math.comb(d + k, d)
