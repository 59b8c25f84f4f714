"""Domain types and index arithmetic shared across the package.

Points are plain tuples of floats. Grid coordinates are always produced as
``k / m`` from integers, so the same grid point has bit-identical
coordinates wherever it is built.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

Point = tuple[float, ...]

POINT_CAP_ENV = "CUBEREC_MAX_POINTS"
DEFAULT_POINT_CAP = 10**8
COORD_TOL = 1e-12
DEDUP_DIGITS = 14


class CubeRecError(Exception):
    """Base class for all errors raised by this package."""


class ResourceLimitError(CubeRecError):
    pass


class InvalidStepError(CubeRecError, ValueError):
    pass


class DomainError(CubeRecError, ValueError):
    pass


class UnderflowError(CubeRecError, ArithmeticError):
    pass


class MissingSampleError(CubeRecError, KeyError):
    def __init__(self, point: Point):
        super().__init__(point)
        self.point = point

    def __str__(self) -> str:
        return f"no sample recorded at point {list(self.point)}"


def point_cap() -> int:
    """Maximum number of points any single grid or probe set may hold."""
    raw = os.environ.get(POINT_CAP_ENV)
    if raw is None:
        return DEFAULT_POINT_CAP
    return int(float(raw))


def check_point_budget(count: int, what: str = "point set") -> None:
    cap = point_cap()
    if count > cap:
        raise ResourceLimitError(f"{what} needs {count} points, cap is {cap} (set {POINT_CAP_ENV})")


@dataclass(frozen=True, order=False)
class MultiIndex:
    entries: tuple[int, ...]
    order: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        entries = tuple(int(b) for b in self.entries)
        if len(entries) < 1:
            raise ValueError("a multi-index needs at least one entry")
        if any(b < 0 for b in entries):
            raise ValueError(f"negative entry in multi-index {entries}")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "order", sum(entries))

    @property
    def d(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, j: int) -> int:
        return self.entries[j]

    def sort_key(self) -> tuple:
        # graded lex: lower order first, then larger leading entries first
        return (self.order, tuple(-b for b in self.entries))

    def __lt__(self, other: "MultiIndex") -> bool:
        return self.sort_key() < other.sort_key()

    def to_json(self) -> list[int]:
        return list(self.entries)

    @classmethod
    def from_json(cls, data: Sequence[int]) -> "MultiIndex":
        return cls(tuple(data))


class ClassKind(str, enum.Enum):
    STANDARD = "Standard"
    DIRECTIONAL = "Directional"

    @classmethod
    def parse(cls, value: "str | ClassKind") -> "ClassKind":
        if isinstance(value, ClassKind):
            return value
        lowered = value.strip().lower()
        for kind in cls:
            if kind.value.lower() == lowered:
                return kind
        raise ValueError(f"unknown class kind {value!r}; expected Standard or Directional")


@dataclass(frozen=True)
class GridSpec:
    m: int
    d: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.d < 1:
            raise ValueError(f"grid needs m >= 1 and d >= 1, got m={self.m}, d={self.d}")

    @property
    def size(self) -> int:
        return (self.m + 1) ** self.d


@dataclass(frozen=True)
class SmoothnessClass:
    r: int
    d: int
    kind: ClassKind = ClassKind.STANDARD

    def __post_init__(self) -> None:
        if self.r < 0 or self.d < 1:
            raise ValueError(f"smoothness class needs r >= 0 and d >= 1, got r={self.r}, d={self.d}")
        object.__setattr__(self, "kind", ClassKind.parse(self.kind))


def make_point(coords: Iterable[float], tol: float = COORD_TOL) -> Point:
    """Validate coordinates against the unit cube, snapping tiny overshoots."""
    out = []
    for c in coords:
        c = float(c)
        if not (-tol <= c <= 1.0 + tol):
            raise DomainError(f"coordinate {c!r} outside [0, 1]")
        out.append(min(max(c, 0.0), 1.0))
    if not out:
        raise ValueError("a point needs at least one coordinate")
    return tuple(out)


def point_key(x: Sequence[float]) -> tuple[float, ...]:
    # +0.0 folds -0.0 into 0.0 so the key is sign-stable
    return tuple(round(float(c), DEDUP_DIGITS) + 0.0 for c in x)


def enumerate_multiindices(d: int, k_max: int) -> list[MultiIndex]:
    """All multi-indices of length ``d`` and order at most ``k_max``, graded-lex ordered."""
    if d < 1 or k_max < 0:
        raise ValueError(f"need d >= 1 and k_max >= 0, got d={d}, k_max={k_max}")

    def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return [MultiIndex(c) for k in range(k_max + 1) for c in compositions(k, d)]


def nearest_grid_index(x: Sequence[float], m: int) -> tuple[int, ...]:
    # round half up, clamped to the lattice
    return tuple(min(max(int(math.floor(float(c) * m + 0.5)), 0), m) for c in x)


def nearest_grid_point(x: Sequence[float], grid: GridSpec) -> Point:
    if len(x) != grid.d:
        raise ValueError(f"point has dimension {len(x)}, grid has {grid.d}")
    return tuple(k / grid.m for k in nearest_grid_index(x, grid.m))


def factorial_weight(beta: MultiIndex) -> float:
    """Return ``1 / beta!``."""
    denom = 1
    for b in beta:
        denom *= math.factorial(b)
    try:
        return 1.0 / float(denom)
    except OverflowError as exc:
        raise OverflowError(f"beta! overflows a double for beta={beta.entries}") from exc


class SampleTable:
    """Function values keyed by point, deduplicated after rounding to 1e-14."""

    def __init__(self, provenance: str = "", d: int | None = None):
        self.provenance = provenance
        self.d = d
        self._values: dict[tuple[float, ...], float] = {}
        self._points: dict[tuple[float, ...], Point] = {}

    def insert(self, x: Sequence[float], value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite sample {value!r} at {list(x)}")
        if self.d is None:
            self.d = len(x)
        elif len(x) != self.d:
            raise ValueError(f"point dimension {len(x)} does not match table dimension {self.d}")
        key = point_key(x)
        self._values[key] = value
        self._points.setdefault(key, tuple(float(c) for c in x))

    def __getitem__(self, x: Sequence[float]) -> float:
        try:
            return self._values[point_key(x)]
        except KeyError:
            raise MissingSampleError(tuple(float(c) for c in x)) from None

    def __contains__(self, x: Sequence[float]) -> bool:
        return point_key(x) in self._values

    def __len__(self) -> int:
        return len(self._values)

    @property
    def n(self) -> int:
        return len(self._values)

    def points(self) -> list[Point]:
        return list(self._points.values())

    @classmethod
    def from_function(
        cls,
        points: Iterable[Sequence[float]],
        f: Callable[[np.ndarray], np.ndarray],
        provenance: str = "",
    ) -> "SampleTable":
        """Sample a vectorized ``f`` (rows of an (n, d) array) at ``points``."""
        pts = [tuple(float(c) for c in p) for p in points]
        table = cls(provenance=provenance, d=len(pts[0]) if pts else None)
        if not pts:
            return table
        values = np.asarray(f(np.array(pts, dtype=float)), dtype=float).reshape(-1)
        for p, v in zip(pts, values):
            table.insert(p, v)
        return table
