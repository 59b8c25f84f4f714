"""Theoretical sup-error envelopes on ``Q_m^d`` and the resulting sample counts."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, replace
from functools import lru_cache

from .core import ClassKind, DomainError

INT64_MAX = 2**63 - 1


def envelope_closed(d: int, r: int, m: int, kind: ClassKind | str = ClassKind.STANDARD) -> float:
    """Closed-form bound on ``sup |f|`` over the class with vanishing grid data."""
    kind = ClassKind.parse(kind)
    _check(d, r, m)
    if r == 0:
        return 1.0
    if kind is ClassKind.DIRECTIONAL:
        return (math.sqrt(d) / (2 * m)) ** r
    if r % 2 == 0:
        return math.e * d ** (r / 2) / (2 * m) ** r
    return math.e * d ** ((r + 1) / 2) / (2 * m) ** r


def _check(d: int, r: int, m: int) -> None:
    if d < 1 or m < 1 or r < 0:
        raise ValueError(f"need d >= 1, m >= 1, r >= 0; got d={d}, r={r}, m={m}")


@lru_cache(maxsize=None)
def _recursive_standard(d: int, r: int, m: int) -> float:
    if r == 0:
        return 1.0
    if r % 2:
        return d / (2 * m) * _recursive_standard(d, r - 1, m)
    if d == 1:
        return math.e / (2 * m) ** r
    return _recursive_standard(d - 1, r, m) + _recursive_standard(d, r - 2, m) / (8 * m * m)


@lru_cache(maxsize=None)
def _recursive_directional(d: int, r: int, m: int) -> float:
    if r == 0:
        return 1.0
    return math.sqrt(d) / (2 * m) * _recursive_directional(d, r - 1, m)


def envelope_recursive(d: int, r: int, m: int, kind: ClassKind | str = ClassKind.STANDARD) -> float:
    """Envelope from the two-step (even r) and one-step (odd r) recursions."""
    kind = ClassKind.parse(kind)
    _check(d, r, m)
    if kind is ClassKind.DIRECTIONAL:
        return _recursive_directional(d, r, m)
    return _recursive_standard(d, r, m)


class EnvelopeSource(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    RECURSIVE = "Recursive"


@dataclass(frozen=True)
class EnvelopeRow:
    d: int
    r: int
    m: int
    kind: ClassKind
    source: EnvelopeSource
    bound: float


class EnvelopeTable:
    HEADER = ("d", "r", "m", "kind", "source", "bound")

    def __init__(self, rows: list[EnvelopeRow]):
        self.rows = rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for row in self.rows:
            w.writerow([row.d, row.r, row.m, row.kind.value, row.source.value, repr(row.bound)])
        return buf.getvalue()


def envelope_table(d: int, r: int, m_max: int, kind: ClassKind | str = ClassKind.STANDARD) -> EnvelopeTable:
    kind = ClassKind.parse(kind)
    rows = []
    for m in range(1, m_max + 1):
        rows.append(EnvelopeRow(d, r, m, kind, EnvelopeSource.CLOSED_FORM, envelope_closed(d, r, m, kind)))
        rows.append(EnvelopeRow(d, r, m, kind, EnvelopeSource.RECURSIVE, envelope_recursive(d, r, m, kind)))
    return EnvelopeTable(rows)


@dataclass(frozen=True)
class ComplexityCount:
    epsilon: float
    d: int
    r: int
    kind: ClassKind
    m_used: int
    n_upper: int
    saturated: bool = False
    n_lower: int | None = None
    K_hat: float | None = None
    # odd r, Standard: the even r-1 recipe, which may be cheaper
    m_fallback: int | None = None
    n_upper_fallback: int | None = None

    @property
    def best_upper(self) -> int:
        if self.n_upper_fallback is None:
            return self.n_upper
        return min(self.n_upper, self.n_upper_fallback)

    @property
    def fallback_is_better(self) -> bool:
        return self.n_upper_fallback is not None and self.n_upper_fallback < self.n_upper

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "d": self.d,
            "r": self.r,
            "kind": self.kind.value,
            "m_used": self.m_used,
            "n_upper": self.n_upper,
            "saturated": self.saturated,
            "n_lower": self.n_lower,
            "K_hat": self.K_hat,
            "m_fallback": self.m_fallback,
            "n_upper_fallback": self.n_upper_fallback,
            "fallback_is_better": self.fallback_is_better,
        }


def grid_size_for(epsilon: float, d: int, r: int, kind: ClassKind) -> int:
    if kind is ClassKind.DIRECTIONAL:
        x = 0.5 * math.sqrt(d) * epsilon ** (-1.0 / r)
    elif r % 2 == 0:
        x = math.e ** (1.0 / r) / 2 * math.sqrt(d) * epsilon ** (-1.0 / r)
    else:
        x = math.e ** (1.0 / r) / 2 * d ** ((r + 1) / (2 * r)) * epsilon ** (-1.0 / r)
    return max(1, math.ceil(x))


def n_app_upper(epsilon: float, d: int, r: int, kind: ClassKind | str = ClassKind.STANDARD) -> ComplexityCount:
    """Sample count ``(d+1)^(r-1) (m+1)^d`` of the grid+cloud design reaching ``epsilon``."""
    kind = ClassKind.parse(kind)
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if r < 1 or d < 1:
        raise ValueError(f"need r >= 1 and d >= 1, got r={r}, d={d}")
    m = grid_size_for(epsilon, d, r, kind)
    bound = envelope_closed(d, r, m, kind)
    if bound > epsilon * (1 + 1e-12):
        raise AssertionError(f"recipe m={m} gives envelope {bound} > epsilon={epsilon}")
    n = (d + 1) ** (r - 1) * (m + 1) ** d
    saturated = n > INT64_MAX

    m_fb = n_fb = None
    if kind is ClassKind.STANDARD and r % 2 == 1 and r >= 3:
        m_fb = grid_size_for(epsilon, d, r - 1, kind)
        n_fb = (d + 1) ** (r - 2) * (m_fb + 1) ** d
        saturated = saturated or n_fb > INT64_MAX
    if saturated:
        n = min(n, INT64_MAX)
        n_fb = None if n_fb is None else min(n_fb, INT64_MAX)
    return ComplexityCount(
        epsilon=float(epsilon), d=d, r=r, kind=kind, m_used=m, n_upper=n, saturated=saturated,
        m_fallback=m_fb, n_upper_fallback=n_fb,
    )


def n_app_lower(epsilon: float, d: int, r: int, K_hat: float) -> int:
    """Largest ``n`` for which the fooling bound still exceeds ``epsilon``.

    Every design with at most this many points has worst-case error above
    ``epsilon`` on the directional class (hence also the standard one).
    """
    if r < 1 or d < 1:
        raise ValueError(f"need r >= 1 and d >= 1, got r={r}, d={d}")
    if not (0 < epsilon < 1.0 / K_hat):
        raise DomainError(f"epsilon={epsilon!r} must lie in (0, 1/K_hat) = (0, {1.0 / K_hat!r})")
    base = (5.0**r * K_hat) ** (-1.0 / r) * math.sqrt(d) * epsilon ** (-1.0 / r)
    x = base**d
    # bounds that are integers in exact arithmetic land a few ulps off in floats
    nearest = round(x)
    if abs(x - nearest) <= 1e-12 * max(1.0, x):
        x = float(nearest)
    return max(math.ceil(x) - 1, 0)


def complexity_count(epsilon: float, d: int, r: int, kind: ClassKind | str, K_hat: float) -> ComplexityCount:
    up = n_app_upper(epsilon, d, r, kind)
    lower = n_app_lower(epsilon, d, r, K_hat) if epsilon < 1.0 / K_hat else None
    return replace(up, n_lower=lower, K_hat=K_hat)
