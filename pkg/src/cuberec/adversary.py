"""Lower-bound certificates built from shrunken radial bumps.

A fooling function is a scaled copy of the radial bump ``g_d(x) = h(|x|^2)``
placed in the largest empty ball around a design. It vanishes on the design,
and its value at the center lower-bounds the worst-case recovery error of any
algorithm using those sample points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .core import ClassKind, CubeRecError, InvalidStepError, SmoothnessClass
from .designs import PointSet
from .search import maximize

K_INFLATION = 1.05
FEASIBILITY_TOL = 1e-3
CHECK_STEP_FACTOR = 1e-3


class InfeasibleCertificateError(CubeRecError):
    pass


def _psi(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def bump_profile(t):
    """Smooth step: 1 for ``t <= 0``, 0 for ``t >= 1``, ``psi(1-t)/(psi(1-t)+psi(t))`` between."""
    t_arr = np.asarray(t, dtype=float)
    a, b = _psi(1.0 - t_arr), _psi(t_arr)
    out = np.where(t_arr <= 0.0, 1.0, 0.0)
    mid = (t_arr > 0.0) & (t_arr < 1.0)
    out = np.where(mid, a / np.where(mid, a + b, 1.0), out)
    return float(out) if np.ndim(t) == 0 else out


def radial_bump(x):
    """``h(|x|^2)``; accepts a single vector or rows of an (n, d) array."""
    x = np.asarray(x, dtype=float)
    return bump_profile(np.sum(x * x, axis=-1))


@dataclass(frozen=True)
class DirectionSample:
    directions: np.ndarray = field(repr=False)
    seed: int

    @property
    def d(self) -> int:
        return self.directions.shape[1]


def sample_directions(d: int, count: int, seed: int) -> DirectionSample:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return DirectionSample(directions=v, seed=seed)


def _sign_patterns(ell: int) -> np.ndarray:
    grids = np.meshgrid(*([np.array([1.0, -1.0])] * ell), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, ell)


def directional_fd(func, X: np.ndarray, thetas: np.ndarray, step: float) -> np.ndarray:
    """Central-difference estimate of ``d_theta1 ... d_thetaL func`` at the rows of ``X``.

    ``thetas`` is (L, d) for one shared tuple or (n, L, d) for one tuple per row.
    """
    X = np.atleast_2d(X)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 2:
        thetas = np.broadcast_to(thetas, (len(X),) + thetas.shape)
    ell = thetas.shape[1]
    if ell == 0:
        return np.asarray(func(X), dtype=float)
    total = np.zeros(len(X))
    for eps in _sign_patterns(ell):
        shift = np.einsum("l,nld->nd", eps, thetas) * step
        total += np.prod(eps) * func(X + shift)
    return total / (2.0 * step) ** ell


def default_probe_dim(r: int) -> int:
    return min(max(r, 2), 4)


def _order_sup(ell: int, sample: DirectionSample, fd_step: float, n_tuples: int, n_radii: int) -> float:
    # seeded per order so the candidate set for order ell does not depend on r
    rng = np.random.default_rng([sample.seed, ell])
    dirs = sample.directions
    n, d = dirs.shape
    tuples = [np.repeat(dirs[i][None, :], ell, axis=0) for i in range(min(n, 8))]
    for _ in range(n_tuples):
        tuples.append(dirs[rng.integers(0, n, size=ell)])
    radii = (np.arange(n_radii) + 0.5) / n_radii

    best, best_cfg = 0.0, None
    for thetas in tuples:
        axes = [thetas[0], thetas.sum(axis=0)]
        axes += list(dirs[rng.integers(0, n, size=4)])
        for u in axes:
            norm = np.linalg.norm(u)
            if norm < 1e-12:
                continue
            u = u / norm
            vals = np.abs(directional_fd(radial_bump, radii[:, None] * u[None, :], thetas, fd_step))
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, best_cfg = float(vals[i]), (thetas, u, radii[i])

    if best_cfg is not None:
        thetas, u, rho = best_cfg
        width = 1.0 / n_radii

        def neg(rho_: float) -> float:
            x = (rho_ * u)[None, :]
            return -abs(float(directional_fd(radial_bump, x, thetas, fd_step)[0]))

        res = minimize_scalar(
            neg, bounds=(max(rho - width, 0.0), min(rho + width, 1.0)), method="bounded",
            options={"xatol": 1e-10},
        )
        best = max(best, -float(res.fun))
    return best


@lru_cache(maxsize=128)
def _estimate_K_cached(r: int, d_probe: int, seed: int, n_dirs: int, fd_step: float, n_tuples: int, n_radii: int) -> float:
    sample = sample_directions(d_probe, n_dirs, seed)
    K = 1.0
    for ell in range(1, r + 1):
        K = max(K, K_INFLATION * _order_sup(ell, sample, fd_step, n_tuples, n_radii))
    return K


def estimate_K(
    r: int,
    d_probe: int | None = None,
    sample: DirectionSample | None = None,
    fd_step: float = 1e-3,
    seed: int = 0,
    n_tuples: int = 96,
    n_radii: int = 200,
) -> float:
    """Estimate of ``sup_d ||g_d||_{r,d}``, inflated by 5% above order zero.

    The directions of ``sample`` (or a fresh seeded sample of 64 directions)
    define the candidate tuples; the order-zero term contributes exactly 1.
    """
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    if not (1e-8 < fd_step < 1e-2):
        raise InvalidStepError(f"fd_step must lie in (1e-8, 1e-2), got {fd_step!r}")
    if r == 0:
        return 1.0
    if d_probe is None:
        d_probe = sample.d if sample is not None else default_probe_dim(r)
    if d_probe < min(r, 2):
        raise ValueError(f"d_probe={d_probe} is too small for order {r}")
    if sample is None:
        return _estimate_K_cached(r, d_probe, seed, 64, fd_step, n_tuples, n_radii)
    if sample.d != d_probe:
        raise ValueError(f"direction sample has dimension {sample.d}, expected {d_probe}")
    K = 1.0
    for ell in range(1, r + 1):
        K = max(K, K_INFLATION * _order_sup(ell, sample, fd_step, n_tuples, n_radii))
    return K


def analytic_radius(n: int, d: int) -> float:
    """Guaranteed empty-ball radius ``min(1, sqrt(d) / (5 n^(1/d)))`` for ``n`` points."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return min(1.0, math.sqrt(d) / (5.0 * n ** (1.0 / d)))


def farthest_point(P: PointSet, probe_m: int) -> tuple[tuple[float, ...], float]:
    if len(P) == 0:
        raise ValueError("farthest_point needs at least one design point")
    tree = cKDTree(P.as_array())

    def dist(X: np.ndarray) -> np.ndarray:
        return tree.query(X, k=1)[0]

    res = maximize(dist, P.d, probe_m, refine_best=True)
    return res.point, res.value


@dataclass(frozen=True)
class FoolingInstance:
    z: tuple[float, ...]
    R: float
    r: int
    K_hat: float
    kind: ClassKind = ClassKind.DIRECTIONAL

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def peak(self) -> float:
        return self.R**self.r / self.K_hat

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.peak * radial_bump((X - np.asarray(self.z)) / self.R)

    def to_json(self) -> dict:
        return {"z": list(self.z), "R": self.R, "r": self.r, "K_hat": self.K_hat, "kind": self.kind.value}


def build_fooling(P: PointSet, cls: SmoothnessClass, K_hat: float, probe_m: int) -> FoolingInstance:
    if K_hat < 1.0:
        raise ValueError(f"K_hat must be at least 1, got {K_hat}")
    if len(P) == 0:
        z, R = tuple([0.5] * cls.d), 1.0
    else:
        if P.d != cls.d:
            raise ValueError(f"design dimension {P.d} does not match class dimension {cls.d}")
        z, dist = farthest_point(P, probe_m)
        R = min(1.0, dist)
    return FoolingInstance(z=z, R=R, r=cls.r, K_hat=float(K_hat), kind=cls.kind)


@dataclass(frozen=True)
class FeasibilityReport:
    max_derivative: float
    worst_order: int
    n_tuples: int

    @property
    def feasible(self) -> bool:
        return self.max_derivative <= 1.0 + FEASIBILITY_TOL


def check_feasibility(inst: FoolingInstance, n_tuples: int = 10_000, seed: int = 0) -> FeasibilityReport:
    """Sampled directional derivatives of order ``<= r`` of the instance.

    Half the tuples place the evaluation point on the line through the center
    along the first direction, where radial derivatives peak.
    """
    d, r = inst.d, inst.r
    rng = np.random.default_rng([seed, 7919])
    step = CHECK_STEP_FACTOR * inst.R
    z = np.asarray(inst.z)
    worst, worst_order = inst.peak, 0
    if r == 0:
        return FeasibilityReport(worst, 0, 1)
    orders = rng.integers(1, r + 1, size=n_tuples)
    for ell in range(1, r + 1):
        count = int(np.sum(orders == ell))
        if count == 0:
            continue
        thetas = rng.standard_normal((count, ell, d))
        thetas /= np.linalg.norm(thetas, axis=2, keepdims=True)
        u = rng.standard_normal((count, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        aligned = rng.random(count) < 0.5
        u[aligned] = thetas[aligned, 0, :]
        rho = rng.random(count)
        X = np.clip(z + inst.R * rho[:, None] * u, 0.0, 1.0)
        vals = np.abs(directional_fd(inst, X, thetas, step))
        i = int(np.argmax(vals))
        if vals[i] > worst:
            worst, worst_order = float(vals[i]), ell
    return FeasibilityReport(worst, worst_order, n_tuples)


def certify_lower_bound(
    P: PointSet,
    cls: SmoothnessClass,
    K_hat: float,
    probe_m: int,
    check: bool = False,
    n_tuples: int = 10_000,
    seed: int = 0,
) -> float:
    """Lower bound ``R^r / K_hat`` on the error of any method sampling only at ``P``."""
    inst = build_fooling(P, cls, K_hat, probe_m)
    if check:
        rep = check_feasibility(inst, n_tuples=n_tuples, seed=seed)
        if not rep.feasible:
            raise InfeasibleCertificateError(
                f"sampled derivative {rep.max_derivative:.6g} of order {rep.worst_order} exceeds 1"
            )
    return inst.peak


def points_within(P: PointSet, z: Sequence[float], R: float) -> int:
    """Number of design points strictly inside the open ball ``B_R(z)``."""
    if len(P) == 0:
        return 0
    d2 = np.sum((P.as_array() - np.asarray(z)) ** 2, axis=1)
    return int(np.sum(d2 < R * R))

