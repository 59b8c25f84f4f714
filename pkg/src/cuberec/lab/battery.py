"""Test functions scaled into the smoothness classes by analytic derivative bounds.

Each certificate bounds every directional derivative ``d_theta1 ... d_thetaL f``
of order ``L <= r`` with unit directions. Coordinate partials are directional
derivatives along basis vectors, so the same certificate covers both the
standard and the directional class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..adversary import estimate_K, radial_bump
from ..core import CubeRecError

BATTERY_IDS = ("const", "affine", "sinsum", "gauss", "bump-offcenter", "poly-deg-r")

# sup_u |He_k(u)| exp(-u^2/2) <= CRAMER * sqrt(k!)  (Cramer's inequality)
CRAMER = 1.0865
GAUSS_WIDTH = 0.35
GAUSS_CENTER = 0.43
BUMP_RADIUS = 0.45
BUMP_CENTER = 0.57


class UnknownBatteryError(CubeRecError, KeyError):
    pass


ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BatteryFunction:
    id: str
    r: int
    d: int
    scale: float
    f: ArrayFn = field(repr=False)
    grad: ArrayFn = field(repr=False)
    # order -> certified bound on unit-direction derivatives of the scaled function
    certificate: dict[int, float] = field(repr=False)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.f(np.atleast_2d(np.asarray(X, dtype=float)))

    def gradient(self, X: np.ndarray) -> np.ndarray:
        return self.grad(np.atleast_2d(np.asarray(X, dtype=float)))

    @property
    def certified_max(self) -> float:
        return max(self.certificate.values())


def battery(id: str, r: int, d: int) -> BatteryFunction:
    if r < 0 or d < 1:
        raise ValueError(f"need r >= 0 and d >= 1, got r={r}, d={d}")
    try:
        maker = _MAKERS[id]
    except KeyError:
        raise UnknownBatteryError(f"unknown battery function {id!r}; choose from {', '.join(BATTERY_IDS)}") from None
    return maker(r, d)


def _const(r: int, d: int) -> BatteryFunction:
    cert = {0: 0.5, **{ell: 0.0 for ell in range(1, r + 1)}}
    return BatteryFunction(
        "const", r, d, 0.5,
        f=lambda X: np.full(len(X), 0.5),
        grad=lambda X: np.zeros_like(X),
        certificate=cert,
    )


def _affine(r: int, d: int) -> BatteryFunction:
    s = 1.0 / (2 * d)
    cert = {0: 0.5}
    if r >= 1:
        cert[1] = s * math.sqrt(d)
    cert.update({ell: 0.0 for ell in range(2, r + 1)})
    return BatteryFunction(
        "affine", r, d, s,
        f=lambda X: s * X.sum(axis=1),
        grad=lambda X: np.full_like(X, s),
        certificate=cert,
    )


def _sinsum(r: int, d: int) -> BatteryFunction:
    s = 0.5 * d ** (-r / 2)
    cert = {ell: s * d ** (ell / 2) for ell in range(r + 1)}
    return BatteryFunction(
        "sinsum", r, d, s,
        f=lambda X: s * np.sin(X.sum(axis=1)),
        grad=lambda X: np.repeat((s * np.cos(X.sum(axis=1)))[:, None], X.shape[1], axis=1),
        certificate=cert,
    )


def _gauss(r: int, d: int) -> BatteryFunction:
    # along any line the Gaussian is a 1-d Gaussian of width tau times a factor <= 1,
    # and a symmetric multilinear form attains its norm on the diagonal
    tau = GAUSS_WIDTH
    raw = {ell: (CRAMER * math.sqrt(math.factorial(ell)) if ell else 1.0) * tau**-ell for ell in range(r + 1)}
    s = 1.0 / max(raw.values())
    c = np.full(d, GAUSS_CENTER)

    def f(X):
        return s * np.exp(-np.sum((X - c) ** 2, axis=1) / (2 * tau * tau))

    def grad(X):
        return -(X - c) / (tau * tau) * f(X)[:, None]

    return BatteryFunction("gauss", r, d, s, f=f, grad=grad, certificate={k: s * v for k, v in raw.items()})


def _bump_offcenter(r: int, d: int) -> BatteryFunction:
    rho = BUMP_RADIUS
    K = estimate_K(r) if r >= 1 else 1.0
    s = rho**r / K
    c = np.full(d, BUMP_CENTER)

    def f(X):
        return s * radial_bump((X - c) / rho)

    def grad(X):
        # finite differences of the profile are enough here; the closed form is not needed elsewhere
        step = 1e-6 * rho
        out = np.empty_like(X)
        for j in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[j] = step
            out[:, j] = (f(X + e) - f(X - e)) / (2 * step)
        return out

    cert = {ell: s * rho**-ell * K for ell in range(r + 1)}
    cert[0] = s
    return BatteryFunction("bump-offcenter", r, d, s, f=f, grad=grad, certificate=cert)


def _poly(r: int, d: int) -> BatteryFunction:
    # f = s * mean(x)^r; each unit direction contributes |sum(theta)|/d <= d^(-1/2)
    deg = max(r, 1)
    s = 1.0 / (2 * math.factorial(deg))
    cert = {ell: s * math.factorial(deg) / math.factorial(deg - ell) * d ** (-ell / 2) if ell <= deg else 0.0
            for ell in range(r + 1)}

    def f(X):
        return s * X.mean(axis=1) ** deg

    def grad(X):
        u = X.mean(axis=1)
        return np.repeat((s * deg * u ** (deg - 1) / X.shape[1])[:, None], X.shape[1], axis=1)

    return BatteryFunction("poly-deg-r", r, d, s, f=f, grad=grad, certificate=cert)


_MAKERS = {
    "const": _const,
    "affine": _affine,
    "sinsum": _sinsum,
    "gauss": _gauss,
    "bump-offcenter": _bump_offcenter,
    "poly-deg-r": _poly,
}
