"""Subcubewise Taylor reconstruction from grid+stencil samples.

Derivatives at each grid point are estimated by one-sided divided differences
on the stencil. The fitted model uses the Newton forward-difference series
truncated at total order ``r - 1``, which is exact for polynomials of that
degree and gives derivative errors of order ``h^(r - |beta|)``; the plain
leading quotient is available through :func:`estimate_derivative`.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import MultiIndex, SampleTable, enumerate_multiindices, factorial_weight
from .designs import RecoveryDesign, stencil_point
from .search import maximize

Evaluable = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def _stirling1(n: int, k: int) -> int:
    """Signed Stirling numbers of the first kind."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return _stirling1(n - 1, k - 1) - (n - 1) * _stirling1(n - 1, k)


def newton_weight(k: int, b: int) -> float:
    """``b``-th derivative at 0 of the binomial polynomial ``C(t, k)``."""
    if b > k:
        return 0.0
    return math.factorial(b) * _stirling1(k, b) / math.factorial(k)


def forward_difference_weights(k: Sequence[int]) -> list[tuple[tuple[int, ...], float]]:
    """Pairs ``(l, w)`` with ``Delta^k f(0) = sum w * f(l)`` over ``l <= k``."""
    out = []
    ranges = [range(kj + 1) for kj in k]
    for l in itertools.product(*ranges):
        w = 1
        for kj, lj in zip(k, l):
            w *= (-1) ** (kj - lj) * math.comb(kj, lj)
        out.append((l, float(w)))
    return out


def _dominates(k: Sequence[int], beta: Sequence[int]) -> bool:
    return all(kj >= bj for kj, bj in zip(k, beta))


def estimate_derivative(
    samples: SampleTable,
    y: Sequence[float],
    beta: MultiIndex,
    h: float,
    sigma: Sequence[int],
    max_order: int | None = None,
) -> float:
    """Divided-difference estimate of ``D^beta f(y)``.

    With ``max_order`` unset this is the nested one-sided quotient
    ``Delta_h^beta f(y) / h^|beta|`` sign-corrected by ``prod sigma_j^beta_j``.
    With ``max_order = q >= |beta|`` the Newton series terms ``Delta^k`` with
    ``beta <= k``, ``|k| <= q`` are added, raising the accuracy to
    ``O(h^(q + 1 - |beta|))``.
    """
    q = beta.order if max_order is None else max_order
    if q < beta.order:
        raise ValueError(f"max_order {q} is below the derivative order {beta.order}")
    d = len(y)
    total = 0.0
    for k in enumerate_multiindices(d, q):
        if not _dominates(k, beta):
            continue
        coeff = 1.0
        for kj, bj in zip(k, beta):
            coeff *= newton_weight(kj, bj)
        if coeff == 0.0:
            continue
        delta = 0.0
        for l, w in forward_difference_weights(k.entries):
            delta += w * samples[stencil_point(y, l, sigma, h)]
        total += coeff * delta
    sign = 1
    for sj, bj in zip(sigma, beta):
        if sj < 0 and bj % 2:
            sign = -sign
    return sign * total / h**beta.order


@lru_cache(maxsize=64)
def _fit_operators(d: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices mapping stencil values to differences, and differences to derivatives."""
    idx = enumerate_multiindices(d, q)
    pos = {k.entries: i for i, k in enumerate(idx)}
    n = len(idx)
    W = np.zeros((n, n))
    for i, k in enumerate(idx):
        for l, w in forward_difference_weights(k.entries):
            W[i, pos[l]] = w
    C = np.zeros((n, n))
    for b, beta in enumerate(idx):
        for i, k in enumerate(idx):
            if _dominates(k, beta):
                C[b, i] = math.prod(newton_weight(kj, bj) for kj, bj in zip(k, beta))
    return W, C


@dataclass(frozen=True)
class TaylorModel:
    design: RecoveryDesign
    betas: tuple[MultiIndex, ...]
    coeffs: np.ndarray  # (n_grid, n_beta), rows in lexicographic grid order

    def coefficients(self, i: int) -> dict[MultiIndex, float]:
        return {beta: float(c) for beta, c in zip(self.betas, self.coeffs[i])}

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m, d = self.design.grid.m, self.design.grid.d
        idx = np.clip(np.floor(X * m + 0.5), 0, m).astype(np.int64)
        flat = np.zeros(len(X), dtype=np.int64)
        for j in range(d):
            flat = flat * (m + 1) + idx[:, j]
        diff = X - idx / m
        out = np.zeros(len(X))
        for b, beta in enumerate(self.betas):
            term = np.full(len(X), factorial_weight(beta))
            for j, bj in enumerate(beta):
                if bj:
                    term = term * diff[:, j] ** bj
            out += self.coeffs[flat, b] * term
        return out


def fit_taylor_models(design: RecoveryDesign, samples: SampleTable) -> TaylorModel:
    q = design.r - 1
    d = design.grid.d
    W, C = _fit_operators(d, q)
    F = np.array(
        [[samples[p] for p in design.stencil(i)] for i in range(len(design.grid_points))],
        dtype=float,
    )
    coeffs = (F @ W.T) @ C.T
    betas = design.offsets
    orders = np.array([beta.order for beta in betas])
    sigma = np.array(design.orientations)
    powers = np.array([beta.entries for beta in betas])
    signs = np.prod(np.where(sigma[:, None, :] < 0, (-1.0) ** powers[None, :, :], 1.0), axis=2)
    coeffs = coeffs * signs / design.h ** orders[None, :]
    # the constant term is the sample itself; keep it bit-exact
    coeffs[:, 0] = F[:, 0]
    return TaylorModel(design=design, betas=betas, coeffs=coeffs)


def evaluate(model: TaylorModel, x: Sequence[float]) -> float:
    return float(model(np.asarray(x, dtype=float)[None, :])[0])


class SearchMethod(str, enum.Enum):
    DENSE_GRID = "DenseGrid"
    DENSE_GRID_PLUS_REFINE = "DenseGridPlusRefine"


@dataclass(frozen=True)
class ErrorReport:
    sup_estimate: float
    witness: tuple[float, ...]
    eval_count: int
    method: SearchMethod

    def to_json(self) -> dict:
        return {
            "sup_estimate": self.sup_estimate,
            "witness": list(self.witness),
            "eval_count": self.eval_count,
            "method": self.method.value,
        }


def _check_probe(model: TaylorModel, probe_m: int) -> None:
    if probe_m < 2 * model.design.grid.m:
        raise ValueError(f"probe_m={probe_m} must be at least 2*m={2 * model.design.grid.m}")


def sup_error(model: TaylorModel, oracle: Evaluable, probe_m: int, refine: bool = True) -> ErrorReport:
    """Search estimate (and lower bound) of ``||f - model||_inf``."""
    _check_probe(model, probe_m)

    def gap(X: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(oracle(X), dtype=float) - model(X))

    res = maximize(gap, model.design.grid.d, probe_m, refine_best=refine)
    method = SearchMethod.DENSE_GRID_PLUS_REFINE if refine else SearchMethod.DENSE_GRID
    return ErrorReport(res.value, res.point, res.eval_count, method)


def estimate_maximum(model: TaylorModel, probe_m: int, refine: bool = True) -> tuple[float, tuple[float, ...]]:
    _check_probe(model, probe_m)
    res = maximize(model, model.design.grid.d, probe_m, refine_best=refine)
    return res.value, res.point


@dataclass(frozen=True)
class SandwichReport:
    max_oracle: float
    max_model: float
    sup_error: float

    @property
    def gap(self) -> float:
        return abs(self.max_oracle - self.max_model)


def max_sandwich(model: TaylorModel, oracle: Evaluable, probe_m: int) -> SandwichReport:
    """Maxima of ``f`` and of the model compared on one shared candidate set.

    Each search's winner is added to the other's candidates, so the reported
    maxima and error estimate satisfy ``|max f - max model| <= sup_error``
    exactly, not just up to search accuracy.
    """
    _check_probe(model, probe_m)
    d = model.design.grid.d
    mod = maximize(model, d, probe_m)
    orc = maximize(oracle, d, probe_m)
    err = sup_error(model, oracle, probe_m)
    cand = np.array([mod.point, orc.point])
    f_c = np.asarray(oracle(cand), dtype=float)
    m_c = model(cand)
    return SandwichReport(
        max_oracle=max(orc.value, float(f_c.max())),
        max_model=max(mod.value, float(m_c.max())),
        sup_error=max(err.sup_estimate, float(np.abs(f_c - m_c).max())),
    )
