"""Dense-probe plus coordinate-refinement maximization over the unit cube."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import check_point_budget

Objective = Callable[[np.ndarray], np.ndarray]

CHUNK_ROWS = 1 << 16
MAX_REFINE_ITERS = 100
REFINE_TOL = 1e-10


@dataclass(frozen=True)
class SearchResult:
    value: float
    point: tuple[float, ...]
    eval_count: int
    refined: bool


def probe_grid(probe_m: int, d: int) -> np.ndarray:
    """Rows of ``Q_probe_m^d`` in lexicographic order (first axis slowest)."""
    check_point_budget((probe_m + 1) ** d, f"probe grid Q_{probe_m}^{d}")
    axis = np.arange(probe_m + 1, dtype=float) / probe_m
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, d)


def _scan(objective: Objective, X: np.ndarray) -> tuple[int, float]:
    best_i, best_v = -1, -np.inf
    for start in range(0, len(X), CHUNK_ROWS):
        vals = np.asarray(objective(X[start : start + CHUNK_ROWS]), dtype=float)
        i = int(np.argmax(vals))  # first maximum, i.e. lexicographically smallest
        if vals[i] > best_v:
            best_i, best_v = start + i, float(vals[i])
    return best_i, best_v


def refine(objective: Objective, x0: np.ndarray, v0: float, step: float) -> tuple[np.ndarray, float, int]:
    """Greedy axis moves of size ``step``, halving the step whenever no move helps."""
    x, v = np.array(x0, dtype=float), float(v0)
    d = len(x)
    evals = 0
    for _ in range(MAX_REFINE_ITERS):
        if step < REFINE_TOL:
            break
        cand = np.repeat(x[None, :], 2 * d, axis=0)
        for j in range(d):
            cand[2 * j, j] += step
            cand[2 * j + 1, j] -= step
        np.clip(cand, 0.0, 1.0, out=cand)
        vals = np.asarray(objective(cand), dtype=float)
        evals += len(cand)
        i = int(np.argmax(vals))
        if vals[i] > v + REFINE_TOL:
            x, v = cand[i], float(vals[i])
        else:
            step *= 0.5
    return x, v, evals


def maximize(objective: Objective, d: int, probe_m: int, refine_best: bool = True) -> SearchResult:
    X = probe_grid(probe_m, d)
    i, v = _scan(objective, X)
    x = X[i]
    evals = len(X)
    if refine_best:
        x, v, extra = refine(objective, x, v, 1.0 / probe_m)
        evals += extra
    return SearchResult(value=v, point=tuple(float(c) for c in x), eval_count=evals, refined=refine_best)
