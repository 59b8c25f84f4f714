"""Seeded invariant suite: every check returns pass/fail data with counterexamples.

Each check returns plain data; failures never raise. ``verify_suite`` output
depends only on the seed, so two runs with the same seed serialize to the
same bytes.
"""
from __future__ import annotations

import json
import math
from typing import Callable

import numpy as np

from ..adversary import (
    analytic_radius,
    build_fooling,
    bump_profile,
    check_feasibility,
    estimate_K,
    farthest_point,
    radial_bump,
)
from ..core import (
    ClassKind,
    CubeRecError,
    GridSpec,
    MultiIndex,
    SampleTable,
    SmoothnessClass,
    enumerate_multiindices,
    nearest_grid_point,
)
from ..designs import PointSet, build_grid, build_recovery_design, expand_cloud, proof_schedule
from ..envelopes import envelope_closed, envelope_recursive, n_app_upper
from ..recover import estimate_derivative, fit_taylor_models, max_sandwich, sup_error
from .battery import BATTERY_IDS, battery
from .sweep import SweepConfig, run_sweep


class PreconditionViolation(CubeRecError):
    """The hypothesis of a checked implication does not hold for the given instance."""

    def __init__(self, message: str, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


def verify_mean_value_fact(f, M: PointSet, h: float, j: int) -> bool:
    """Check ``|f| <= h^2 on M[h]  =>  |df/dx_j| <= 3h on M`` for one instance.

    ``f`` must be vectorized over rows and expose an analytic ``gradient``.
    Raises :class:`PreconditionViolation` when the hypothesis fails, which is
    distinct from a failed conclusion (``False``).
    """
    cloud = expand_cloud(M, h).as_array()
    vals = np.abs(np.asarray(f(cloud), dtype=float))
    i = int(np.argmax(vals))
    if vals[i] > h * h:
        raise PreconditionViolation(
            f"|f| = {vals[i]:.6g} exceeds h^2 = {h * h:.6g} on the cloud",
            point=tuple(cloud[i]), value=float(vals[i]),
        )
    grads = np.asarray(f.gradient(M.as_array()), dtype=float)[:, j]
    return bool(np.all(np.abs(grads) <= 3 * h))


# --- individual checks -------------------------------------------------------

Check = Callable[[np.random.Generator], dict]


def _result(passed: bool, detail: dict | None = None, counterexample=None) -> dict:
    return {"passed": bool(passed), "detail": detail or {}, "counterexample": counterexample}


def check_multiindex_count(rng):
    for d in range(1, 9):
        for k in range(7):
            n = len(enumerate_multiindices(d, k))
            if n != math.comb(d + k, d):
                return _result(False, counterexample={"d": d, "k": k, "count": n})
    return _result(True, {"cases": 8 * 7})


def check_nearest_grid(rng):
    worst = 0.0
    for _ in range(500):
        d = int(rng.integers(1, 5))
        m = int(rng.integers(1, 9))
        x = tuple(rng.random(d))
        g = GridSpec(m, d)
        y = nearest_grid_point(x, g)
        shift = max(abs(a - b) for a, b in zip(x, y))
        worst = max(worst, shift * m)
        if nearest_grid_point(y, g) != y or shift > 1 / (2 * m) + 1e-15:
            return _result(False, counterexample={"x": list(x), "m": m, "y": list(y)})
    return _result(True, {"max_shift_times_m": worst})


def check_sample_table(rng):
    table = SampleTable("roundtrip")
    pts = [tuple(rng.random(3)) for _ in range(200)]
    vals = rng.standard_normal(200)
    for p, v in zip(pts, vals):
        table.insert(p, v)
    bad = [i for i, (p, v) in enumerate(zip(pts, vals)) if table[p] != v]
    return _result(not bad, {"n": len(table)}, {"index": bad[0]} if bad else None)


def check_design_cardinality(rng):
    for m in range(1, 5):
        for d in range(1, 5):
            for r in range(1, 5):
                des = build_recovery_design(GridSpec(m, d), r)
                if des.n_points > des.cost_cap:
                    return _result(False, counterexample={"m": m, "d": d, "r": r, "n": des.n_points})
    return _result(True, {"cases": 64})


def check_cloud_steps(rng):
    for _ in range(50):
        d = int(rng.integers(1, 5))
        h = float(rng.uniform(0.01, 0.5))
        M = PointSet([tuple(rng.random(d)) for _ in range(int(rng.integers(1, 8)))], d=d)
        out = expand_cloud(M, h)
        if any(p not in out for p in M) or len(out) > (d + 1) * len(M):
            return _result(False, counterexample={"d": d, "h": h})
        parents = M.points
        for p in out:
            if p in M:
                continue
            ok = False
            for x in parents:
                diff = [j for j in range(d) if p[j] != x[j]]
                if len(diff) == 1 and p[diff[0]] in (x[diff[0]] + h, x[diff[0]] - h):
                    ok = True
                    break
            if not ok:
                return _result(False, counterexample={"point": list(p), "h": h})
    return _result(True, {"cases": 50})


def check_schedule(rng):
    worst = 0.0
    for delta in np.linspace(0.05, 0.95, 19):
        steps = proof_schedule(float(delta), 6).steps
        for i in range(1, len(steps)):
            rel = abs(3 * steps[i] - steps[i - 1] ** 2) / steps[i - 1] ** 2
            worst = max(worst, rel)
    return _result(worst <= 1e-12, {"max_rel_error": worst})


def check_design_in_cube(rng):
    for m in range(1, 5):
        for d in range(1, 4):
            for r in range(1, 5):
                A = build_recovery_design(GridSpec(m, d), r).all_points.as_array()
                if A.min() < 0.0 or A.max() > 1.0:
                    return _result(False, counterexample={"m": m, "d": d, "r": r})
    return _result(True)


def _fit(fn, m, d, r):
    des = build_recovery_design(GridSpec(m, d), r)
    return fit_taylor_models(des, SampleTable.from_function(des.all_points, fn))


class _Affine:
    def __init__(self, a, b):
        self.a, self.b = a, np.asarray(b)

    def __call__(self, X):
        return self.a + np.atleast_2d(X) @ self.b


def check_affine_exactness(rng):
    worst = 0.0
    for d in range(1, 5):
        for r in (2, 3):
            for m in (1, 2):
                f = _Affine(float(rng.uniform(-0.5, 0.5)), rng.uniform(-0.5, 0.5, d))
                err = sup_error(_fit(f, m, d, r), f, 4 * m).sup_estimate
                worst = max(worst, err)
                if err > 1e-10:
                    return _result(False, {"max_error": worst}, {"d": d, "r": r, "m": m, "error": err})
    return _result(True, {"max_error": worst})


def check_grid_interpolation(rng):
    for fid in BATTERY_IDS:
        for d, r, m in ((1, 3, 4), (2, 2, 3), (3, 3, 2)):
            fn = battery(fid, r, d)
            model = _fit(fn, m, d, r)
            Y = build_grid(GridSpec(m, d)).as_array()
            if not np.array_equal(model(Y), fn(Y)):
                return _result(False, counterexample={"function": fid, "d": d, "r": r, "m": m})
    return _result(True)


def convergence_slopes() -> dict:
    slopes = {}
    for d, ms in ((1, (2, 4, 8, 16)), (2, (2, 4, 8))):
        for r in (1, 2, 3):
            fn = battery("sinsum", r, d)
            errs = [sup_error(_fit(fn, m, d, r), fn, 8 * m if d == 1 else 4 * m).sup_estimate for m in ms]
            slopes[f"d={d},r={r}"] = float(np.polyfit(np.log(ms), np.log(errs), 1)[0])
    return slopes


def check_convergence_rate(rng):
    slopes = convergence_slopes()
    bad = {k: s for k, s in slopes.items() if abs(s + int(k.split("r=")[1])) > 0.5}
    return _result(not bad, {"slopes": slopes}, bad or None)


def sandwich_gap(fn, m, d, r) -> tuple[float, float]:
    rep = max_sandwich(_fit(fn, m, d, r), fn, 4 * m)
    return rep.gap, rep.sup_error


def check_optimization_sandwich(rng):
    count = 0
    for fid in BATTERY_IDS:
        for d in (1, 2, 3):
            for r in (1, 2, 3):
                for m in (1, 2, 4):
                    gap, err = sandwich_gap(battery(fid, r, d), m, d, r)
                    count += 1
                    if gap > err + 2e-10:
                        return _result(False, counterexample={"function": fid, "d": d, "r": r, "m": m,
                                                              "gap": gap, "sup_error": err})
    return _result(True, {"cases": count})


def check_derivative_bias(rng):
    f = lambda X: 0.5 * np.atleast_2d(X)[:, 0] ** 2
    worst = 0.0
    for m in (1, 2, 4, 8):
        des = build_recovery_design(GridSpec(m, 1), 2)
        table = SampleTable.from_function(des.all_points, f)
        for y, sigma in zip(des.grid_points, des.orientations):
            est = estimate_derivative(table, y, MultiIndex((1,)), des.h, sigma)
            excess = abs(est - y[0]) - des.h / 2
            worst = max(worst, excess)
            if excess > 1e-12:
                return _result(False, counterexample={"m": m, "y": list(y), "estimate": est})
    return _result(True, {"max_excess": worst})


def check_bump_support(rng):
    X = rng.standard_normal((2000, 3))
    X *= (1 + rng.random(2000))[:, None] / np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(radial_bump(X) != 0.0):
        return _result(False, counterexample="nonzero bump outside the unit ball")
    for _ in range(20):
        d = int(rng.integers(1, 4))
        P = PointSet([tuple(rng.random(d)) for _ in range(int(rng.integers(1, 30)))], d=d)
        inst = build_fooling(P, SmoothnessClass(2, d, ClassKind.DIRECTIONAL), estimate_K(2), 16)
        if np.any(inst(P.as_array()) != 0.0):
            return _result(False, counterexample={"d": d, "n": len(P)})
    return _result(True)


def seam_differences(order: int, t0: float, steps=(0.1, 0.05, 0.025, 0.0125)) -> list[float]:
    out = []
    for s in steps:
        v = sum((-1) ** i * math.comb(order, i) * bump_profile(t0 + (order / 2 - i) * s) for i in range(order + 1))
        out.append(abs(v) / s**order)
    return out


def check_bump_seams(rng):
    detail = {}
    for t0 in (0.0, 1.0):
        for k in range(1, 5):
            seq = seam_differences(k, t0)
            detail[f"t={t0},k={k}"] = seq[-1]
            if not (seq[-1] < 1e-6 and seq[-1] <= seq[-2] <= seq[-3]):
                return _result(False, detail, {"t": t0, "order": k, "sequence": seq})
    return _result(True, detail)


def random_design(rng, d_max: int = 3, n_max: int = 64) -> PointSet:
    d = int(rng.integers(1, d_max + 1))
    n = int(rng.integers(1, n_max + 1))
    return PointSet([tuple(rng.random(d)) for _ in range(n)], d=d)


def check_fooling_feasibility(rng):
    worst = 0.0
    for i in range(20):
        P = random_design(rng)
        r = int(rng.integers(1, 4))
        inst = build_fooling(P, SmoothnessClass(r, P.d, ClassKind.DIRECTIONAL), estimate_K(r), 16)
        rep = check_feasibility(inst, n_tuples=10_000, seed=i)
        worst = max(worst, rep.max_derivative)
        if not rep.feasible:
            return _result(False, {"max_derivative": worst}, {"design": P.to_json(), "r": r})
    return _result(True, {"max_derivative": worst})


def check_volume_bound(rng):
    worst = math.inf
    for _ in range(100):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(1, 129))
        P = PointSet([tuple(rng.random(d)) for _ in range(n)], d=d)
        _, dist = farthest_point(P, 64 // d)
        bound = analytic_radius(len(P), d)
        worst = min(worst, dist / bound)
        if dist < bound:
            return _result(False, counterexample={"d": d, "n": len(P), "dist": dist, "bound": bound})
    return _result(True, {"min_ratio": worst})


def lower_vs_upper(d: int, r: int, m: int) -> tuple[float, float, float]:
    des = build_recovery_design(GridSpec(m, d), r)
    inst = build_fooling(des.all_points, SmoothnessClass(r, d, ClassKind.DIRECTIONAL), estimate_K(r), 4 * m)
    return inst.peak, envelope_closed(d, r, m, ClassKind.DIRECTIONAL), envelope_closed(d, r, m, ClassKind.STANDARD)


def check_lower_le_upper(rng):
    for d in (1, 2, 3):
        for r in (1, 2, 3):
            for m in (1, 2, 3, 4):
                lower, env_dir, env_std = lower_vs_upper(d, r, m)
                if lower > min(env_dir, env_std):
                    return _result(False, counterexample={"d": d, "r": r, "m": m, "lower": lower, "envelope": env_dir})
    return _result(True, {"cases": 36})


def check_recursive_le_closed(rng):
    for d in range(1, 7):
        for r in (2, 4):
            for m in range(1, 9):
                if envelope_recursive(d, r, m) > envelope_closed(d, r, m) * (1 + 1e-12):
                    return _result(False, counterexample={"d": d, "r": r, "m": m})
    return _result(True)


def check_directional_le_standard(rng):
    for d in range(1, 7):
        for r in range(0, 7, 2):
            for m in range(1, 9):
                if envelope_closed(d, r, m, "Directional") > envelope_closed(d, r, m, "Standard"):
                    return _result(False, counterexample={"d": d, "r": r, "m": m})
    return _result(True)


def check_odd_consistency(rng):
    # the odd-r bound is d/(2m) times the even-r formula e d^(k/2)/(2m)^k at k = r-1,
    # which at k = 0 is e rather than the trivial bound 1
    worst = 0.0
    for d in range(1, 7):
        for r in (1, 3, 5):
            for m in range(1, 9):
                even = math.e * d ** ((r - 1) / 2) / (2 * m) ** (r - 1)
                lhs = envelope_closed(d, r, m)
                rhs = d / (2 * m) * even
                worst = max(worst, abs(lhs - rhs) / rhs)
                if r >= 3:
                    worst = max(worst, abs(even - envelope_closed(d, r - 1, m)) / even)
    return _result(worst <= 1e-12, {"max_rel_error": worst})


def check_dimension_shape(rng):
    worst = 0.0
    for r in (2, 4, 6):
        for m in range(1, 9):
            for d in range(1, 7):
                ratio = envelope_closed(d, r, m) / envelope_closed(1, r, m)
                worst = max(worst, abs(ratio - d ** (r // 2)) / d ** (r // 2))
    return _result(worst <= 1e-12, {"max_rel_error": worst})


def check_monotonicity(rng):
    for kind in ("Standard", "Directional"):
        for r in range(1, 6):
            for d in range(1, 7):
                for m in range(1, 9):
                    for fn in (envelope_closed, envelope_recursive):
                        v = fn(d, r, m, kind)
                        if fn(d, r, m + 1, kind) >= v or fn(d + 1, r, m, kind) < v:
                            return _result(False, counterexample={"kind": kind, "r": r, "d": d, "m": m,
                                                                  "source": fn.__name__})
    return _result(True)


def check_count_arithmetic(rng):
    c = n_app_upper(0.1, 2, 2, "Standard")
    env = envelope_closed(2, 2, c.m_used)
    return _result(c.n_upper == 75 and c.m_used == 4 and env <= 0.1, {"m": c.m_used, "n": c.n_upper, "envelope": env})


def membership_spot_check(fn, rng, n: int = 200, step: float = 1e-3) -> float:
    """Largest finite-difference estimate over ``n`` random derivatives of order ``<= r``."""
    from ..adversary import directional_fd

    d, r = fn.d, fn.r
    worst = float(np.max(np.abs(fn(rng.random((n, d))))))
    if r == 0:
        return worst
    for _ in range(n):
        ell = int(rng.integers(1, r + 1))
        if rng.random() < 0.5:
            thetas = np.eye(d)[rng.integers(0, d, size=ell)]
        else:
            thetas = rng.standard_normal((ell, d))
            thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
        x = rng.uniform(step * ell, 1 - step * ell, (1, d))
        worst = max(worst, abs(float(directional_fd(fn, x, thetas, step)[0])))
    return worst


def check_battery_membership(rng):
    detail = {}
    for fid in BATTERY_IDS:
        for d in (1, 2, 3):
            for r in (1, 2, 3):
                fn = battery(fid, r, d)
                worst = membership_spot_check(fn, rng)
                detail[f"{fid},d={d},r={r}"] = worst
                if worst > 1 + 1e-3 or fn.certified_max > 1:
                    return _result(False, counterexample={"function": fid, "d": d, "r": r, "value": worst})
    return _result(True, {"max": max(detail.values())})


def _small_sweep(seed: int) -> SweepConfig:
    return SweepConfig(d_list=[1, 2], r_list=[1, 2], m_list=[1, 2], probe_m=8, seed=seed, output_path="")


def check_sweep_cost(rng):
    import csv, io

    text = run_sweep(_small_sweep(0), write=False)
    for row in csv.DictReader(io.StringIO(text)):
        d, r, m = int(row["d"]), int(row["r"]), int(row["m"])
        if int(row["n_points"]) > (d + 1) ** (r - 1) * (m + 1) ** d:
            return _result(False, counterexample=row)
    return _result(True)


def check_sweep_determinism(rng):
    a = run_sweep(_small_sweep(3), write=False)
    b = run_sweep(_small_sweep(3), write=False)
    return _result(a == b, {"bytes": len(a)})


class _CosInstance:
    """``h^2 cos(x_1 - a)``: obeys the hypothesis everywhere and has small derivatives."""

    def __init__(self, h, a):
        self.h, self.a = h, a

    def __call__(self, X):
        return self.h**2 * np.cos(np.atleast_2d(X)[:, 0] - self.a)

    def gradient(self, X):
        X = np.atleast_2d(X)
        g = np.zeros_like(X)
        g[:, 0] = -self.h**2 * np.sin(X[:, 0] - self.a)
        return g


def check_mean_value_fact(rng):
    for _ in range(30):
        d = int(rng.integers(1, 4))
        h = float(rng.uniform(0.01, 0.5))
        M = PointSet([tuple(rng.random(d)) for _ in range(5)], d=d)
        f = _CosInstance(h, float(rng.uniform(0, 1)))
        for j in range(d):
            if not verify_mean_value_fact(f, M, h, j):
                return _result(False, counterexample={"d": d, "h": h, "j": j})
    return _result(True, {"cases": 30})


CHECKS: list[tuple[str, str, Check]] = [
    ("core", "multiindex_count", check_multiindex_count),
    ("core", "nearest_grid_idempotent", check_nearest_grid),
    ("core", "sample_table_roundtrip", check_sample_table),
    ("designs", "design_cardinality", check_design_cardinality),
    ("designs", "cloud_expansion_steps", check_cloud_steps),
    ("designs", "schedule_squares", check_schedule),
    ("designs", "design_points_in_cube", check_design_in_cube),
    ("recover", "affine_exactness", check_affine_exactness),
    ("recover", "grid_interpolation", check_grid_interpolation),
    ("recover", "convergence_rate", check_convergence_rate),
    ("recover", "optimization_sandwich", check_optimization_sandwich),
    ("recover", "derivative_bias", check_derivative_bias),
    ("adversary", "bump_support", check_bump_support),
    ("adversary", "bump_seams", check_bump_seams),
    ("adversary", "fooling_feasibility", check_fooling_feasibility),
    ("adversary", "volume_bound", check_volume_bound),
    ("adversary", "lower_le_upper", check_lower_le_upper),
    ("envelopes", "recursive_le_closed", check_recursive_le_closed),
    ("envelopes", "directional_le_standard", check_directional_le_standard),
    ("envelopes", "odd_consistency", check_odd_consistency),
    ("envelopes", "dimension_shape", check_dimension_shape),
    ("envelopes", "monotonicity", check_monotonicity),
    ("envelopes", "count_arithmetic", check_count_arithmetic),
    ("lab", "battery_membership", check_battery_membership),
    ("lab", "sweep_cost_accounting", check_sweep_cost),
    ("lab", "sweep_determinism", check_sweep_determinism),
    ("lab", "mean_value_fact", check_mean_value_fact),
]


def verify_suite(seed: int = 0, only: list[str] | None = None) -> dict:
    entries = []
    for i, (module, name, fn) in enumerate(CHECKS):
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, i])
        try:
            res = fn(rng)
        except Exception as exc:  # failures are data
            res = _result(False, counterexample={"exception": f"{type(exc).__name__}: {exc}"})
        entries.append({"module": module, "name": name, **res})
    return {"seed": seed, "all_passed": all(e["passed"] for e in entries), "checks": entries}


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)
