"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""
import math
import time

import mpmath
import numpy as np
import pytest

from cuberec.adversary import (
    analytic_radius,
    build_fooling,
    check_feasibility,
    estimate_K,
    farthest_point,
)
from cuberec.core import ClassKind, GridSpec, SampleTable, SmoothnessClass
from cuberec.designs import PointSet, build_recovery_design
from cuberec.envelopes import envelope_closed, envelope_recursive, n_app_upper
from cuberec.lab import BATTERY_IDS, SweepConfig, battery, run_sweep, verify_suite
from cuberec.lab.verify import report_json
from cuberec.recover import fit_taylor_models, max_sandwich, sup_error

pytestmark = pytest.mark.acceptance


def fit(fn, m, d, r):
    des = build_recovery_design(GridSpec(m, d), r)
    return fit_taylor_models(des, SampleTable.from_function(des.all_points, fn))


def probe_grid_max_distance(P: PointSet, probe_m: int) -> float:
    ax = np.linspace(0.0, 1.0, probe_m + 1)
    G = np.stack(np.meshgrid(*[ax] * P.d, indexing="ij"), axis=-1).reshape(-1, P.d)
    A = P.as_array()
    best = 0.0
    for start in range(0, len(G), 4096):
        chunk = G[start:start + 4096]
        D2 = ((chunk[:, None, :] - A[None, :, :]) ** 2).sum(axis=2).min(axis=1)
        best = max(best, float(np.sqrt(D2.max())))
    return best


def test_criterion_1_envelope_induction(record):
    t0 = time.perf_counter()
    worst = 0.0
    for d in range(1, 7):
        for r in (2, 4):
            for m in range(1, 9):
                worst = max(worst, envelope_recursive(d, r, m) / envelope_closed(d, r, m))
    value = envelope_closed(4, 2, 5)
    ok = worst <= 1 + 1e-12 and abs(value - math.e * 4 / 100) <= 1e-9 and abs(value - 0.108731) <= 1e-6
    dt = time.perf_counter() - t0
    record(1, ok, f"max recursive/closed = {worst:.6f} (<= 1+1e-12); E(4,2,5) = {value:.9f}; {dt:.2f}s")
    assert ok


def test_criterion_2_affine_exactness(record):
    t0 = time.perf_counter()
    worst = 0.0
    for d in range(1, 5):
        for r in (2, 3):
            for m in (1, 2):
                fn = battery("affine", r, d)
                worst = max(worst, sup_error(fit(fn, m, d, r), fn, 4 * m).sup_estimate)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10
    record(2, ok, f"max sup_error = {worst:.3e} (<= 1e-10); {dt:.2f}s")
    assert ok


def test_criterion_3_convergence_rate(record):
    t0 = time.perf_counter()
    slopes = {}
    for d, ms in ((1, (2, 4, 8, 16)), (2, (2, 4, 8))):
        for r in (1, 2, 3):
            fn = battery("sinsum", r, d)
            probe = 8 if d == 1 else 4
            errs = [sup_error(fit(fn, m, d, r), fn, probe * m).sup_estimate for m in ms]
            slopes[(d, r)] = float(np.polyfit(np.log(ms), np.log(errs), 1)[0])
    bad = {k: s for k, s in slopes.items() if not (-k[1] - 0.5 <= s <= -k[1] + 0.5)}
    dt = time.perf_counter() - t0
    text = ", ".join(f"d={d} r={r}: {s:.3f}" for (d, r), s in slopes.items())
    record(3, not bad, f"slopes {text} (each within r +/- 0.5); {dt:.1f}s")
    assert not bad, bad


def test_criterion_4_volume_radius(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240404)
    worst_ratio, failures = math.inf, []
    for i in range(100):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(1, 129))
        P = PointSet([tuple(rng.random(d)) for _ in range(n)], d=d)
        probe = 64 // d
        _, dist = farthest_point(P, probe)
        bound = math.sqrt(d) / (5 * len(P) ** (1 / d))
        oracle = probe_grid_max_distance(P, probe)
        worst_ratio = min(worst_ratio, dist / bound)
        if dist < bound or dist < oracle - 1e-15:
            failures.append((i, d, len(P), dist, bound, oracle))
    dt = time.perf_counter() - t0
    record(4, not failures, f"100 sets, min dist/bound = {worst_ratio:.3f}, dist >= probe-grid oracle in all; {dt:.1f}s")
    assert not failures, failures[:3]


def test_criterion_5_fooling_validity(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_center, worst_deriv, failures = 0.0, 0.0, []
    for i in range(100):
        r = int(rng.integers(1, 4))
        if i % 4 == 0:
            d = int(rng.integers(1, 4))
            P = build_recovery_design(GridSpec(int(rng.integers(1, 4)), d), r).all_points
        else:
            d = int(rng.integers(1, 5))
            P = PointSet([tuple(rng.random(d)) for _ in range(int(rng.integers(1, 65)))], d=d)
        K = estimate_K(r)
        inst = build_fooling(P, SmoothnessClass(r, d, ClassKind.DIRECTIONAL), K, 12 if d == 4 else 16)
        zero = bool(np.all(inst(P.as_array()) == 0.0))
        center = abs(float(inst(np.array([inst.z]))[0]) - inst.R**r / K)
        rep = check_feasibility(inst, n_tuples=10_000, seed=i)
        worst_center = max(worst_center, center)
        worst_deriv = max(worst_deriv, rep.max_derivative)
        if not (zero and center <= 1e-12 and rep.max_derivative <= 1 + 1e-3):
            failures.append((i, d, r, zero, center, rep.max_derivative))
    dt = time.perf_counter() - t0
    record(5, not failures, f"100 designs: zero on P in all, center err {worst_center:.1e} (<= 1e-12), "
                            f"max sampled derivative {worst_deriv:.5f} (<= 1.001); {dt:.1f}s")
    assert not failures, failures[:3]


def test_criterion_6_lower_le_upper(record):
    t0 = time.perf_counter()
    worst, failures = 0.0, []
    for d in (1, 2, 3):
        for r in (1, 2, 3):
            K = estimate_K(r)
            for m in (1, 2, 3, 4):
                des = build_recovery_design(GridSpec(m, d), r)
                lower = build_fooling(des.all_points, SmoothnessClass(r, d), K, 4 * m).peak
                for kind in (ClassKind.STANDARD, ClassKind.DIRECTIONAL):
                    upper = envelope_closed(d, r, m, kind)
                    worst = max(worst, lower / upper)
                    if lower > upper:
                        failures.append((d, r, m, kind.value, lower, upper))
    dt = time.perf_counter() - t0
    record(6, not failures, f"max lower/envelope = {worst:.4f} over both kinds (<= 1); {dt:.1f}s")
    assert not failures, failures[:3]


def test_criterion_7_optimization_sandwich(record):
    t0 = time.perf_counter()
    worst, count, failures = -math.inf, 0, []
    for fid in BATTERY_IDS:
        for d in (1, 2, 3):
            for r in (1, 2, 3):
                fn = battery(fid, r, d)
                for m in (1, 2, 3, 4):
                    rep = max_sandwich(fit(fn, m, d, r), fn, 4 * m)
                    count += 1
                    worst = max(worst, rep.gap - rep.sup_error)
                    if rep.gap > rep.sup_error + 2e-10:
                        failures.append((fid, d, r, m, rep))
    dt = time.perf_counter() - t0
    record(7, not failures, f"{count} cases, max (gap - sup_error) = {worst:.3e} (<= 2e-10); {dt:.1f}s")
    assert not failures, failures[:3]


def test_criterion_8_complexity_count(record):
    t0 = time.perf_counter()
    c = n_app_upper(0.1, 2, 2, "Standard")
    with mpmath.workdps(50):
        m = int(mpmath.ceil(mpmath.sqrt(mpmath.e) / 2 * mpmath.sqrt(2) * mpmath.mpf("0.1") ** mpmath.mpf(-0.5)))
        n = 3 ** (2 - 1) * (m + 1) ** 2
        env = mpmath.e * 2 / (2 * m) ** 2
        env_ok = env <= mpmath.mpf("0.1")
    ok = c.n_upper == 75 and c.m_used == 4 and (m, n) == (4, 75) and env_ok
    ok = ok and envelope_closed(2, 2, c.m_used) <= 0.1
    dt = time.perf_counter() - t0
    record(8, ok, f"n_upper = {c.n_upper}, m = {c.m_used}; high-precision m = {m}, n = {n}, "
                  f"envelope {float(env):.4f} <= 0.1; {dt:.3f}s")
    assert ok


def test_criterion_9_determinism(record, tmp_path):
    t0 = time.perf_counter()
    a = report_json(verify_suite(0))
    b = report_json(verify_suite(0))
    cfg = SweepConfig(d_list=[1, 2], r_list=[1, 2, 3], m_list=[1, 2, 4], seed=0,
                      output_path=str(tmp_path / "sweep.csv"))
    s1 = run_sweep(cfg)
    first = (tmp_path / "sweep.csv").read_bytes()
    s2 = run_sweep(cfg)
    second = (tmp_path / "sweep.csv").read_bytes()
    ok = a == b and s1 == s2 and first == second
    dt = time.perf_counter() - t0
    record(9, ok, f"verify_suite report ({len(a)} bytes) and sweep CSV ({len(first)} bytes) "
                  f"byte-identical across runs; {dt:.1f}s")
    assert ok
