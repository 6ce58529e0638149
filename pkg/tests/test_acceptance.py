"""Acceptance criteria 1-12, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from contactlab.contact import (
    Circle,
    DarbouxBox,
    SphereHopf,
    TorusK,
    contact_condition_defect,
    divergence_defect,
    structure_defects,
)
from contactlab.curvature import curvature_arnold, curvature_closed_form, sectional
from contactlab.fields import l2_inner, l2_norm, random_band_limited
from contactlab.geodesics import blowup_time, implicit_solution_on_grid, integrate_geodesic
from contactlab.jacobi import c1_failure_report, dexp_probe, generic_direction, jacobi_solve, kernel_direction
from contactlab.quanto import (
    random_quantomorphism,
    submersion_isometry_check,
    totally_geodesic_defect,
    weak_totally_geodesic_defect,
)
from contactlab.report import seed_for

RESULTS: dict[int, str] = {}
ROOT_SEED = 20240601


def record(k: int, ok: bool, detail: str) -> bool:
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    return ok


# --- 1, 2: curvature sweeps -------------------------------------------------

SWEEPS = {"circle": (lambda: Circle(256), 8), "torus_k": (lambda: TorusK((32, 32, 32)), 3)}


@lru_cache(maxsize=None)
def curvature_pairs(name: str):
    make, max_freq = SWEEPS[name]
    model = make()
    t0 = time.perf_counter()
    out = []
    for i in range(100):
        f = random_band_limited(seed_for(ROOT_SEED, 1, i, 0), max_freq, model.grid)
        g = random_band_limited(seed_for(ROOT_SEED, 1, i, 1), max_freq, model.grid)
        scale = l2_inner(f, f) * l2_inner(g, g)
        out.append((curvature_arnold(model, f, g), curvature_closed_form(model, f, g), scale))
    return np.array(out), time.perf_counter() - t0


def test_criterion_01_nonnegative_curvature():
    worst_closed, worst_arnold, runtime = np.inf, np.inf, 0.0
    for name in SWEEPS:
        data, dt = curvature_pairs(name)
        runtime += dt
        worst_closed = min(worst_closed, float(np.min(data[:, 1] / data[:, 2])))
        worst_arnold = min(worst_arnold, float(np.min(data[:, 0] / data[:, 2])))
    ok = worst_closed >= -1e-12 and worst_arnold >= -1e-8 and runtime <= 120
    assert record(
        1,
        ok,
        f"min C_closed/(|f|^2|g|^2) = {worst_closed:.3e}, min C_arnold/(..) = {worst_arnold:.3e}, "
        f"200 pairs in {runtime:.1f}s",
    )


def test_criterion_02_route_equivalence():
    worst = 0.0
    for name in SWEEPS:
        data, _ = curvature_pairs(name)
        worst = max(worst, float(np.max(np.abs(data[:, 0] - data[:, 1]) / np.abs(data[:, 1]))))
    assert record(2, worst <= 1e-8, f"max |C_arnold - C_closed| / |C_closed| = {worst:.3e}")


# --- 3: worked values -------------------------------------------------------


def test_criterion_03_worked_values():
    m = Circle(256)
    a = m.grid.coords[0]
    s, c = m.field(np.sin(a)), m.field(np.cos(a))
    errs = [
        abs(curvature_closed_form(m, s, c) - 2 * np.pi),
        abs(curvature_arnold(m, s, c) - 2 * np.pi),
        abs(sectional(m, s, c) - 2 / np.pi),
    ]
    assert record(3, max(errs) <= 1e-8, f"errors C = {errs[0]:.1e} / {errs[1]:.1e}, K = {errs[2]:.1e}")


# --- 4: conservation --------------------------------------------------------


def test_criterion_04_conservation():
    worst = {"circle": 0.0, "darboux_box": 0.0}
    for name, model in (("circle", Circle(1024)), ("darboux_box", DarbouxBox(1, (8, 8, 1024)))):
        for i in range(10):
            f0 = random_band_limited(seed_for(ROOT_SEED, 4, i), 2, model.grid)
            t_end = 0.8 * blowup_time(model, f0)
            tr = integrate_geodesic(model, f0, t_end, t_end / 1000, save_every=50)
            worst[name] = max(worst[name], float(np.max(tr.invariant_drift())))
    ok = max(worst.values()) <= 1e-8
    assert record(4, ok, f"max relative drift to 0.8 t*: circle {worst['circle']:.2e}, box {worst['darboux_box']:.2e}")


# --- 5: characteristics -----------------------------------------------------


def test_criterion_05_characteristics():
    worst = {}
    for name, model in (("circle", Circle(256)), ("darboux_box", DarbouxBox(1, (64, 8, 64)))):
        worst[name] = 0.0
        for i in range(10):
            f0 = random_band_limited(seed_for(ROOT_SEED, 5, i), 1, model.grid)
            t = 0.5 * blowup_time(model, f0)
            num = integrate_geodesic(model, f0, t, t / 400, save_every=10**9, detect_blowup=False).final
            ref = implicit_solution_on_grid(model, f0, t)
            worst[name] = max(worst[name], l2_norm(num - ref) / l2_norm(ref))
    ok = max(worst.values()) <= 1e-6
    assert record(5, ok, f"max relative L2 gap at t*/2: circle {worst['circle']:.2e}, box {worst['darboux_box']:.2e}")


# --- 6: blowup --------------------------------------------------------------


def test_criterion_06_blowup():
    m = Circle(1024)
    tr = integrate_geodesic(m, m.field(np.sin(m.grid.coords[0])), 0.5, 2.5e-4)
    rel = abs(tr.trigger_time - 1 / 3) * 3 if tr.blowup_flag else np.inf
    assert record(
        6,
        tr.blowup_flag and rel <= 0.02,
        f"trigger at t = {tr.trigger_time} ({tr.trigger_reason}), offset {100 * rel:.2f}% from 1/3",
    )


# --- 7: Jacobi kernel -------------------------------------------------------


def test_criterion_07_jacobi_kernel():
    m = Circle(256)
    ends, halves = [], []
    for k in (1, 2, 4):
        c, w0 = kernel_direction(m, k)
        sol = jacobi_solve(m, c, w0, 1.0, n_times=3)
        ends.append(l2_norm(sol.g_states[-1]))
        halves.append(l2_norm(sol.g_states[1]))
    ok = max(ends) <= 1e-10 and min(halves) >= 0.1 * halves[0] > 0
    assert record(7, ok, f"max |g(1)| = {max(ends):.1e}, min |g(1/2)| = {min(halves):.3f}")


# --- 8: exp is not C^1 ------------------------------------------------------


def test_criterion_08_exp_not_c1():
    t0 = time.perf_counter()
    rep = c1_failure_report(Circle(256), [1, 2, 4, 8, 16, 32], [1e-2, 5e-3, 2.5e-3], c_threshold=0.1)
    runtime = time.perf_counter() - t0
    slopes = [v["kernel_slope"] for k, v in rep.metrics.items() if k.startswith("m=")]
    spreads = [v["generic_spread"] for k, v in rep.metrics.items() if k.startswith("m=")]
    ok = rep.flags["kernel_slopes"] and rep.flags["generic_stable"] and rep.flags["c_m_to_zero"] and runtime <= 300
    assert record(
        8,
        ok,
        f"min kernel slope {min(slopes):.3f}, max generic spread {100 * max(spreads):.3f}%, "
        f"c_32 = {rep.metrics['c_m_min']:.4f}, {runtime:.0f}s",
    )


# --- 9: D exp(0) = identity -------------------------------------------------


def test_criterion_09_dexp_identity():
    m = Circle(256)
    a = m.grid.coords[0]
    directions = [
        m.field(np.sin(a)),
        m.field(np.cos(2 * a)),
        generic_direction(m),
        random_band_limited(seed_for(ROOT_SEED, 9, 0), 2, m.grid),
        random_band_limited(seed_for(ROOT_SEED, 9, 1), 3, m.grid),
    ]
    errs = []
    for w in directions:
        p = dexp_probe(m, 0.0, w, [1e-2, 5e-3, 2.5e-3])
        errs.append(abs(p.limit() - l2_norm(w)) / l2_norm(w))
    assert record(9, max(errs) <= 0.02, f"max |lim ratio - |w|| / |w| = {max(errs):.2e} over 5 directions")


# --- 10: totally geodesic ---------------------------------------------------


def test_criterion_10_totally_geodesic():
    worst = {}
    for model, mf in ((Circle(256), 4), (TorusK((32, 32, 32)), 3), (SphereHopf((24, 32, 32)), 3)):
        w = 0.0
        for i in range(100):
            f = random_quantomorphism(model, seed_for(ROOT_SEED, 10, i, 0), mf)
            g = random_band_limited(seed_for(ROOT_SEED, 10, i, 1), mf, model.grid)
            w = max(w, totally_geodesic_defect(model, f, g), weak_totally_geodesic_defect(model, f, g))
        worst[model.name] = w
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert record(10, max(worst.values()) <= 1e-8, f"max defect over 100 pairs: {detail}")


# --- 11: Boothby-Wang submersion --------------------------------------------


def test_criterion_11_submersion():
    m = SphereHopf((24, 32, 32))
    fields = [m.field(np.cos(2 * m.grid.coords[0]))]
    fields += [random_quantomorphism(m, seed_for(ROOT_SEED, 11, i), 3, mean_zero=True) for i in range(9)]
    rep = submersion_isometry_check(m, fields)
    hd = max(r["hamiltonian_defect"] for r in rep.rows)
    const_err = abs(rep.fitted_constant - 2 * np.pi)
    ok = hd <= 1e-8 and rep.ratio_spread <= 1e-6 and const_err <= 1e-6
    assert record(
        11,
        ok,
        f"Hamiltonian defect {hd:.1e}, ratio spread {rep.ratio_spread:.1e}, "
        f"constant {rep.fitted_constant:.12f} (2 pi error {const_err:.1e})",
    )


# --- 12: structure ----------------------------------------------------------


def test_criterion_12_structure():
    worst = {}
    for model in (Circle(256), TorusK((32, 32, 32)), SphereHopf((24, 32, 32))):
        d = dict(structure_defects(model, seed=12))
        f = random_band_limited(seed_for(ROOT_SEED, 12), 3, model.grid)
        d["divergence"] = divergence_defect(model, f)
        d["contact_condition"] = contact_condition_defect(model, f)
        worst[model.name] = max(d.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert record(12, max(worst.values()) <= 1e-8, f"max identity residual: {detail}")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
