import numpy as np
import pytest

from contactlab.contact import Circle, DarbouxBox, TorusK
from contactlab.errors import BlowupDomainError, CapabilityError
from contactlab.fields import l2_norm, random_band_limited, read_field
from contactlab.geodesics import (
    blowup_time,
    euler_arnold_rhs,
    flow_map_reconstruct,
    implicit_solution_evaluate,
    implicit_solution_on_grid,
    integrate_geodesic,
    lagrangian_momentum_defect,
)

from conftest import sine

CIRCLE = Circle(256)
BOX = DarbouxBox(1, (8, 8, 64))


def test_rhs_examples():
    a = CIRCLE.grid.coords[0]
    assert np.max(np.abs(euler_arnold_rhs(CIRCLE, sine(CIRCLE)).values + 3 * np.sin(a) * np.cos(a))) < 1e-12
    z = BOX.grid.coords[BOX.reeb_axis]
    assert np.max(np.abs(euler_arnold_rhs(BOX, sine(BOX)).values + 4 * np.sin(z) * np.cos(z))) < 1e-12
    assert np.max(np.abs(euler_arnold_rhs(BOX, BOX.field(2.0)).values)) == 0.0


def test_steady_state():
    tr = integrate_geodesic(CIRCLE, CIRCLE.field(0.7), 0.5, 0.01)
    assert all(np.max(np.abs(s.values - 0.7)) < 1e-14 for s in tr.states)
    assert not tr.blowup_flag


def test_conservation_sine():
    # at t = 0.9 t* the front needs 512 nodes to keep the truncated tail below 1e-8
    m = Circle(512)
    tr = integrate_geodesic(m, sine(m), 0.3, 1e-3)
    assert np.all(tr.invariant_drift() <= 1e-8)


def test_blowup_detection_sine():
    tr = integrate_geodesic(Circle(1024), sine(Circle(1024)), 0.5, 2.5e-4)
    assert tr.blowup_flag
    assert abs(tr.trigger_time - 1 / 3) <= 0.02 / 3


def test_blowup_time_examples():
    assert abs(blowup_time(CIRCLE, sine(CIRCLE)) - 1 / 3) < 1e-12
    assert blowup_time(CIRCLE, CIRCLE.field(1.0)) == np.inf
    assert abs(blowup_time(BOX, 2.0 * sine(BOX)) - 1 / 8) < 1e-12


def test_rk4_order():
    f0 = sine(CIRCLE)
    ref = implicit_solution_on_grid(CIRCLE, f0, 0.2)
    err = [
        l2_norm(integrate_geodesic(CIRCLE, f0, 0.2, dt, detect_blowup=False).final - ref)
        for dt in (0.004, 0.002)
    ]
    assert err[0] / err[1] >= 12


def test_invalid_arguments():
    with pytest.raises(ValueError):
        integrate_geodesic(CIRCLE, sine(CIRCLE), 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_geodesic(CIRCLE, sine(CIRCLE), 1.0, 0.1, scheme="euler")


def test_implicit_solution_trivial_cases():
    f0 = random_band_limited(1, 2, BOX.grid)
    pts = np.stack([c.ravel() for c in BOX.grid.coords], axis=1)[:50]
    v0 = implicit_solution_evaluate(BOX, f0, 0.0, pts)
    assert np.max(np.abs(v0 - f0.values.ravel()[:50])) < 1e-12
    vc = implicit_solution_evaluate(BOX, BOX.field(1.5), 3.0, pts)
    assert np.max(np.abs(vc - 1.5)) < 1e-14


def test_implicit_solution_matches_solver_n0():
    box0 = DarbouxBox(0, (256,))
    f0 = sine(box0)
    num = integrate_geodesic(box0, f0, 0.2, 1e-3).final
    ref = implicit_solution_on_grid(box0, f0, 0.2)
    assert np.max(np.abs(num.values - ref.values)) <= 1e-6


def test_implicit_solution_matches_solver_box():
    f0 = random_band_limited(2, 1, BOX.grid)
    t = 0.5 * blowup_time(BOX, f0)
    num = integrate_geodesic(BOX, f0, t, t / 400, detect_blowup=False).final
    ref = implicit_solution_on_grid(BOX, f0, t)
    assert l2_norm(num - ref) <= 1e-6 * l2_norm(ref)


def test_implicit_solution_past_crossing():
    with pytest.raises(BlowupDomainError):
        implicit_solution_evaluate(CIRCLE, sine(CIRCLE), 0.4, [[1.0]])


def test_implicit_solution_needs_reeb_coordinate():
    torus = TorusK((16, 16, 16))
    with pytest.raises(CapabilityError):
        implicit_solution_evaluate(torus, torus.field(1.0), 0.1, [[0.0, 0.0, 0.0]])


def test_flow_map_rigid_rotation():
    tr = integrate_geodesic(CIRCLE, CIRCLE.field(0.5), 0.4, 0.01, save_every=10)
    fm = flow_map_reconstruct(CIRCLE, tr)
    a = CIRCLE.grid.coords[0]
    assert np.max(np.abs(fm.positions[0] - a)) == 0.0
    for t, eta in zip(fm.times, fm.positions):
        assert np.max(np.abs(eta - (a + 0.5 * t))) < 1e-12


def test_flow_map_sine():
    tr = integrate_geodesic(CIRCLE, sine(CIRCLE), 0.2, 1e-3, save_every=50)
    fm = flow_map_reconstruct(CIRCLE, tr)
    assert np.all(fm.derivative(len(fm.times) - 1) > 0)
    assert lagrangian_momentum_defect(CIRCLE, tr, fm) <= 1e-6


def test_flow_map_circle_only():
    tr = integrate_geodesic(BOX, sine(BOX), 0.05, 1e-3)
    with pytest.raises(CapabilityError):
        flow_map_reconstruct(BOX, tr)


def test_export_frames(tmp_path):
    tr = integrate_geodesic(CIRCLE, sine(CIRCLE), 0.1, 0.01, save_every=5)
    out = tr.export(tmp_path)
    frames = sorted(out.glob("frame_*.ceaf"))
    assert len(frames) == len(tr.states)
    assert np.array_equal(read_field(frames[-1]).values, tr.final.values)
    assert (out / "manifest.json").exists()
