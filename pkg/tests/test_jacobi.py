import numpy as np
import pytest

from contactlab.contact import Circle, DarbouxBox, TorusK
from contactlab.errors import CapabilityError, NumericalRejection
from contactlab.fields import l2_norm
from contactlab.jacobi import (
    DerivativeProbe,
    c1_failure_report,
    dexp_probe,
    generic_direction,
    jacobi_solve,
    kernel_direction,
)

from conftest import sine

CIRCLE = Circle(128)
BOX = DarbouxBox(1, (8, 8, 64))


def test_zero_initial_velocity():
    sol = jacobi_solve(CIRCLE, 1.3, CIRCLE.field(0.0), 1.0)
    assert all(l2_norm(g) == 0.0 for g in sol.g_states)


def test_circle_closed_form():
    c = 0.7
    sol = jacobi_solve(CIRCLE, c, sine(CIRCLE), 1.0)
    a = CIRCLE.grid.coords[0]
    for t, g in zip(sol.times, sol.g_states):
        ref = (-np.cos(a) + np.cos(a - 2 * c * t)) / (2 * c)
        assert np.max(np.abs(g.values - ref)) < 1e-13
    assert sol.residual() <= 1e-8
    assert sol.initial_velocity_defect() <= 1e-6


def test_box_initial_velocity():
    c, w0 = kernel_direction(BOX, 2)
    sol = jacobi_solve(BOX, 0.3, w0, 1.0)
    assert sol.initial_velocity_defect() <= 1e-6
    assert sol.residual() <= 1e-6


def test_kernel_directions():
    c1, w1 = kernel_direction(CIRCLE, 1)
    assert abs(c1 - np.pi) < 1e-15
    assert np.max(np.abs(w1.values - np.sin(CIRCLE.grid.coords[0]))) < 1e-14
    c3, w3 = kernel_direction(BOX, 3)
    assert abs(c3 - 2 * np.pi / 9) < 1e-15
    ref = None
    for model, m in ((CIRCLE, 1), (CIRCLE, 2), (CIRCLE, 4), (BOX, 3)):
        c, w = kernel_direction(model, m)
        sol = jacobi_solve(model, c, w, 1.0, n_times=3)
        assert l2_norm(sol.g_states[-1]) <= 1e-10
        half = l2_norm(sol.g_states[1])
        ref = half if ref is None else ref
        assert half >= 0.1 * ref > 0


def test_invalid_inputs():
    with pytest.raises(ValueError):
        jacobi_solve(CIRCLE, 0.0, sine(CIRCLE), 1.0)
    with pytest.raises(ValueError):
        jacobi_solve(CIRCLE, 1.0, CIRCLE.field(1.0), 1.0)
    with pytest.raises(ValueError):
        kernel_direction(CIRCLE, 0)
    torus = TorusK((16, 16, 16))
    with pytest.raises(CapabilityError):
        kernel_direction(torus, 1)


def test_kernel_probe_slope():
    c, w = kernel_direction(CIRCLE, 1)
    p = dexp_probe(CIRCLE, c, w, [1e-2, 5e-3, 2.5e-3])
    assert abs(p.slope() - 1.0) <= 0.15


def test_generic_probe_stabilizes():
    p = dexp_probe(CIRCLE, np.pi, generic_direction(CIRCLE), [1e-2, 5e-3, 2.5e-3])
    assert p.spread() <= 0.05


def test_identity_at_zero():
    w = sine(CIRCLE, np.cos, 2)
    p = dexp_probe(CIRCLE, 0.0, w, [1e-2, 5e-3])
    assert abs(p.limit() - l2_norm(w)) <= 0.02 * l2_norm(w)


def test_probe_rejects_blowup():
    with pytest.raises(NumericalRejection, match="admissible"):
        dexp_probe(CIRCLE, 0.0, sine(CIRCLE), [1.0, 0.5])
    with pytest.raises(ValueError):
        dexp_probe(CIRCLE, 0.0, sine(CIRCLE), [1e-3, 1e-2])


def test_probe_single_epsilon():
    p = DerivativeProbe(1.0, CIRCLE.field(1.0), np.array([1e-2]), np.array([0.3]))
    assert p.slope() is None
    assert p.limit() == 0.3


def test_failure_report_small():
    rep = c1_failure_report(CIRCLE, [1], [1e-2])
    assert rep.metrics["m=1"]["kernel_slope"] == "insufficient data"
    assert rep.flags["kernel_slopes"] is False
    empty = c1_failure_report(CIRCLE, [], [1e-2])
    assert empty.rows == [] and empty.metrics == {"count": 0}


def test_failure_report_degeneracies():
    rep = c1_failure_report(CIRCLE, [1, 2, 4], [1e-2, 5e-3, 2.5e-3])
    cs = [rep.metrics[f"m={m}"]["c_m"] for m in (1, 2, 4)]
    assert np.allclose(cs, [np.pi, np.pi / 2, np.pi / 4])
    assert rep.passed
