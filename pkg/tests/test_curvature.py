import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlab.contact import Circle, TorusK
from contactlab.curvature import (
    curvature_arnold,
    curvature_closed_form,
    curvature_sweep,
    sectional,
)
from contactlab.errors import DegeneratePlaneError, ResolutionError
from contactlab.fields import integrate, random_band_limited
from contactlab.contact import reeb_derivative

from conftest import sine

CIRCLE = Circle(128)
TORUS = TorusK((16, 16, 16))


@pytest.mark.parametrize("route", [curvature_arnold, curvature_closed_form])
def test_worked_values(route):
    s, c = sine(CIRCLE), sine(CIRCLE, np.cos)
    assert abs(route(CIRCLE, s, c) - 2 * np.pi) < 1e-10
    assert abs(route(CIRCLE, s, s)) < 1e-10
    assert abs(route(CIRCLE, CIRCLE.field(1.0), s) - np.pi) < 1e-10


def test_reeb_plane_reduction():
    g = random_band_limited(4, 2, TORUS.grid)
    ref = (TORUS.n + 2) ** 2 / 4 * integrate(reeb_derivative(TORUS, g) ** 2)
    assert abs(curvature_closed_form(TORUS, TORUS.field(1.0), g) - ref) <= 1e-10 * ref


def test_sectional_values():
    s, c = sine(CIRCLE), sine(CIRCLE, np.cos)
    assert abs(sectional(CIRCLE, s, c) - 2 / np.pi) < 1e-10
    assert abs(sectional(CIRCLE, CIRCLE.field(1.0), s) - 1 / (2 * np.pi)) < 1e-10
    assert abs(sectional(CIRCLE, s, s + c) - sectional(CIRCLE, s, c)) < 1e-10


def test_degenerate_plane():
    s = sine(CIRCLE)
    assert abs(curvature_closed_form(CIRCLE, s, 3.0 * s)) < 1e-12
    with pytest.raises(DegeneratePlaneError):
        sectional(CIRCLE, s, 3.0 * s)


def test_unresolved_input_rejected():
    with pytest.raises(ResolutionError):
        curvature_closed_form(CIRCLE, sine(CIRCLE, k=40), sine(CIRCLE))


@settings(max_examples=30, deadline=None)
@given(sf=st.integers(0, 2**31), sg=st.integers(0, 2**31))
def test_routes_agree_and_are_nonnegative(sf, sg):
    f = random_band_limited(sf, 2, TORUS.grid)
    g = random_band_limited(sg, 2, TORUS.grid)
    ca, cc = curvature_arnold(TORUS, f, g), curvature_closed_form(TORUS, f, g)
    scale = integrate(f * f) * integrate(g * g)
    assert abs(ca - cc) <= 1e-8 * (abs(cc) + scale)
    assert cc >= -1e-12 * scale


def test_sweep_report():
    rep = curvature_sweep(CIRCLE, 20, 4, seed=1)
    assert rep.metrics["negative_samples"] == 0
    assert rep.metrics["route_discrepancy_max"] <= 1e-8
    assert len(rep.rows) == 20
    again = curvature_sweep(CIRCLE, 20, 4, seed=1)
    assert again.to_csv() == rep.to_csv()


def test_empty_sweep():
    rep = curvature_sweep(CIRCLE, 0, 4, seed=1)
    assert rep.rows == [] and rep.metrics == {"count": 0}
