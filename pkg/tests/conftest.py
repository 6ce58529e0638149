import sys
import numpy as np
import pytest

from contactlab.contact import Circle, DarbouxBox, SphereHopf, TorusK


@pytest.fixture(scope="session")
def circle():
    return Circle(256)


@pytest.fixture(scope="session")
def torus():
    return TorusK((16, 16, 16))


@pytest.fixture(scope="session")
def sphere():
    return SphereHopf((16, 16, 16))


@pytest.fixture(scope="session")
def box():
    return DarbouxBox(1, (16, 8, 32))


def sine(model, fn=np.sin, k=1):
    """fn(k z) along the model's Reeb coordinate."""
    z = model.grid.coords[model.reeb_axis]
    return model.field(fn(k * z))


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[k])
