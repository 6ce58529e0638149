"""Numerical laboratory for the contactomorphism group with the L2 metric.

Modules
-------
fields      grids, quadrature, spectral derivatives, field containers
contact     contact models, the contact operator and brackets
curvature   sectional curvature by two independent routes
geodesics   Euler-Arnold solver, characteristics, flow maps
jacobi      Jacobi fields and finite-difference probes of D exp
quanto      quantomorphisms and the Boothby-Wang quotient
cli         the ``cea`` experiment runner
"""

from .contact import (
    Circle,
    ContactModel,
    DarbouxBox,
    SphereHopf,
    TorusK,
    build_model,
    coadjoint,
    contact_bracket,
    contact_vector,
    reeb_derivative,
    structure_defects,
)
from .curvature import curvature_arnold, curvature_closed_form, curvature_sweep, sectional
from .errors import (
    BlowupDomainError,
    CapabilityError,
    ConfigError,
    DegeneratePlaneError,
    NumericalRejection,
    ResolutionError,
)
from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    integrate,
    l2_inner,
    l2_norm,
    partial_derivative,
    random_band_limited,
    read_field,
    write_field,
)
from .geodesics import blowup_time, flow_map_reconstruct, implicit_solution_evaluate, integrate_geodesic
from .jacobi import c1_failure_report, dexp_probe, jacobi_solve, kernel_direction
from .quanto import boothby_wang_project, submersion_isometry_check, totally_geodesic_defect
from .report import ExperimentReport, seed_for

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
