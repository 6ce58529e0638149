"""Quantomorphisms: the Reeb-invariant stream functions.

The subalgebra consists of stream functions with ``E(f) = 0``.  On the Hopf
3-sphere the Reeb orbits are the Hopf circles, and invariant functions
descend to the quotient 2-sphere ``N`` with coordinates ``(eta, psi)``,
``psi = xi1 - xi2``, and area form ``omega = sin(2 eta) d eta ^ d psi``
(so that ``pi^* omega = d theta``).  Hamiltonian fields on ``N`` follow the
convention ``omega(., V_h) = dh``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contact import ContactModel, coadjoint, contact_bracket, contact_vector, reeb_derivative
from .errors import CapabilityError, NumericalRejection
from .fields import (
    GridSpec,
    ScalarField,
    hopf_polar_axis,
    integrate,
    l2_inner,
    l2_norm,
    partial_derivative,
    periodic_axis,
    random_band_limited,
)

MEMBERSHIP_TOL = 1e-10


def quantomorphism_defect(model: ContactModel, f: ScalarField) -> float:
    """||E(f)|| / ||f||; zero exactly on the quantomorphism subalgebra."""
    nf = l2_norm(f)
    if nf == 0.0:
        raise NumericalRejection("the zero field has no defined defect")
    return l2_norm(reeb_derivative(model, f)) / nf


def reeb_invariant_projection(model: ContactModel, g: ScalarField) -> ScalarField:
    """L2-orthogonal projection onto Reeb-invariant functions."""
    v = g.values
    if model.name == "circle":
        return ScalarField(g.grid, np.full(v.shape, v.mean()))
    if model.name == "torus_k":
        # Reeb lines are dense on almost every z-slice
        return ScalarField(g.grid, np.broadcast_to(v.mean(axis=(0, 1), keepdims=True), v.shape))
    if model.name == "sphere3_hopf":
        n1, n2 = g.grid.shape[1:]
        hat = np.fft.fft2(v, axes=(1, 2))
        k1 = np.fft.fftfreq(n1, d=1.0 / n1)[:, None]
        k2 = np.fft.fftfreq(n2, d=1.0 / n2)[None, :]
        keep = np.isclose(k1 + k2, 0.0)
        return ScalarField(g.grid, np.real(np.fft.ifft2(np.where(keep[None], hat, 0.0), axes=(1, 2))))
    raise CapabilityError(f"no invariant projection on {model.name}")


def random_quantomorphism(model: ContactModel, seed: int, max_freq: int, mean_zero: bool = False) -> ScalarField:
    """Seeded smooth Reeb-invariant stream function."""
    f = reeb_invariant_projection(model, random_band_limited(seed, max_freq, model.grid))
    if mean_zero:
        f = f - integrate(f) / model.grid.total_measure
    return f


def _require_member(model: ContactModel, f: ScalarField):
    d = quantomorphism_defect(model, f)
    if d > MEMBERSHIP_TOL:
        raise NumericalRejection(f"stream function is not Reeb invariant (defect {d:.2e})")


def totally_geodesic_defect(model: ContactModel, f: ScalarField, g: ScalarField) -> float:
    """|<ad*_u u, v>| / (||f||^2 ||v||) for u = S f tangent and v = S g orthogonal."""
    model._require_full("the totally-geodesic test")
    _require_member(model, f)
    gp = g - reeb_invariant_projection(model, g)
    ng = l2_norm(gp)
    if ng == 0.0:
        return 0.0
    return abs(l2_inner(coadjoint(model, f, f), gp)) / (l2_inner(f, f) * ng)


def weak_totally_geodesic_defect(model: ContactModel, f: ScalarField, g: ScalarField) -> float:
    """|int f {f, v} dmu| relative to int |f {f, v}| dmu.

    This is ``<u, ad_u v>`` evaluated directly by quadrature, so it vanishes
    only through integration by parts, unlike :func:`totally_geodesic_defect`.
    """
    model._require_full("the totally-geodesic test")
    _require_member(model, f)
    gp = g - reeb_invariant_projection(model, g)
    integrand = f * contact_bracket(model, f, gp)
    scale = integrate(integrand.map(np.abs))
    return abs(integrate(integrand)) / scale if scale > 0 else 0.0


# --- Boothby-Wang quotient of the Hopf sphere -------------------------------


class QuotientField(ScalarField):
    """Function on the Boothby-Wang quotient; ``hamiltonian`` marks mean-zero data."""

    __slots__ = ("hamiltonian",)

    def __init__(self, grid: GridSpec, values, hamiltonian: bool = False, scale: float | None = None):
        super().__init__(grid, values)
        if hamiltonian:
            m = integrate(self) / grid.total_measure
            ref = float(np.max(np.abs(self.values))) if scale is None else scale
            if abs(m) > 1e-10 * ref + 1e-300:
                raise NumericalRejection("Hamiltonians must have mean zero")
        object.__setattr__(self, "hamiltonian", hamiltonian)

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights


def _require_regular(model: ContactModel):
    if not model.is_regular:
        raise CapabilityError(f"{model.name} is not a regular contact manifold")
    n1, n2 = model.grid.shape[1:]
    if n1 != n2:
        raise CapabilityError("the quotient grid needs equal node counts along xi1 and xi2")


def quotient_grid(model: ContactModel) -> GridSpec:
    _require_regular(model)
    ne, n1, _ = model.grid.shape
    return GridSpec((hopf_polar_axis("eta", ne, parity_axes=(1, 1)), periodic_axis("psi", n1)))


def boothby_wang_project(model: ContactModel, f: ScalarField) -> QuotientField:
    """Mean-zero Hamiltonian h on N with f = h o pi (up to a constant)."""
    _require_regular(model)
    _require_member(model, f)
    q = quotient_grid(model)
    h = f.values[:, :, 0]  # xi2 = 0 slice: psi = xi1
    h = h - np.sum(q.weights * h) / q.total_measure
    return QuotientField(q, h, hamiltonian=True, scale=float(np.max(np.abs(f.values))))


def hamiltonian_field(h: ScalarField) -> np.ndarray:
    """Components (V^eta, V^psi) of V_h with omega(., V_h) = dh."""
    sigma = np.sin(2 * h.grid.coords[0])
    h_eta = partial_derivative(h, 0).values
    h_psi = partial_derivative(h, 1).values
    return np.stack([-h_psi / sigma, h_eta / sigma])


def pushforward(model: ContactModel, f: ScalarField) -> np.ndarray:
    """d pi (S f) on the quotient grid: components (eta, xi1 - xi2)."""
    _require_regular(model)
    u = contact_vector(model, f).components[:, :, :, 0]
    return np.stack([u[0], u[1] - u[2]])


def poisson_bracket(h1: ScalarField, h2: ScalarField) -> ScalarField:
    """omega(V_h1, V_h2) = (h1_eta h2_psi - h1_psi h2_eta) / sin(2 eta)."""
    sigma = np.sin(2 * h1.grid.coords[0])
    a = partial_derivative(h1, 0).values * partial_derivative(h2, 1).values
    b = partial_derivative(h1, 1).values * partial_derivative(h2, 0).values
    return ScalarField(h1.grid, (a - b) / sigma)


def _fit_positive_scale(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Best lam >= 0 with a ~ lam b in the w-weighted norm; returns (defect, lam)."""
    bb = float(np.sum(w * b * b))
    aa = float(np.sum(w * a * a))
    if bb == 0.0:
        return (np.sqrt(aa), 0.0) if aa > 0 else (0.0, 1.0)
    lam = max(float(np.sum(w * a * b)) / bb, 0.0)
    r = a - lam * b
    return float(np.sqrt(np.sum(w * r * r) / bb)), lam


def hamiltonian_field_defect(model: ContactModel, f: ScalarField) -> tuple[float, float]:
    """Relative mismatch between d pi(S f) and V_h, and the fitted scale."""
    h = boothby_wang_project(model, f)
    return _fit_positive_scale(pushforward(model, f), hamiltonian_field(h), h.grid.weights)


def bracket_compatibility_defect(model: ContactModel, f1: ScalarField, f2: ScalarField) -> tuple[float, float]:
    """d pi(S {f1, f2}) against the Hamiltonian field of the omega-bracket of h1, h2."""
    h1, h2 = boothby_wang_project(model, f1), boothby_wang_project(model, f2)
    pb = poisson_bracket(h1, h2)
    pb = pb - integrate(pb) / pb.grid.total_measure
    br = contact_bracket(model, f1, f2)
    return _fit_positive_scale(pushforward(model, br), hamiltonian_field(pb), pb.grid.weights)


def subalgebra_closure_defect(model: ContactModel, f1: ScalarField, f2: ScalarField) -> float:
    """||E {f1, f2}|| relative to ||{f1, f2}||."""
    br = contact_bracket(model, f1, f2)
    nb = l2_norm(br)
    return l2_norm(reeb_derivative(model, br)) / nb if nb > 0 else 0.0


@dataclass
class SubmersionReport:
    rows: list[dict] = field(default_factory=list)
    fitted_constant: float | None = None
    ratio_spread: float | None = None

    def to_dict(self) -> dict:
        return {"rows": self.rows, "fitted_constant": self.fitted_constant, "ratio_spread": self.ratio_spread}


def submersion_isometry_check(model: ContactModel, test_fields) -> SubmersionReport:
    """Norm ratios <f, f>_M / <h, h>_N and Hamiltonian-field defects."""
    _require_regular(model)
    rep = SubmersionReport()
    ratios = []
    for i, f in enumerate(test_fields):
        _require_member(model, f)
        mean = integrate(f) / model.grid.total_measure
        if abs(mean) > 1e-10 * (float(np.max(np.abs(f.values))) + 1e-300):
            raise NumericalRejection(f"test field {i} does not have mean zero")
        h = boothby_wang_project(model, f)
        ratio = l2_inner(f, f) / l2_inner(h, h)
        defect, lam = hamiltonian_field_defect(model, f)
        ratios.append(ratio)
        rep.rows.append({"index": i, "norm_ratio": ratio, "hamiltonian_defect": defect, "fitted_scale": lam})
    if ratios:
        r = np.array(ratios)
        rep.fitted_constant = float(r.mean())
        rep.ratio_spread = float((r.max() - r.min()) / r.mean())
    return rep
