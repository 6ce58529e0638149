"""Curvature of the contactomorphism group with the L2 metric on stream functions.

Two independent routes are provided for the non-normalized curvature
``C(X, Y)`` of the plane spanned by ``X = S f`` and ``Y = S g``:

* :func:`curvature_arnold` evaluates Arnold's general formula for a
  right-invariant metric, with ``ad_X Y = -S{f, g}`` and
  ``B(X, Y) = ad*_Y X`` taken from :func:`contact.coadjoint`;
* :func:`curvature_closed_form` integrates the perfect square
  ``(1/4) [{f, g} - (n + 3)(f E(g) - g E(f))]^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import ContactModel, coadjoint, contact_bracket, reeb_derivative
from .errors import DegeneratePlaneError, ResolutionError
from .fields import ScalarField, integrate, l2_inner, random_band_limited, spectral_energy
from .report import ExperimentReport, seed_for

ALIAS_TOL = 1e-8
DEGENERATE_TOL = 1e-8
NEGATIVE_TOL = 1e-10


@dataclass(frozen=True)
class CurvatureSample:
    model: str
    seed_f: int
    seed_g: int
    C_arnold: float
    C_closed: float
    wedge_norm_sq: float
    K: float
    scale: float


def check_resolved(*fields: ScalarField) -> None:
    """Reject inputs with spectral energy above half the Nyquist limit."""
    for f in fields:
        tail, total = spectral_energy(f, 0.5)
        if total > 0 and tail > ALIAS_TOL * total:
            raise ResolutionError(
                f"input has {tail / total:.2e} of its energy above half-Nyquist; products would alias"
            )


def curvature_arnold(model: ContactModel, f: ScalarField, g: ScalarField) -> float:
    check_resolved(f, g)
    a = -0.5 * contact_bracket(model, f, g)
    b_xy = coadjoint(model, g, f)  # ad*_Y X
    b_yx = coadjoint(model, f, g)
    d = 0.5 * (b_xy + b_yx)
    b = 0.5 * (b_xy - b_yx)
    bx = 0.5 * coadjoint(model, f, f)
    by = 0.5 * coadjoint(model, g, g)
    return l2_inner(d, d) + 2 * l2_inner(a, b) - 3 * l2_inner(a, a) - 4 * l2_inner(bx, by)


def closed_form_integrand(model: ContactModel, f: ScalarField, g: ScalarField) -> ScalarField:
    ef, eg = reeb_derivative(model, f), reeb_derivative(model, g)
    return 0.25 * (contact_bracket(model, f, g) - (model.n + 3) * (f * eg - g * ef)) ** 2


def curvature_closed_form(model: ContactModel, f: ScalarField, g: ScalarField) -> float:
    check_resolved(f, g)
    return integrate(closed_form_integrand(model, f, g))


def wedge_norm_sq(f: ScalarField, g: ScalarField) -> float:
    return l2_inner(f, f) * l2_inner(g, g) - l2_inner(f, g) ** 2


def sectional(model: ContactModel, f: ScalarField, g: ScalarField) -> float:
    """K = C / |X ^ Y|^2."""
    w = wedge_norm_sq(f, g)
    ref = l2_inner(f, f) * l2_inner(g, g)
    if w <= DEGENERATE_TOL * ref:
        raise DegeneratePlaneError(
            f"|X^Y|^2 = {w:.3e} is below {DEGENERATE_TOL:g} * |X|^2|Y|^2 = {DEGENERATE_TOL * ref:.3e}"
        )
    return curvature_closed_form(model, f, g) / w


def curvature_sample(model: ContactModel, seed_f: int, seed_g: int, max_freq: int) -> CurvatureSample:
    f = random_band_limited(seed_f, max_freq, model.grid)
    g = random_band_limited(seed_g, max_freq, model.grid)
    ca = curvature_arnold(model, f, g)
    cc = curvature_closed_form(model, f, g)
    w = wedge_norm_sq(f, g)
    scale = l2_inner(f, f) * l2_inner(g, g)
    K = cc / w if w > DEGENERATE_TOL * scale else float("nan")
    return CurvatureSample(model.name, seed_f, seed_g, ca, cc, w, K, scale)


def curvature_sweep(model: ContactModel, count: int, max_freq: int, seed: int) -> ExperimentReport:
    """Seeded sweep of random planes: a numerical witness of nonnegativity."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    samples = [
        curvature_sample(model, seed_for(seed, i, 0), seed_for(seed, i, 1), max_freq)
        for i in range(count)
    ]
    rep = ExperimentReport("curvature-sweep")
    rep.rows = [
        {"seed_f": s.seed_f, "seed_g": s.seed_g, "C_arnold": s.C_arnold, "C_closed": s.C_closed, "K": s.K}
        for s in samples
    ]
    if not samples:
        rep.metrics = {"count": 0}
        return rep
    cc = np.array([s.C_closed for s in samples])
    ca = np.array([s.C_arnold for s in samples])
    scale = np.array([s.scale for s in samples])
    rel = np.abs(ca - cc) / (np.abs(cc) + scale)
    rep.metrics = {
        "count": count,
        "C_closed_min": float(cc.min()),
        "C_closed_median": float(np.median(cc)),
        "C_closed_max": float(cc.max()),
        "route_discrepancy_max": float(rel.max()),
        "negative_samples": int(np.sum(cc < -NEGATIVE_TOL * scale)),
        "negative_arnold_samples": int(np.sum(ca < -NEGATIVE_TOL * scale)),
    }
    return rep
