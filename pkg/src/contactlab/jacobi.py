"""Jacobi fields along Reeb geodesics and the failure of exp to be C^1.

Along the geodesic with constant stream function ``c`` the Jacobi stream
function ``g`` solves

    g_tt + c (n + 2) E(g_t) = 0,   g(0) = 0,  g_t(0) = w0,

so ``w = g_t`` is transported along the Reeb direction with speed
``s = c (n + 2)`` and, with ``W0' = w0``,

    g(t) = (W0(z) - W0(z - s t)) / s.

When ``s`` equals a period of ``W0`` the field vanishes at ``t = 1``: the
differential of ``exp`` at ``c E`` has a kernel.  :func:`kernel_direction`
produces such pairs with ``c_m -> 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import ContactModel, reeb_derivative
from .errors import CapabilityError, NumericalRejection
from .fields import ScalarField, l2_norm
from .geodesics import blowup_time, flow_map_reconstruct, integrate_geodesic
from .report import ExperimentReport

JACOBI_MODELS = ("circle", "darboux_box")
KERNEL_SLOPE_MIN = 0.85
GENERIC_SPREAD_MAX = 0.05


def _require(model: ContactModel):
    if model.name not in JACOBI_MODELS:
        raise CapabilityError(f"Jacobi fields are solved on {JACOBI_MODELS}, not {model.name}")


def _reeb_wavenumbers(model: ContactModel) -> np.ndarray:
    ax = model.grid.axes[model.reeb_axis]
    k = np.fft.fftfreq(ax.n, d=1.0 / ax.n) * (2 * np.pi / ax.period)
    if ax.n % 2 == 0:
        k[ax.n // 2] = 0.0
    return k


@dataclass
class JacobiSolution:
    model: ContactModel
    c: float
    w0: ScalarField
    times: np.ndarray
    g_states: list[ScalarField]

    @property
    def speed(self) -> float:
        return self.c * (self.model.n + 2)

    def _antiderivative_hat(self) -> np.ndarray:
        ax = self.model.reeb_axis
        k = self.model.grid.line(ax, _reeb_wavenumbers(self.model))
        hat = np.fft.fft(self.w0.values, axis=ax)
        safe = np.where(k == 0, 1.0, k)
        return np.where(k == 0, 0.0, hat / (1j * safe)), k

    def g_at(self, t: float) -> np.ndarray:
        """Closed-form Jacobi stream function at any time ``t``."""
        ax = self.model.reeb_axis
        W, k = self._antiderivative_hat()
        shifted = W * np.exp(-1j * k * self.speed * t)
        return np.real(np.fft.ifft(W - shifted, axis=ax)) / self.speed

    def residual(self, h: float = 2e-3) -> float:
        """Substitution residual of the Jacobi equation at the stored times.

        Fourth-order central differences in time, spectral differences along
        the Reeb coordinate.  Relative to ``max |s E(g_t)|``.
        """
        ax = self.model.reeb_axis
        k = self.model.grid.line(ax, _reeb_wavenumbers(self.model))
        worst = 0.0
        for t in self.times:
            gm2, gm1, g0, gp1, gp2 = (self.g_at(t + j * h) for j in (-2, -1, 0, 1, 2))
            gtt = (-gp2 + 16 * gp1 - 30 * g0 + 16 * gm1 - gm2) / (12 * h * h)
            gt = (-gp2 + 8 * gp1 - 8 * gm1 + gm2) / (12 * h)
            egt = np.real(np.fft.ifft(1j * k * np.fft.fft(gt, axis=ax), axis=ax))
            r = gtt + self.speed * egt
            scale = self.speed * np.max(np.abs(egt))
            if scale > 0:
                worst = max(worst, float(np.max(np.abs(r)) / scale))
        return worst

    def initial_velocity_defect(self, h: float = 1e-4) -> float:
        """max |(g(h) - g(-h)) / 2h - w0|, relative to max |w0|."""
        d = (self.g_at(h) - self.g_at(-h)) / (2 * h)
        ref = max(float(np.max(np.abs(self.w0.values))), 1e-300)
        return float(np.max(np.abs(d - self.w0.values))) / ref


def jacobi_solve(model: ContactModel, c: float, w0: ScalarField, t_end: float, n_times: int = 11) -> JacobiSolution:
    _require(model)
    if not c > 0:
        raise ValueError("the Reeb speed c must be positive")
    ax = model.reeb_axis
    scale = max(float(np.max(np.abs(w0.values))), 1e-300)
    if np.max(np.abs(np.mean(w0.values, axis=ax))) > 1e-12 * scale:
        raise ValueError("w0 must have zero mean along the Reeb coordinate")
    times = np.linspace(0.0, t_end, n_times)
    sol = JacobiSolution(model, float(c), w0, times, [])
    sol.g_states = [ScalarField(model.grid, sol.g_at(t)) for t in times]
    return sol


def kernel_direction(model: ContactModel, m: int) -> tuple[float, ScalarField]:
    """(c_m, w0) with w0 = sin(2 pi m z / L) annihilated at t = 1 for c = c_m."""
    _require(model)
    ax = model.grid.axes[model.reeb_axis]
    if m < 1 or m >= ax.n // 2:
        raise ValueError(f"m={m} must satisfy 1 <= m < {ax.n // 2}")
    L = ax.period
    z = model.grid.coords[model.reeb_axis]
    c_m = L / (m * (model.n + 2))
    return c_m, ScalarField(model.grid, np.sin(2 * np.pi * m * z / L))


def generic_direction(model: ContactModel) -> ScalarField:
    """1 + cos(2 pi z / L): its mean is never in the kernel of D exp."""
    _require(model)
    L = model.grid.axes[model.reeb_axis].period
    z = model.grid.coords[model.reeb_axis]
    return ScalarField(model.grid, 1.0 + np.cos(2 * np.pi * z / L))


@dataclass
class DerivativeProbe:
    c: float
    direction: ScalarField
    epsilons: np.ndarray
    ratios: np.ndarray

    def slope(self) -> float | None:
        """Log-log slope of ratio against epsilon; None with fewer than two points."""
        if len(self.epsilons) < 2 or np.any(self.ratios <= 0):
            return None
        return float(np.polyfit(np.log(self.epsilons), np.log(self.ratios), 1)[0])

    def limit(self) -> float:
        """Ratio extrapolated to epsilon -> 0 from the two smallest epsilons."""
        if len(self.epsilons) < 2:
            return float(self.ratios[-1])
        e1, e2 = self.epsilons[-2], self.epsilons[-1]
        r1, r2 = self.ratios[-2], self.ratios[-1]
        return float((e1 * r2 - e2 * r1) / (e1 - e2))

    def spread(self) -> float:
        return float((self.ratios.max() - self.ratios.min()) / np.mean(self.ratios))


def _probe_dt(model: ContactModel, f0: ScalarField) -> float:
    ax = model.grid.axes[model.reeb_axis]
    kmax = (ax.n / 2) * (2 * np.pi / ax.period)
    amp = max(float(np.max(np.abs(f0.values))), 1e-12)
    return min(1e-3, 0.7 / ((model.n + 3) * amp * kmax))


def time_one_map(model: ContactModel, f0: ScalarField, dt: float | None = None) -> np.ndarray:
    """exp at the level the model supports: flow map on the circle, stream function on the box."""
    dt = dt or _probe_dt(model, f0)
    tr = integrate_geodesic(model, f0, 1.0, dt, save_every=10**9, detect_blowup=False)
    if model.name == "circle":
        return flow_map_reconstruct(model, tr).positions[-1]
    return tr.final.values


def dexp_probe(model: ContactModel, c: float, direction: ScalarField, epsilons, dt: float | None = None) -> DerivativeProbe:
    """Finite-difference ratios ||exp(c + eps w) - exp(c)|| / eps."""
    _require(model)
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be positive and strictly decreasing")
    base = ScalarField(model.grid, np.full(model.grid.shape, float(c)))
    for e in eps:
        t_star = blowup_time(model, base + e * direction)
        if t_star <= 1.0:
            dmin = float(np.min(reeb_derivative(model, direction).values))
            bound = -1.0 / ((model.n + 3) * dmin)
            raise NumericalRejection(f"eps={e:g} blows up before t=1; admissible eps < {bound:.4g}")
    amp = abs(c) + eps.max() * float(np.max(np.abs(direction.values)))
    dt = dt or _probe_dt(model, ScalarField(model.grid, np.full(model.grid.shape, amp)))
    ref = time_one_map(model, base, dt)
    w = model.grid.weights
    ratios = []
    for e in eps:
        d = time_one_map(model, base + e * direction, dt) - ref
        ratios.append(float(np.sqrt(np.sum(w * d**2))) / e)
    return DerivativeProbe(float(c), direction, eps, np.array(ratios))


def c1_failure_report(
    model: ContactModel,
    m_list,
    epsilons,
    c_threshold: float | None = None,
    dt: float | None = None,
) -> ExperimentReport:
    """Kernel and generic probes at every c_m; degeneracies accumulating at zero.

    With ``c_threshold`` set, the flag ``c_m_to_zero`` also requires the
    smallest probed ``c_m`` to fall below it.
    """
    _require(model)
    rep = ExperimentReport("exp-derivative")
    m_list = list(m_list)
    if not m_list:
        rep.metrics = {"count": 0}
        return rep
    eps = np.asarray(epsilons, dtype=float)
    gen = generic_direction(model)
    c_values, slopes, spreads = [], [], []
    for m in m_list:
        c_m, w0 = kernel_direction(model, m)
        kp = dexp_probe(model, c_m, w0, eps, dt)
        gp = dexp_probe(model, c_m, gen, eps, dt)
        slope = kp.slope()
        c_values.append(c_m)
        slopes.append(slope)
        spreads.append(gp.spread())
        for e, rk, rg in zip(eps, kp.ratios, gp.ratios):
            rep.rows.append({"m": m, "c_m": c_m, "eps": float(e), "kernel_ratio": rk, "generic_ratio": rg})
        rep.metrics[f"m={m}"] = {
            "c_m": c_m,
            "kernel_slope": slope if slope is not None else "insufficient data",
            "generic_limit": gp.limit(),
            "generic_spread": gp.spread(),
            "kernel_jacobi_norm": l2_norm(jacobi_solve(model, c_m, w0, 1.0, 2).g_states[-1]),
        }
    c_arr = np.array(c_values)
    decreasing = bool(np.all(np.diff(c_arr) < 0))
    rep.flags["kernel_slopes"] = all(s is not None and s >= KERNEL_SLOPE_MIN for s in slopes)
    rep.flags["generic_stable"] = all(s <= GENERIC_SPREAD_MAX for s in spreads)
    rep.metrics["c_m_min"] = float(c_arr.min())
    rep.flags["c_m_decreasing"] = decreasing
    if c_threshold is not None:
        rep.flags["c_m_to_zero"] = decreasing and float(c_arr.min()) < c_threshold
    return rep
