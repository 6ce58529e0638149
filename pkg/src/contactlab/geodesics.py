"""Geodesic flow: the Euler-Arnold equation f_t + (n + 3) f E(f) = 0.

Time stepping is explicit (RK4 by default) with spectral evaluation of
``E(f)``.  Along the Reeb direction the equation is a Burgers-type
transport, so in Darboux coordinates it has the implicit solution

    f(t, x, z + (n + 3) t f0(x, z)) = f0(x, z),

valid until characteristics cross at ``t* = -1 / ((n + 3) min E(f0))``.
On the circle the flow map ``eta`` is recovered from d eta/dt = f(t, eta).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contact import ContactModel, reeb_derivative
from .curvature import check_resolved
from .errors import BlowupDomainError, CapabilityError
from .fields import ScalarField, integrate, write_field

SCHEMES = ("rk4", "midpoint")
GRADIENT_GROWTH_LIMIT = 50.0
TAIL_ENERGY_LIMIT = 0.01
TAIL_CUTOFF = 2.0 / 3.0
NEWTON_DAMPING = 0.5
NEWTON_MAX_ITER = 60


@dataclass
class GeodesicTrajectory:
    model: str
    times: np.ndarray
    states: list[ScalarField]
    invariants_log: np.ndarray  # rows: (int f, int f^2, int f^3)
    dt: float
    scheme: str
    blowup_flag: bool = False
    blowup_time: float | None = None  # extrapolated from the gradient history
    trigger_time: float | None = None
    trigger_reason: str | None = None
    f0: ScalarField | None = field(default=None, repr=False)
    t_end: float = 0.0

    @property
    def final(self) -> ScalarField:
        return self.states[-1]

    def invariant_drift(self) -> np.ndarray:
        """Largest drift of each invariant, relative to int |f|^p at t = 0."""
        f0 = self.states[0].values
        w = self.states[0].grid.weights
        ref = np.array([np.sum(w * np.abs(f0) ** p) for p in (1, 2, 3)])
        ref = np.where(ref > 0, ref, 1.0)
        return np.max(np.abs(self.invariants_log - self.invariants_log[0]), axis=0) / ref

    def manifest(self) -> dict:
        return {
            "model": self.model,
            "times": [float(t) for t in self.times],
            "invariants_log": self.invariants_log.tolist(),
            "dt": self.dt,
            "scheme": self.scheme,
            "blowup": {
                "flag": self.blowup_flag,
                "trigger_time": self.trigger_time,
                "estimated_time": self.blowup_time,
                "reason": self.trigger_reason,
            },
            "frames": [f"frame_{i:05d}.ceaf" for i in range(len(self.states))],
        }

    def export(self, out_dir: str | Path) -> Path:
        """Write every frame to the field container plus a JSON manifest."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        man = self.manifest()
        for name, f in zip(man["frames"], self.states):
            write_field(out / name, f)
        (out / "manifest.json").write_text(json.dumps(man, indent=2) + "\n")
        return out


@dataclass
class FlowMap:
    """Circle flow map: ``positions[i, j] = eta(times[i], alpha_j)``."""

    times: np.ndarray
    alpha: np.ndarray
    positions: np.ndarray

    def at(self, i: int) -> np.ndarray:
        return self.positions[i]

    def derivative(self, i: int) -> np.ndarray:
        """d eta / d alpha at stored time index ``i``."""
        disp = self.positions[i] - self.alpha
        n = len(self.alpha)
        k = np.fft.rfftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            k[-1] = 0.0
        return 1.0 + np.fft.irfft(1j * k * np.fft.rfft(disp), n)


def euler_arnold_rhs(model: ContactModel, f: ScalarField) -> ScalarField:
    """-(n + 3) f E(f)."""
    return -(model.n + 3) * f * reeb_derivative(model, f)


def _step_sizes(t_end: float, dt: float) -> list[float]:
    nfull = int(np.floor(t_end / dt + 1e-9))
    steps = [dt] * nfull
    rest = t_end - nfull * dt
    if rest > 1e-12 * max(dt, 1.0):
        steps.append(rest)
    return steps


class _Stepper:
    def __init__(self, rhs, scheme: str):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        self.rhs = rhs
        self.scheme = scheme

    def __call__(self, y, h):
        rhs = self.rhs
        if self.scheme == "midpoint":
            k1 = rhs(y)
            return y + h * rhs(y + 0.5 * h * k1)
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _reeb_op(model: ContactModel):
    """Fast array-level E(.) for the integrator."""
    grid = model.grid
    if model.reeb_axis is not None:
        ax = model.reeb_axis
        n = grid.axes[ax].n
        k = np.fft.rfftfreq(n, d=1.0 / n) * (2 * np.pi / grid.axes[ax].period)
        if n % 2 == 0:
            k[-1] = 0.0
        ik = grid.line(ax, 1j * k)
        return lambda v: np.fft.irfft(ik * np.fft.rfft(v, axis=ax), n, axis=ax)
    return lambda v: reeb_derivative(model, ScalarField(grid, v)).values


def _tail_fraction(v: np.ndarray, model: ContactModel) -> float:
    grid = model.grid
    per = [i for i, ax in enumerate(grid.axes) if ax.periodic]
    v = v - v.mean()
    hat = np.abs(np.fft.fftn(v, axes=per)) ** 2
    total = hat.sum()
    if total == 0:
        return 0.0
    mask = np.zeros(grid.shape, dtype=bool)
    for i in per:
        k = np.abs(grid.wavenumbers(i))
        mask = mask | grid.line(i, k > TAIL_CUTOFF * grid.axes[i].n / 2)
    return float(hat[np.broadcast_to(mask, hat.shape)].sum() / total)


def _invariants(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.array([np.sum(w * v), np.sum(w * v**2), np.sum(w * v**3)])


def integrate_geodesic(
    model: ContactModel,
    f0: ScalarField,
    t_end: float,
    dt: float,
    scheme: str = "rk4",
    save_every: int = 1,
    detect_blowup: bool = True,
) -> GeodesicTrajectory:
    """Integrate the Euler-Arnold equation from ``f0`` up to ``t_end``.

    Integration stops early, with ``blowup_flag`` set, once ``max |E(f)|``
    exceeds 50 times its initial value or more than 1% of the spectral
    energy sits in the top third of the resolved band.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    check_resolved(f0)
    grid = model.grid
    w = grid.weights
    E = _reeb_op(model)
    c = -(model.n + 3)
    step = _Stepper(lambda v: c * v * E(v), scheme)

    y = np.array(f0.values, dtype=float)
    g0 = float(np.max(np.abs(E(y))))
    times, states, inv = [0.0], [f0], [_invariants(y, w)]
    hist_t, hist_g = [0.0], [g0]
    t = 0.0
    flag, reason, trig = False, None, None
    steps = _step_sizes(t_end, dt)
    for i, h in enumerate(steps, start=1):
        y = step(y, h)
        t += h
        if not np.all(np.isfinite(y)):
            flag, reason, trig = True, "non-finite state", t
            break
        if detect_blowup:
            gmax = float(np.max(np.abs(E(y))))
            hist_t.append(t)
            hist_g.append(gmax)
            if g0 > 0 and gmax > GRADIENT_GROWTH_LIMIT * g0:
                flag, reason, trig = True, "gradient growth", t
            elif _tail_fraction(y, model) > TAIL_ENERGY_LIMIT:
                flag, reason, trig = True, "spectral tail", t
        if flag or i % save_every == 0 or i == len(steps):
            times.append(t)
            states.append(ScalarField(grid, y))
            inv.append(_invariants(y, w))
        if flag:
            break

    est = _extrapolate_blowup(np.array(hist_t), np.array(hist_g)) if flag else None
    return GeodesicTrajectory(
        model=model.name,
        times=np.array(times),
        states=states,
        invariants_log=np.array(inv),
        dt=dt,
        scheme=scheme,
        blowup_flag=flag,
        blowup_time=est,
        trigger_time=trig,
        trigger_reason=reason,
        f0=f0,
        t_end=t_end,
    )


def _extrapolate_blowup(t: np.ndarray, g: np.ndarray) -> float | None:
    """Zero of a straight-line fit to 1/max|E f| over the second half of the history."""
    if len(t) < 4 or np.any(g <= 0):
        return None
    half = len(t) // 2
    slope, icpt = np.polyfit(t[half:], 1.0 / g[half:], 1)
    if slope >= 0:
        return None
    return float(-icpt / slope)


def blowup_time(model: ContactModel, f0: ScalarField) -> float:
    """Time at which characteristics first cross: -1 / ((n + 3) min E(f0))."""
    m = float(np.min(reeb_derivative(model, f0).values))
    if m >= 0:
        return float("inf")
    return -1.0 / ((model.n + 3) * m)


def _require_reeb_coordinate(model: ContactModel):
    if model.reeb_axis is None:
        raise CapabilityError(f"{model.name} has no coordinate Reeb direction")


def _line_coefficients(lines: np.ndarray) -> np.ndarray:
    """Real trig-series weights a_k, with f(z) = Re sum_k a_k exp(i k z)."""
    n = lines.shape[-1]
    a = np.fft.rfft(lines, axis=-1) / n
    a[..., 1:] *= 2.0
    if n % 2 == 0:
        a[..., -1] /= 2.0
    return a


def _transverse_lines(model: ContactModel, f0: ScalarField, pts: np.ndarray) -> np.ndarray:
    """Values of f0 along the Reeb axis at each point's transverse position."""
    grid = model.grid
    ax = model.reeb_axis
    vals = np.moveaxis(f0.values, ax, -1)
    others = [i for i in range(grid.ndim) if i != ax]
    if not others:
        return np.broadcast_to(vals, (len(pts), vals.shape[-1]))
    idx = []
    on_nodes = True
    for i in others:
        h = grid.axes[i].period / grid.axes[i].n
        q = np.mod(pts[:, i], grid.axes[i].period) / h
        r = np.rint(q)
        if np.max(np.abs(q - r)) > 1e-9:
            on_nodes = False
            break
        idx.append(r.astype(int) % grid.axes[i].n)
    if on_nodes:
        return vals[tuple(idx)]
    # general points: trigonometric interpolation across the transverse axes
    hat = np.fft.fftn(vals, axes=tuple(range(len(others)))) / np.prod([grid.axes[i].n for i in others])
    out = hat
    for j, i in enumerate(others):
        k = grid.wavenumbers(i) * (2 * np.pi / grid.axes[i].period)
        n = grid.axes[i].n
        if n % 2 == 0:
            k = k.copy()
            k[n // 2] = 0.0  # Nyquist mode evaluated as cos, which its real part already is
        e = np.exp(1j * np.outer(pts[:, i], k))
        if j == 0:
            out = np.einsum("pa,a...->p...", e, out)
        else:
            out = np.einsum("pa,pa...->p...", e, out)
    return np.real(out)


def implicit_solution_evaluate(
    model: ContactModel,
    f0: ScalarField,
    t: float,
    points,
    return_residual: bool = False,
):
    """Evaluate the characteristics solution at ``points`` (shape ``(m, dim)``).

    For each query ``(x, z')`` solve ``z' = z + (n + 3) t f0(x, z)`` for ``z``
    and return ``f0(x, z)``.
    """
    _require_reeb_coordinate(model)
    grid = model.grid
    ax = model.reeb_axis
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.ndim:
        raise ValueError(f"points need {grid.ndim} coordinates")
    L = grid.axes[ax].period
    kappa = (model.n + 3) * t
    lines = _transverse_lines(model, f0, pts)
    a = _line_coefficients(lines)
    k = np.arange(a.shape[-1]) * (2 * np.pi / L)

    def ev(z):
        e = np.exp(1j * z[:, None] * k[None, :])
        return np.real(np.sum(a * e, axis=1)), np.real(np.sum(1j * k * a * e, axis=1))

    # no crossing yet: 1 + kappa * dz f0 > 0 on a 4x refined line
    zz = np.linspace(0, L, 4 * grid.axes[ax].n, endpoint=False)
    dmin = np.inf
    for chunk in np.array_split(np.arange(len(pts)), max(1, len(pts) // 2048)):
        e = np.exp(1j * np.outer(zz, k))
        d = np.real(np.einsum("pk,zk->pz", 1j * k * a[chunk], e))
        dmin = min(dmin, float(d.min()))
    if t > 0 and 1 + kappa * dmin <= 0:
        raise BlowupDomainError(
            f"t={t} is past the characteristics crossing time {-1 / ((model.n + 3) * dmin):.6g}"
        )

    zq = pts[:, ax]
    z = zq.copy()
    scale = 1.0 + np.abs(zq)
    converged = np.zeros(len(z), dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        fz, dfz = ev(z)
        F = z + kappa * fz - zq
        converged = np.abs(F) <= 1e-14 * scale
        if converged.all():
            break
        dF = 1 + kappa * dfz
        step = F / dF
        lam = np.ones_like(z)
        znew = z - step
        for _ in range(30):
            fn, _d = ev(znew)
            worse = np.abs(znew + kappa * fn - zq) > np.abs(F)
            if not worse.any():
                break
            lam = np.where(worse, lam * NEWTON_DAMPING, lam)
            znew = z - lam * step
        z = np.where(converged, z, znew)
    if not converged.all():
        bad = ~converged
        z[bad] = _bisect(kappa, zq[bad], np.max(np.abs(a[bad]).sum(axis=1)) * kappa + 1.0, a[bad], k)
    fz, _ = ev(z)
    resid = np.abs(zq - z - kappa * fz)
    if return_residual:
        return fz, float(resid.max())
    return fz


def _bisect(kappa, zq, half_width, a, k):
    def ev(z):
        e = np.exp(1j * z[:, None] * k[None, :])
        return np.real(np.sum(a * e, axis=1))

    lo, hi = zq - half_width, zq + half_width
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        F = mid + kappa * ev(mid) - zq
        lo = np.where(F < 0, mid, lo)
        hi = np.where(F >= 0, mid, hi)
    return 0.5 * (lo + hi)


def implicit_solution_on_grid(model: ContactModel, f0: ScalarField, t: float) -> ScalarField:
    pts = np.stack([c.ravel() for c in model.grid.coords], axis=1)
    return ScalarField(model.grid, implicit_solution_evaluate(model, f0, t, pts).reshape(model.grid.shape))


def trig_interpolate(values: np.ndarray, period: float, x: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of nodal ``values`` at points ``x``."""
    n = len(values)
    c = np.fft.rfft(values) / n
    c[1:] *= 2.0
    if n % 2 == 0:
        c[-1] /= 2.0
    # phases e^{i k x} by cumulative products, cheaper than a full exp table
    z = np.exp(1j * (2 * np.pi / period) * np.asarray(x))
    powers = np.empty((len(c), z.size), dtype=complex)
    powers[0] = 1.0
    if len(c) > 1:
        powers[1:] = z
        np.cumprod(powers[1:], axis=0, out=powers[1:])
    return np.real(c @ powers)


def flow_map_reconstruct(model: ContactModel, trajectory: GeodesicTrajectory) -> FlowMap:
    """Integrate d eta/dt = f(t, eta) on the circle alongside the stream function."""
    if model.name != "circle":
        raise CapabilityError("flow maps are only reconstructed on the circle")
    if trajectory.blowup_flag:
        raise BlowupDomainError("trajectory reached blowup; the flow map is not a diffeomorphism")
    grid = model.grid
    n = grid.shape[0]
    L = grid.axes[0].period
    alpha = grid.axes[0].nodes
    E = _reeb_op(model)
    c = -(model.n + 3)

    def rhs(y):
        f, eta = y[:n], y[n:]
        return np.concatenate([c * f * E(f), trig_interpolate(f, L, eta)])

    step = _Stepper(rhs, trajectory.scheme)
    y = np.concatenate([trajectory.states[0].values, alpha])
    saved = list(trajectory.times)
    positions = [alpha.copy()]
    t = 0.0
    si = 1
    for h in _step_sizes(trajectory.t_end, trajectory.dt):
        y = step(y, h)
        t += h
        while si < len(saved) and abs(t - saved[si]) <= 1e-9 * max(1.0, abs(t)):
            positions.append(y[n:].copy())
            si += 1
    positions = np.array(positions)
    if len(positions) != len(saved):
        raise RuntimeError("flow map sampling did not align with trajectory times")
    for i, p in enumerate(positions):
        gaps = np.diff(np.append(p, p[0] + L))
        if np.any(gaps <= 0):
            raise BlowupDomainError(f"flow map lost monotonicity at t={saved[i]:.6g}")
    return FlowMap(np.array(saved), alpha.copy(), positions)


def lagrangian_momentum_defect(model: ContactModel, trajectory: GeodesicTrajectory, flow: FlowMap) -> float:
    """max |f(t, eta) eta_alpha^2 - f0| over stored times, relative to max |f0|.

    The L2 momentum is transported as a quadratic differential on the circle.
    """
    L = model.grid.axes[0].period
    f0 = trajectory.states[0].values
    worst = 0.0
    for i, st in enumerate(trajectory.states):
        ft_eta = trig_interpolate(st.values, L, flow.positions[i])
        lhs = ft_eta * flow.derivative(i) ** 2
        worst = max(worst, float(np.max(np.abs(lhs - f0))))
    return worst / max(float(np.max(np.abs(f0))), 1e-300)


def mean_value(f: ScalarField) -> float:
    return integrate(f) / f.grid.total_measure
