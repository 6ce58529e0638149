"""Structured grids, quadrature and spectral calculus.

Every model manifold in this package is sampled on a tensor-product grid.
Two kinds of axes exist:

``periodic``
    Equispaced nodes ``x_j = j L / N`` with trapezoid weights ``L / N``.
    Differentiation is done by FFT and is exact for trigonometric
    polynomials below the Nyquist limit.

``hopf_polar``
    The polar angle ``eta`` of the Hopf coordinates on the 3-sphere,
    restricted to the open interval (0, pi/2).  With ``u = cos(2 eta)`` the
    density ``sin(2 eta) d eta`` becomes ``du / 2``, so the nodes are the
    Gauss-Legendre nodes in ``u`` and the weights are half the Legendre
    weights.  The endpoints, where the density vanishes, are never sampled.

A smooth function on the 3-sphere has, in its Fourier mode ``(k1, k2)``
along the two periodic Hopf angles, the form
``sin(eta)^|k1| cos(eta)^|k2| Q(u)`` with ``Q`` a polynomial.  Dividing out
``sin^p cos^q`` with ``p = |k1| mod 2`` and ``q = |k2| mod 2`` therefore leaves
a polynomial in ``u`` that collocation on the Gauss nodes differentiates
exactly.  A ``hopf_polar`` axis records which periodic axes carry the sine
and cosine parities (``parity_axes``).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

__all__ = [
    "Axis",
    "GridSpec",
    "ScalarField",
    "VectorField",
    "GridMismatchError",
    "periodic_axis",
    "hopf_polar_axis",
    "integrate",
    "partial_derivative",
    "gradient",
    "l2_inner",
    "l2_norm",
    "random_band_limited",
    "spectral_energy",
    "write_field",
    "read_field",
]

MIN_NODES = 8
CONTAINER_MAGIC = b"CEAF"
CONTAINER_VERSION = 1


class GridMismatchError(ValueError):
    """Two objects that must share a grid do not."""


@dataclass(frozen=True, eq=False)
class Axis:
    name: str
    kind: str
    n: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    period: float | None = None
    bounds: tuple[float, float] | None = None
    # (sin-parity axis, cos-parity axis) for a hopf_polar axis
    parity_axes: tuple[int | None, int | None] = (None, None)

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic"

    def signature(self) -> tuple:
        return (self.name, self.kind, self.n, self.period, self.bounds, self.parity_axes)

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "n": self.n}
        if self.periodic:
            d["period"] = self.period
        else:
            d["bounds"] = list(self.bounds)
            d["parity_axes"] = list(self.parity_axes)
        return d


def periodic_axis(name: str, n: int, period: float = 2 * np.pi) -> Axis:
    if n < MIN_NODES:
        raise ValueError(f"axis {name!r} needs at least {MIN_NODES} nodes, got {n}")
    if period <= 0:
        raise ValueError("period must be positive")
    nodes = np.arange(n) * (period / n)
    weights = np.full(n, period / n)
    return Axis(name, "periodic", int(n), nodes, weights, period=float(period))


def hopf_polar_axis(name: str, n: int, parity_axes=(None, None)) -> Axis:
    """Polar Hopf angle on (0, pi/2) with the measure sin(2 eta) d eta."""
    if n < MIN_NODES:
        raise ValueError(f"axis {name!r} needs at least {MIN_NODES} nodes, got {n}")
    u, w = legendre.leggauss(n)
    # ascending eta means descending u
    u, w = u[::-1], w[::-1]
    eta = 0.5 * np.arccos(u)
    return Axis(
        name,
        "hopf_polar",
        int(n),
        eta,
        0.5 * w,
        bounds=(0.0, np.pi / 2),
        parity_axes=tuple(parity_axes),
    )


def _axis_from_dict(d: dict) -> Axis:
    if d["kind"] == "periodic":
        return periodic_axis(d["name"], d["n"], d["period"])
    if d["kind"] == "hopf_polar":
        return hopf_polar_axis(d["name"], d["n"], tuple(d.get("parity_axes", (None, None))))
    raise ValueError(f"unknown axis kind {d['kind']!r}")


def _barycentric_diff_matrix(x: np.ndarray) -> np.ndarray:
    n = len(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    # log-scaled barycentric weights avoid under/overflow at large n
    logabs = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    v = sign * np.exp(logabs - logabs.max())
    D = (v[None, :] / v[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Tensor-product grid; the node weights already contain the measure density."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        for ax in self.axes:
            if ax.kind == "hopf_polar":
                for p in ax.parity_axes:
                    if p is not None and not self.axes[p].periodic:
                        raise ValueError("parity axes must be periodic")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(ax.name for ax in self.axes)

    def axis_index(self, axis: int | str) -> int:
        if isinstance(axis, str):
            try:
                return self.names.index(axis)
            except ValueError:
                raise IndexError(f"no axis named {axis!r}") from None
        if not 0 <= axis < self.ndim:
            raise IndexError(f"axis {axis} out of range for {self.ndim}-axis grid")
        return int(axis)

    def signature(self) -> tuple:
        return tuple(ax.signature() for ax in self.axes)

    def same_as(self, other: "GridSpec") -> bool:
        return self is other or self.signature() == other.signature()

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(())
        for ax in self.axes:
            w = np.multiply.outer(w, ax.weights)
        w.flags.writeable = False
        return w

    @property
    def total_measure(self) -> float:
        return float(np.prod([ax.weights.sum() for ax in self.axes]))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[ax.nodes for ax in self.axes], indexing="ij"))

    def line(self, axis: int, values: np.ndarray) -> np.ndarray:
        """Reshape a 1-D per-node array so it broadcasts along ``axis``."""
        shape = [1] * self.ndim
        shape[axis] = -1
        return np.reshape(values, shape)

    def wavenumbers(self, axis: int) -> np.ndarray:
        ax = self.axes[axis]
        return np.fft.fftfreq(ax.n, d=1.0 / ax.n)

    @cached_property
    def _polar_cache(self) -> dict:
        out = {}
        for i, ax in enumerate(self.axes):
            if ax.kind == "hopf_polar":
                u = np.cos(2 * ax.nodes)
                out[i] = {
                    "s": np.sin(ax.nodes),
                    "c": np.cos(ax.nodes),
                    "sin2": np.sin(2 * ax.nodes),
                    "u": u,
                    "Du": _barycentric_diff_matrix(u),
                }
        return out

    def to_dict(self) -> dict:
        return {"axes": [ax.to_dict() for ax in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(_axis_from_dict(a) for a in d["axes"]))


class ScalarField:
    """Real values at the nodes of a grid.  Immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values):
        values = np.array(values, dtype=float)
        if values.shape == ():
            values = np.full(grid.shape, float(values))
        if values.shape != grid.shape:
            raise GridMismatchError(f"values of shape {values.shape} on grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("field has non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarField is immutable")

    def __repr__(self):
        return f"ScalarField(shape={self.values.shape})"

    def _other(self, other):
        if isinstance(other, ScalarField):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __pow__(self, p):
        return ScalarField(self.grid, self.values**p)

    def map(self, fn) -> "ScalarField":
        return ScalarField(self.grid, fn(self.values))


class VectorField:
    """Coordinate components ``(dim, *grid.shape)`` of a vector field."""

    __slots__ = ("grid", "components")

    def __init__(self, grid: GridSpec, components):
        components = np.array(components, dtype=float)
        if components.shape[1:] != grid.shape:
            raise GridMismatchError(
                f"components of shape {components.shape} on grid {grid.shape}"
            )
        components.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "components", components)

    def __setattr__(self, name, value):
        raise AttributeError("VectorField is immutable")

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def __repr__(self):
        return f"VectorField(dim={self.dim}, shape={self.grid.shape})"

    def apply(self, f: ScalarField) -> ScalarField:
        """Directional derivative ``u(f)``."""
        check_same_grid(self, f)
        return ScalarField(self.grid, np.einsum("i...,i...->...", self.components, gradient(f)))


def check_same_grid(*objs) -> None:
    g0 = objs[0].grid
    for o in objs[1:]:
        if not g0.same_as(o.grid):
            raise GridMismatchError("objects live on different grids")


def integrate(f: ScalarField) -> float:
    """Quadrature sum of ``f`` against the grid measure."""
    w = f.grid.weights
    if w.shape != f.values.shape:
        raise GridMismatchError("weights and values disagree in shape")
    return float(np.sum(w * f.values))


def l2_inner(f: ScalarField, g: ScalarField) -> float:
    check_same_grid(f, g)
    return float(np.sum(f.grid.weights * f.values * g.values))


def l2_norm(f: ScalarField) -> float:
    return float(np.sqrt(max(l2_inner(f, f), 0.0)))


def _periodic_derivative(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    ax = grid.axes[axis]
    k = grid.wavenumbers(axis) * (2 * np.pi / ax.period)
    if ax.n % 2 == 0:
        k[ax.n // 2] = 0.0
    hat = np.fft.fft(values, axis=axis)
    return np.real(np.fft.ifft(hat * grid.line(axis, 1j * k), axis=axis))


def _parity_masks(grid: GridSpec, axis: int) -> list[tuple[int, int, np.ndarray]]:
    sin_ax, cos_ax = grid.axes[axis].parity_axes
    shape = [1] * grid.ndim

    def parity(pax):
        if pax is None:
            return np.zeros(shape, dtype=int)
        return grid.line(pax, np.abs(grid.wavenumbers(pax)).astype(int) % 2)

    p, q = parity(sin_ax), parity(cos_ax)
    out = []
    for pp in (0, 1):
        for qq in (0, 1):
            out.append((pp, qq, (p == pp) & (q == qq)))
    return out


def _polar_derivative(values: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    cache = grid._polar_cache[axis]
    s, c, sin2 = (grid.line(axis, cache[k]) for k in ("s", "c", "sin2"))
    Du = cache["Du"]
    pax = sorted({a for a in grid.axes[axis].parity_axes if a is not None})
    hat = np.fft.fftn(values, axes=pax) if pax else values.astype(complex)
    out = np.zeros_like(hat)
    for p, q, mask in _parity_masks(grid, axis):
        if not mask.any():
            continue
        part = np.where(mask, hat, 0.0)
        Q = part / (s**p * c**q)
        Qu = np.moveaxis(np.tensordot(Du, np.moveaxis(Q, axis, 0), axes=(1, 0)), 0, axis)
        out += (p * c ** (q + 1) - q * s ** (p + 1)) * Q - 2 * sin2 * s**p * c**q * Qu
    if pax:
        out = np.fft.ifftn(out, axes=pax)
    return np.real(out)


def partial_derivative(f: ScalarField, axis: int | str) -> ScalarField:
    """Coordinate derivative of ``f`` along ``axis``."""
    grid = f.grid
    i = grid.axis_index(axis)
    if grid.axes[i].periodic:
        d = _periodic_derivative(f.values, grid, i)
    else:
        d = _polar_derivative(f.values, grid, i)
    return ScalarField(grid, d)


def gradient(f: ScalarField) -> np.ndarray:
    """All coordinate partials stacked as ``(ndim, *shape)``."""
    return np.stack([partial_derivative(f, i).values for i in range(f.grid.ndim)])


def _polar_basis(grid: GridSpec, axis: int, degree: int) -> np.ndarray:
    u = grid._polar_cache[axis]["u"]
    return np.stack([legendre.legval(u, np.eye(degree + 1)[j]) for j in range(degree + 1)])


def random_band_limited(seed: int, max_freq: int, grid: GridSpec) -> ScalarField:
    """Seeded real field with spectrum supported on ``|k| <= max_freq`` per axis.

    Fourier coefficients on periodic axes are complex standard normals.  On a
    ``hopf_polar`` axis the profile of each Fourier mode is
    ``sin^|k1| cos^|k2|`` times a Legendre series in ``cos(2 eta)`` of degree
    ``max_freq``, which keeps the sample smooth on the 3-sphere.
    """
    for ax in grid.axes:
        if max_freq >= ax.n // 2:
            raise ValueError(
                f"max_freq={max_freq} reaches the Nyquist limit of axis {ax.name!r} (n={ax.n})"
            )
    if max_freq < 0:
        raise ValueError("max_freq must be nonnegative")
    rng = np.random.default_rng(seed)
    per = [i for i, ax in enumerate(grid.axes) if ax.periodic]
    polar = [i for i, ax in enumerate(grid.axes) if not ax.periodic]
    if len(polar) > 1:
        raise ValueError("at most one hopf_polar axis is supported")

    per_shape = [grid.axes[i].n for i in per]
    box = np.ones(per_shape, dtype=bool)
    for j, i in enumerate(per):
        k = np.abs(grid.wavenumbers(i)) <= max_freq
        sh = [1] * len(per)
        sh[j] = -1
        box = box & k.reshape(sh)
    npts = int(np.prod(per_shape)) if per else 1

    if not polar:
        coef = np.zeros(per_shape, dtype=complex)
        m = int(box.sum())
        coef[box] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        vals = np.real(np.fft.ifftn(coef)) * npts
        return ScalarField(grid, vals)

    a = polar[0]
    deg = max_freq
    m = int(box.sum())
    coef = np.zeros((deg + 1, *per_shape), dtype=complex)
    coef[:, box] = rng.standard_normal((deg + 1, m)) + 1j * rng.standard_normal((deg + 1, m))
    P = _polar_basis(grid, a, deg)  # (deg+1, n_eta)
    amp = np.tensordot(P.T, coef, axes=(1, 0))  # (n_eta, *per_shape)
    cache = grid._polar_cache[a]
    sin_ax, cos_ax = grid.axes[a].parity_axes
    fac = np.ones((grid.axes[a].n, *per_shape))
    for pax, prof in ((sin_ax, cache["s"]), (cos_ax, cache["c"])):
        if pax is None:
            continue
        j = per.index(pax)
        kk = np.abs(grid.wavenumbers(pax))
        sh = [grid.axes[a].n] + [1] * len(per)
        sh[j + 1] = -1
        fac = fac * (prof[:, None] ** kk[None, :]).reshape(sh)
    amp = amp * fac
    vals = np.real(np.fft.ifftn(amp, axes=tuple(range(1, len(per) + 1)))) * npts
    # restore the grid's axis order: polar axis first in amp
    order = [a] + per
    vals = np.transpose(vals, np.argsort(order))
    return ScalarField(grid, vals)


def spectral_energy(f: ScalarField, cutoff: float) -> tuple[float, float]:
    """Return (tail, total) Fourier energy over the periodic axes.

    The tail holds every mode with ``|k_i| > cutoff * (n_i / 2)`` on some
    periodic axis.
    """
    grid = f.grid
    per = [i for i, ax in enumerate(grid.axes) if ax.periodic]
    if not per:
        return 0.0, float(np.sum(f.values**2))
    hat = np.fft.fftn(f.values, axes=per)
    power = np.abs(hat) ** 2
    tail_mask = np.zeros(grid.shape, dtype=bool)
    for i in per:
        k = np.abs(grid.wavenumbers(i))
        tail_mask = tail_mask | grid.line(i, k > cutoff * (grid.axes[i].n / 2))
    return float(power[np.broadcast_to(tail_mask, power.shape)].sum()), float(power.sum())


def write_field(path: str | Path, f: ScalarField) -> Path:
    """Write ``f`` to a CEAF binary container plus a JSON grid sidecar."""
    path = Path(path)
    shape = f.grid.shape
    header = CONTAINER_MAGIC + struct.pack(f"<QQ{len(shape)}Q", CONTAINER_VERSION, len(shape), *shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C"))
    path.with_suffix(".json").write_text(json.dumps(f.grid.to_dict(), indent=2) + "\n")
    return path


def read_field(path: str | Path, grid: GridSpec | None = None) -> ScalarField:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != CONTAINER_MAGIC:
        raise ValueError("not a CEAF container")
    version, naxes = struct.unpack_from("<QQ", data, 4)
    if version != CONTAINER_VERSION:
        raise ValueError(f"unsupported container version {version}")
    shape = struct.unpack_from(f"<{naxes}Q", data, 20)
    offset = 20 + 8 * naxes
    values = np.frombuffer(data, dtype="<f8", offset=offset).reshape(shape)
    if grid is None:
        grid = GridSpec.from_dict(json.loads(path.with_suffix(".json").read_text()))
    if grid.shape != tuple(shape):
        raise GridMismatchError(f"container shape {shape} does not match grid {grid.shape}")
    return ScalarField(grid, values.astype(float))


def grid_from_axes(axes: Sequence[Axis]) -> GridSpec:
    return GridSpec(tuple(axes))
