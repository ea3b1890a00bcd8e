"""Uniform box grids, finite differences, and trapezoidal quadrature.

Everything downstream (energies, flows, verification metrics) is built on
the operations here: first derivatives use central differences in the
interior and one-sided differences at the boundary, the Laplacian uses the
standard second-order stencil with ghost values set by the boundary
condition, and integrals use composite trapezoidal weights.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np


class Boundary(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


def _as_pairs(extents, dim: int) -> tuple[tuple[float, float], ...]:
    ext = list(extents)
    if len(ext) == 2 and np.isscalar(ext[0]):
        ext = [tuple(ext)] * dim
    if len(ext) != dim:
        raise ValueError(f"expected {dim} extent pairs, got {len(ext)}")
    return tuple((float(lo), float(hi)) for lo, hi in ext)


def _as_counts(points, dim: int) -> tuple[int, ...]:
    if np.isscalar(points):
        counts = (int(points),) * dim
    else:
        counts = tuple(int(n) for n in points)
    if len(counts) != dim:
        raise ValueError(f"expected {dim} point counts, got {len(counts)}")
    return counts


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid over an axis-aligned box.

    Nodes include both endpoints of every axis, stored in row-major order,
    so ``spacing[k] = (hi - lo) / (points[k] - 1)`` exactly.
    """

    dim: int
    extents: tuple[tuple[float, float], ...]
    points: tuple[int, ...]
    boundary: Boundary

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.points)
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @cached_property
    def size(self) -> int:
        return int(np.prod(self.points))

    @cached_property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.extents]))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        """Per-axis node coordinates."""
        return tuple(
            np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.points)
        )

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Flat coordinate arrays, one per axis, aligned with field storage."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return tuple(m.ravel() for m in mesh)

    @cached_property
    def weights(self) -> np.ndarray:
        """Flat composite-trapezoid quadrature weights."""
        w = np.array([1.0])
        for h, n in zip(self.spacing, self.points):
            wa = np.full(n, h)
            wa[0] *= 0.5
            wa[-1] *= 0.5
            w = np.multiply.outer(w, wa)
        return w.reshape(-1)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        """Flat mask, True at nodes not on the box boundary."""
        mask = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[ax] = 0
            mask[tuple(idx)] = False
            idx[ax] = -1
            mask[tuple(idx)] = False
        return mask.reshape(-1)


def build_grid(dim, extents, points, boundary=Boundary.DIRICHLET) -> Grid:
    """Construct a grid, validating extents and minimum resolution."""
    dim = int(dim)
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if isinstance(boundary, str):
        boundary = Boundary(boundary.lower())
    ext = _as_pairs(extents, dim)
    counts = _as_counts(points, dim)
    for lo, hi in ext:
        if not hi > lo:
            raise ValueError(f"extent [{lo}, {hi}] must have hi > lo")
    for n in counts:
        if n < 8:
            raise ValueError(f"need at least 8 points per axis, got {n}")
    return Grid(dim=dim, extents=ext, points=counts, boundary=boundary)


@dataclass(frozen=True)
class ScalarField:
    """Real-valued function sampled on a grid (values are read-only)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise ValueError(
                f"field has {vals.size} values, grid has {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def field_from_callable(grid: Grid, fn) -> ScalarField:
    """Sample ``fn(x)`` (1D) or ``fn(x, y)`` (2D) on the grid."""
    return ScalarField(grid, fn(*grid.coords))


def integrate(f: ScalarField) -> float:
    """Composite trapezoidal quadrature of ``f`` over the box."""
    return float(f.grid.weights @ f.values)


def inner(f: ScalarField, g: ScalarField) -> float:
    """Quadrature inner product of two fields on the same grid."""
    if f.grid is not g.grid and f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return float(f.grid.weights @ (f.values * g.values))


def _diff_axis(a: np.ndarray, h: float) -> np.ndarray:
    """Central first difference along axis 0; one-sided at the ends."""
    g = np.empty_like(a)
    g[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    g[0] = (a[1] - a[0]) / h
    g[-1] = (a[-1] - a[-2]) / h
    return g


def _diff_adjoint_axis(b: np.ndarray, h: float) -> np.ndarray:
    """Transpose of :func:`_diff_axis` along axis 0."""
    out = np.zeros_like(b)
    out[2:] += b[1:-1] / (2.0 * h)
    out[:-2] -= b[1:-1] / (2.0 * h)
    out[1] += b[0] / h
    out[0] -= b[0] / h
    out[-1] += b[-1] / h
    out[-2] -= b[-1] / h
    return out


def _lap_axis(a: np.ndarray, h: float, boundary: Boundary) -> np.ndarray:
    """Second difference along axis 0 with ghost values from the boundary."""
    out = np.empty_like(a)
    out[1:-1] = a[2:] - 2.0 * a[1:-1] + a[:-2]
    if boundary is Boundary.DIRICHLET:
        out[0] = a[1] - 2.0 * a[0]
        out[-1] = a[-2] - 2.0 * a[-1]
    else:
        out[0] = 2.0 * (a[1] - a[0])
        out[-1] = 2.0 * (a[-2] - a[-1])
    return out / h**2


def gradient_values(grid: Grid, values: np.ndarray) -> list[np.ndarray]:
    """Per-axis first-derivative arrays (flat), central/one-sided stencil."""
    a = values.reshape(grid.shape)
    out = []
    for ax, h in enumerate(grid.spacing):
        g = np.moveaxis(_diff_axis(np.moveaxis(a, ax, 0), h), 0, ax)
        out.append(np.ascontiguousarray(g).reshape(-1))
    return out


def gradient_components(f: ScalarField) -> tuple[ScalarField, ...]:
    return tuple(ScalarField(f.grid, g) for g in gradient_values(f.grid, f.values))


def kinetic_density_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.size)
    for g in gradient_values(grid, values):
        out += g * g
    return out


def kinetic_density(f: ScalarField) -> ScalarField:
    """Pointwise squared gradient magnitude ``|grad f|^2``."""
    return ScalarField(f.grid, kinetic_density_values(f.grid, f.values))


def kinetic_gradient_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Exact quadrature gradient of the discrete kinetic energy.

    Returns K f with d/de [ integral of |grad(f + e w)|^2 ] at e = 0 equal
    to 2 <K f, w> in the trapezoid inner product, for arbitrary w.  K is the
    weighted adjoint D^T W D of the first-difference operator, a wide
    second-order Laplacian in the interior.
    """
    w = grid.weights.reshape(grid.shape)
    a = values.reshape(grid.shape)
    out = np.zeros(grid.shape)
    for ax, h in enumerate(grid.spacing):
        am = np.moveaxis(a, ax, 0)
        wm = np.moveaxis(w, ax, 0)
        d = _diff_axis(am, h)
        out += np.moveaxis(_diff_adjoint_axis(wm * d, h), 0, ax)
    return (out / w).reshape(-1)


def kinetic_gradient(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, kinetic_gradient_values(f.grid, f.values))


def laplacian_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    a = values.reshape(grid.shape)
    out = np.zeros(grid.shape)
    for ax, h in enumerate(grid.spacing):
        am = np.moveaxis(a, ax, 0)
        out += np.moveaxis(_lap_axis(am, h, grid.boundary), 0, ax)
    return out.reshape(-1)


def laplacian(f: ScalarField) -> ScalarField:
    """Second-order Laplacian with ghost values fixed by ``grid.boundary``."""
    return ScalarField(f.grid, laplacian_values(f.grid, f.values))
