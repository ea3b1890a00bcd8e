"""Mass redistribution between components and its two closed forms.

A redistribution maps an n-tuple of amplitudes f to an m-tuple g via
g_l = sqrt(sum_k a_lk f_k^2) with nonnegative coefficients whose columns
sum to one.  It preserves the pointwise total density and never increases
the total kinetic energy; those two facts drive both ground-state
characterizations, through the specific maps gamma_star * |u| (shared
profile, used for c_s < 0) and the two-component absorption of u0 (used
for c_s > 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Grid, ScalarField, kinetic_density_values
from .model import ModelParams, StateTriple, state_from_values


@dataclass(frozen=True)
class RedistributionMatrix:
    """Nonnegative coefficients a (m x n) with unit column sums."""

    a: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.a, dtype=float))
        if a.min() < 0.0:
            raise ValueError(f"negative redistribution coefficient {a.min()}")
        colsums = a.sum(axis=0)
        worst = np.abs(colsums - 1.0).max()
        if worst > 1e-12:
            raise ValueError(f"column sums deviate from 1 by {worst}")
        a.flags.writeable = False
        object.__setattr__(self, "a", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape


def redistribute(
    fields: Sequence[ScalarField], A: RedistributionMatrix
) -> tuple[ScalarField, ...]:
    """Apply g_l = sqrt(sum_k a_lk f_k^2) pointwise.

    Only the squares of the inputs enter, so the pointwise total density
    |g| = |f| is preserved exactly up to round-off.
    """
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise ValueError("fields live on different grids")
    m, n = A.shape
    if n != len(fields):
        raise ValueError(f"matrix has {n} columns, got {len(fields)} fields")
    sq = np.stack([f.values**2 for f in fields])
    return tuple(ScalarField(grid, np.sqrt(A.a[l] @ sq)) for l in range(m))


def kinetic_defect(fields: Sequence[ScalarField], A: RedistributionMatrix) -> float:
    """Total kinetic energy of the inputs minus that of the redistribution.

    Nonnegative up to round-off; zero exactly when the components coupled
    by any row are pairwise proportional.
    """
    out = redistribute(fields, A)
    grid, w = fields[0].grid, fields[0].grid.weights
    before = sum(float(w @ kinetic_density_values(grid, f.values)) for f in fields)
    after = sum(float(w @ kinetic_density_values(grid, g.values)) for g in out)
    return before - after


@dataclass(frozen=True)
class GammaTriple:
    """Nonnegative mixing coefficients (gamma1, gamma0, gamma_m1)."""

    gamma1: float
    gamma0: float
    gamma_m1: float

    @property
    def as_tuple(self) -> tuple[float, float, float]:
        return (self.gamma1, self.gamma0, self.gamma_m1)


def gamma_residuals(g: GammaTriple, p: ModelParams) -> tuple[float, float]:
    """Residuals of the two admissibility constraints on a mixing triple."""
    s = g.gamma1**2 + g.gamma0**2 + g.gamma_m1**2
    d = g.gamma1**2 - g.gamma_m1**2
    return abs(s - 1.0), abs(d - p.M / p.N)


def gamma_star(p: ModelParams) -> GammaTriple:
    """The unique admissible triple maximizing the spin weight (value 1).

    Closed form: gamma1 = (1 + M/N)/2, gamma0 = sqrt((1 - (M/N)^2)/2),
    gamma_m1 = (1 - M/N)/2.
    """
    m = p.M / p.N
    return GammaTriple(
        0.5 * (1.0 + m), np.sqrt(0.5 * (1.0 - m * m)), 0.5 * (1.0 - m)
    )


def gamma_family(w: float, p: ModelParams) -> GammaTriple:
    """Admissible triple with gamma0^2 = w; sweeps the whole constraint set.

    Valid for 0 <= w <= 1 - |M|/N.
    """
    m = p.M / p.N
    if not (-1e-15 <= w <= 1.0 - abs(m) + 1e-15):
        raise ValueError(f"w = {w} outside [0, {1.0 - abs(m)}]")
    w = min(max(w, 0.0), 1.0 - abs(m))
    g1sq = 0.5 * (1.0 - w + m)
    gm1sq = 0.5 * (1.0 - w - m)
    return GammaTriple(np.sqrt(g1sq), np.sqrt(w), np.sqrt(max(gm1sq, 0.0)))


def spin_weight(g: GammaTriple, p: ModelParams) -> float:
    """P(gamma) = 2*gamma0^2*(gamma1 + gamma_m1)^2 + (M/N)^2, in [M^2/N^2, 1]."""
    rs, rd = gamma_residuals(g, p)
    if max(rs, rd) > 1e-10:
        raise ValueError(f"triple violates admissibility by {max(rs, rd)}")
    m = p.M / p.N
    return 2.0 * g.gamma0**2 * (g.gamma1 + g.gamma_m1) ** 2 + m * m


def sma_redistribute(u: StateTriple, p: ModelParams) -> StateTriple:
    """Shared-profile redistribution gamma_star * |u|.

    Preserves both constraint functionals when the input satisfies them,
    and never increases the energy for c_s < 0.
    """
    g = gamma_star(p)
    mag = np.sqrt(sum(f.values**2 for f in u.fields))
    return state_from_values(
        u.grid, g.gamma1 * mag, g.gamma0 * mag, g.gamma_m1 * mag
    )


def antiferro_redistribute(u: StateTriple) -> StateTriple:
    """Absorb u0's mass equally into the two outer components.

    Output has zero middle component, the same pointwise density, and the
    same pointwise u1^2 - um1^2, so both constraints are untouched; for
    c_s > 0 the energy never increases.
    """
    half = 0.5 * u.u0.values**2
    return state_from_values(
        u.grid,
        np.sqrt(u.u1.values**2 + half),
        np.zeros(u.grid.size),
        np.sqrt(u.um1.values**2 + half),
    )
