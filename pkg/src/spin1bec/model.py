"""Energy functionals for three-component condensate amplitudes.

The reduced energy of an amplitude triple u = (u1, u0, um1) with coupling
constants c_n (density) and c_s (spin exchange) is

    E[u] = integral of  sum_j |grad u_j|^2 + V |u|^2 + c_n |u|^4
           + c_s * [ 2 u0^2 (u1 + s*um1)^2 + (u1^2 - um1^2)^2 ],

where the sign s is +1 for c_s < 0 and -1 for c_s > 0.  Minimization is
subject to fixed total mass N = integral |u|^2 and fixed magnetization
M = integral (u1^2 - um1^2).  This module evaluates E, its exact discrete
gradient, the one-component reductions, and the map back to complex wave
functions with constant phases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Grid,
    ScalarField,
    gradient_values,
    kinetic_density_values,
    kinetic_gradient_values,
)

NEG_TOL = 1e-12

# Spin-1 matrices; rows/columns ordered (m=1, m=0, m=-1).
SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / np.sqrt(2.0)
SY = 1j * np.array([[0, -1, 0], [1, 0, -1], [0, 1, 0]], dtype=complex) / np.sqrt(2.0)
SZ = np.array([[1, 0, 0], [0, 0, 0], [0, 0, -1]], dtype=complex)


def spin_sign(c_s: float) -> int:
    """Sign convention in the spin-exchange term: +1 for c_s < 0, else -1.

    At c_s = 0 the term vanishes, so the (+1) choice is unobservable.
    """
    return -1 if c_s > 0 else 1


@dataclass(frozen=True)
class ModelParams:
    """Couplings, trap potential, and constraint totals.

    Attributes:
        c_n: density (spin-independent) coupling.
        c_s: spin-exchange coupling; < 0 ferromagnetic, > 0 antiferromagnetic.
        V: trap potential sampled on the grid.
        N: total mass, must be > 0.
        M: magnetization, must satisfy |M| < N (|M| = N degenerates to a
           single-component problem and is rejected).
    """

    c_n: float
    c_s: float
    V: ScalarField
    N: float
    M: float

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError(f"total mass N must be positive, got {self.N}")
        if not abs(self.M) < self.N:
            raise ValueError(
                f"|M| = {abs(self.M)} must be < N = {self.N} "
                "(equality reduces to a one-component problem)"
            )

    @property
    def grid(self) -> Grid:
        return self.V.grid

    @property
    def sign(self) -> int:
        return spin_sign(self.c_s)


@dataclass(frozen=True)
class StateTriple:
    """Amplitude triple (u1, u0, um1), nonnegative fields on one grid."""

    u1: ScalarField
    u0: ScalarField
    um1: ScalarField

    def __post_init__(self):
        g = self.u1.grid
        if self.u0.grid != g or self.um1.grid != g:
            raise ValueError("state components live on different grids")
        low = min(f.values.min() for f in self.fields)
        if low < -NEG_TOL:
            raise ValueError(f"state has negative amplitude {low}")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def fields(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return (self.u1, self.u0, self.um1)

    def stack(self) -> np.ndarray:
        """Copy of the component values as a (3, size) array."""
        return np.stack([f.values for f in self.fields])


def state_from_values(grid: Grid, u1, u0, um1) -> StateTriple:
    return StateTriple(
        ScalarField(grid, u1), ScalarField(grid, u0), ScalarField(grid, um1)
    )


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    potential: float
    density_interaction: float
    spin_interaction: float
    total: float


@dataclass(frozen=True)
class PhaseTriple:
    """Constant phases (radians) for the three components."""

    theta1: float
    theta0: float
    theta_m1: float

    def defect(self, sign: int) -> float:
        """Distance of cos(theta1 - 2*theta0 + theta_m1) from the sign."""
        return abs(np.cos(self.theta1 - 2.0 * self.theta0 + self.theta_m1) - sign)


@dataclass(frozen=True)
class WaveTriple:
    """Complex three-component wave function on a grid."""

    grid: Grid
    psi1: np.ndarray
    psi0: np.ndarray
    psi_m1: np.ndarray

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.psi1, self.psi0, self.psi_m1)


def _spin_integrand(u1, u0, um1, sign: int) -> np.ndarray:
    return 2.0 * u0**2 * (u1 + sign * um1) ** 2 + (u1**2 - um1**2) ** 2


def amplitude_energy_values(
    grid: Grid, U: np.ndarray, Vv: np.ndarray, c_n: float, c_s: float, sign: int
) -> tuple[float, float, float, float]:
    """Energy parts (kinetic, potential, density, spin) from raw arrays."""
    w = grid.weights
    u1, u0, um1 = U
    kin = sum(float(w @ kinetic_density_values(grid, u)) for u in U)
    dens = u1**2 + u0**2 + um1**2
    pot = float(w @ (Vv * dens))
    dint = c_n * float(w @ dens**2)
    sint = c_s * float(w @ _spin_integrand(u1, u0, um1, sign))
    return kin, pot, dint, sint


def amplitude_energy(u: StateTriple, p: ModelParams) -> EnergyBreakdown:
    """Evaluate the reduced energy of an amplitude triple, split into parts."""
    if u.grid != p.grid:
        raise ValueError("state and params live on different grids")
    kin, pot, dint, sint = amplitude_energy_values(
        u.grid, u.stack(), p.V.values, p.c_n, p.c_s, p.sign
    )
    return EnergyBreakdown(kin, pot, dint, sint, kin + pot + dint + sint)


def energy_gradient_values(
    grid: Grid, U: np.ndarray, Vv: np.ndarray, c_n: float, c_s: float, sign: int
) -> np.ndarray:
    """Exact discrete gradient G of the amplitude energy, as a (3, size) array.

    Normalized so that d/de E[u + e*w] at e = 0 equals 2 * sum_j <G_j, w_j>
    in the quadrature inner product, for arbitrary directions w.
    """
    u1, u0, um1 = U
    dens = u1**2 + u0**2 + um1**2
    common = Vv + 2.0 * c_n * dens
    pair = u1 + sign * um1
    diff = u1**2 - um1**2
    G = np.empty_like(U)
    G[0] = kinetic_gradient_values(grid, u1) + common * u1
    G[1] = kinetic_gradient_values(grid, u0) + common * u0
    G[2] = kinetic_gradient_values(grid, um1) + common * um1
    G[0] += 2.0 * c_s * (u0**2 * pair + u1 * diff)
    G[1] += 2.0 * c_s * u0 * pair**2
    G[2] += 2.0 * c_s * (u0**2 * sign * pair - um1 * diff)
    return G


def energy_gradient(
    u: StateTriple, p: ModelParams
) -> tuple[ScalarField, ScalarField, ScalarField]:
    G = energy_gradient_values(u.grid, u.stack(), p.V.values, p.c_n, p.c_s, p.sign)
    return tuple(ScalarField(u.grid, g) for g in G)


def _check_single_mode(f: ScalarField, p: ModelParams) -> None:
    if f.grid != p.grid:
        raise ValueError("field and params live on different grids")
    if f.values.min() < -NEG_TOL:
        raise ValueError(f"profile has negative amplitude {f.values.min()}")
    mass = float(f.grid.weights @ f.values**2)
    if abs(mass - p.N) > 1e-8 * p.N:
        raise ValueError(f"profile mass {mass} violates N = {p.N}")


def single_mode_energy(f: ScalarField, p: ModelParams) -> float:
    """One-component energy with quartic coupling c_n + c_s.

    For c_s <= 0 this equals the full energy of the shared-profile state
    built from ``f`` with the optimal mixing coefficients.
    """
    _check_single_mode(f, p)
    w = f.grid.weights
    kin = float(w @ kinetic_density_values(f.grid, f.values))
    return kin + float(
        w @ (p.V.values * f.values**2 + (p.c_n + p.c_s) * f.values**4)
    )


def degenerate_energy(f: ScalarField, p: ModelParams) -> float:
    """One-component energy with quartic coupling c_n only (spin term absent)."""
    _check_single_mode(f, p)
    w = f.grid.weights
    kin = float(w @ kinetic_density_values(f.grid, f.values))
    return kin + float(w @ (p.V.values * f.values**2 + p.c_n * f.values**4))


def assemble_wavefunction(
    u: StateTriple, theta: PhaseTriple, c_s: float
) -> WaveTriple:
    """Attach constant phases: psi_j = u_j * exp(i * theta_j).

    The phases must satisfy cos(theta1 - 2*theta0 + theta_m1) = +1 for
    c_s < 0 and -1 for c_s > 0, the condition under which the complex
    energy collapses to the amplitude energy.
    """
    d = theta.defect(spin_sign(c_s))
    if d > 1e-10:
        raise ValueError(f"phase condition violated by {d}")
    phases = [np.exp(1j * t) for t in (theta.theta1, theta.theta0, theta.theta_m1)]
    psi = [f.values * ph for f, ph in zip(u.fields, phases)]
    return WaveTriple(u.grid, *psi)


def complex_energy(psi: WaveTriple, p: ModelParams) -> float:
    """Full energy of a complex wave function, via the explicit spin matrices."""
    if psi.grid != p.grid:
        raise ValueError("wave function and params live on different grids")
    grid, w = psi.grid, psi.grid.weights
    comps = np.stack(psi.components)
    kin = sum(
        float(w @ kinetic_density_values(grid, part))
        for c in comps
        for part in (c.real, c.imag)
    )
    dens = np.sum(np.abs(comps) ** 2, axis=0)
    spin_sq = np.zeros(grid.size)
    for S in (SX, SY, SZ):
        field = np.einsum("ix,ij,jx->x", comps.conj(), S, comps)
        spin_sq += np.abs(field) ** 2
    return kin + float(
        w @ (p.V.values * dens + p.c_n * dens**2 + p.c_s * spin_sq)
    )


def constraint_values(state) -> tuple[float, float]:
    """Quadrature values (mass, magnetization) of a state or wave function.

    Accepts a :class:`StateTriple` or a :class:`WaveTriple`.
    """
    if isinstance(state, StateTriple):
        w = state.grid.weights
        sq = [f.values**2 for f in state.fields]
    else:
        w = state.grid.weights
        sq = [np.abs(c) ** 2 for c in state.components]
    mass = float(w @ (sq[0] + sq[1] + sq[2]))
    mag = float(w @ (sq[0] - sq[2]))
    return mass, mag


def wronskian_values(grid: Grid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise |a*grad(b) - b*grad(a)|^2 with the shared difference stencil."""
    out = np.zeros(grid.size)
    for da, db in zip(gradient_values(grid, a), gradient_values(grid, b)):
        out += (a * db - b * da) ** 2
    return out
