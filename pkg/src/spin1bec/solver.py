"""Ground-state computation by normalized gradient flow.

The flow is explicit steepest descent on the amplitude energy with, after
every step, a clip to nonnegative values and an exact rescaling of the
three components back onto the mass and magnetization constraints.  The
rescaling solves sigma1^2*m1 + sigma0^2*m0 + sigma_m1^2*m_m1 = N and
sigma1^2*m1 - sigma_m1^2*m_m1 = M, closed with sigma0^2 = sigma1*sigma_m1
(the geometric-mean closure familiar from normalized-flow practice), which
reduces to one scalar quadratic.

Energy is monitored every step: a step that would raise it is retried with
a halved time step, so the recorded trajectory is non-increasing.  A
converged report certifies both constraint satisfaction and a small
Euler-Lagrange residual.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .grid import Boundary, Grid, ScalarField, kinetic_density_values, kinetic_gradient_values
from .model import (
    ModelParams,
    StateTriple,
    amplitude_energy,
    amplitude_energy_values,
    energy_gradient_values,
    state_from_values,
)
from .redistribute import gamma_family, gamma_star


class ProjectionError(ValueError):
    """Constraint projection has no solution for the given component masses."""


class InitKind(enum.Enum):
    GAMMA_STAR_GAUSSIAN = "gamma-star-gaussian"
    TWO_COMPONENT_GAUSSIAN = "two-component-gaussian"
    RANDOM_POSITIVE = "random-positive"
    CUSTOM = "custom"


class Coupling(enum.Enum):
    CN_PLUS_CS = "cn-plus-cs"
    CN_ONLY = "cn-only"


@dataclass(frozen=True)
class SolverOptions:
    """Flow controls.  ``init=None`` picks a default from the sign of c_s."""

    dt: float = 2e-3
    max_steps: int = 500_000
    energy_tol: float = 1e-12
    residual_tol: float = 1e-6
    seed: int = 0
    init: InitKind | None = None
    custom_state: StateTriple | None = None
    multistart: int = 1
    check_every: int = 50

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.energy_tol > 0 and self.residual_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Multipliers:
    mu: float
    lam: float


@dataclass(frozen=True)
class SolveReport:
    state: StateTriple
    energy: "EnergyBreakdown"
    multipliers: Multipliers
    el_residual: float
    constraint_error: tuple[float, float]
    steps: int
    converged: bool
    seed: int
    max_energy_increase: float
    max_constraint_error: tuple[float, float]
    energy_trace: np.ndarray
    message: str = ""


@dataclass(frozen=True)
class SingleModeReport:
    energy: float
    mu: float
    residual: float
    steps: int
    converged: bool
    max_energy_increase: float
    max_constraint_error: float
    energy_trace: np.ndarray
    message: str = ""


# ---------------------------------------------------------------------------
# Constraint projection


def _closure_scalings(m1: float, m0: float, mm1: float, N: float, M: float):
    """Solve the rescaling system for M >= 0; returns (a, b, s0) = squared sigmas."""
    if m0 == 0.0:
        if m1 == 0.0 or mm1 == 0.0:
            raise ProjectionError(
                f"cannot reach mass {N} and magnetization {M} with component "
                f"masses m1={m1}, m0={m0}, m-1={mm1}"
            )
        return (N + M) / (2.0 * m1), (N - M) / (2.0 * mm1), 1.0
    if m1 == 0.0:
        if M > 0.0:
            raise ProjectionError(f"u1 is empty but M = {M} > 0")
        # M == 0 here; the magnetization constraint empties u_{-1} too.
        return 1.0, 0.0, N / m0
    if mm1 == 0.0:
        return M / m1, 1.0, (N - M) / m0

    # One scalar equation in b = sigma_{-1}^2:
    #   m0 * sqrt(a b) = N - M - 2 b m_{-1},  a = (M + b m_{-1}) / m1.
    # Squaring gives a quadratic whose admissible root is the one in
    # [0, (N - M) / (2 m_{-1})] where the right side is nonnegative; Newton
    # steps then polish it down to round-off (the quadratic alone loses
    # accuracy near its double root when m0 is tiny, and energy
    # monotonicity needs the constraint restored to ~1e-15 relative).
    b_hi = (N - M) / (2.0 * mm1)
    P = m0 * m0 / m1
    c2 = 4.0 * mm1 * mm1 - P * mm1
    c1 = -(4.0 * mm1 * (N - M) + P * M)
    c0 = (N - M) ** 2

    def phi(b):
        return m0 * math.sqrt(max(b * (M + b * mm1) / m1, 0.0)) - (
            N - M - 2.0 * b * mm1
        )

    def dphi(b):
        rad = m1 * b * (M + b * mm1)
        if rad <= 0.0:
            return 2.0 * mm1
        return m0 * (M + 2.0 * b * mm1) / (2.0 * math.sqrt(rad)) + 2.0 * mm1

    disc = max(c1 * c1 - 4.0 * c2 * c0, 0.0)
    q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
    candidates = []
    if c2 != 0.0:
        candidates.append(q / c2)
    if q != 0.0:
        candidates.append(c0 / q)
    best = None
    for b in candidates:
        if -1e-14 * N <= b <= b_hi * (1.0 + 1e-12):
            b = min(max(b, 0.0), b_hi)
            r = abs(phi(b))
            if best is None or r < best[1]:
                best = (b, r)
    if best is not None:
        b, res = best
        for _ in range(4):
            if res <= 1e-15 * N:
                break
            step = phi(b) / dphi(b)
            b_new = min(max(b - step, 0.0), b_hi)
            res_new = abs(phi(b_new))
            if res_new >= res:
                break
            b, res = b_new, res_new
    if best is None or abs(phi(b)) > 1e-13 * N:
        # Safeguarded fallback: phi is monotone increasing on [0, b_hi].
        b = optimize.brentq(phi, 0.0, b_hi, xtol=1e-15 * max(N, 1.0), rtol=4e-16)
    a = (M + b * mm1) / m1
    return a, b, math.sqrt(max(a * b, 0.0))


def _project_values(
    U: np.ndarray, weights: np.ndarray, N: float, M: float
) -> tuple[np.ndarray, tuple[float, float]]:
    """Rescale components onto the constraints; returns (U', relative errors)."""
    masses = [float(weights @ (u * u)) for u in U]
    if M >= 0.0:
        a, b, s0 = _closure_scalings(masses[0], masses[1], masses[2], N, M)
    else:
        b, a, s0 = _closure_scalings(masses[2], masses[1], masses[0], N, -M)
    sig = np.sqrt(np.array([max(a, 0.0), max(s0, 0.0), max(b, 0.0)]))
    out = U * sig[:, None]
    mass = a * masses[0] + s0 * masses[1] + b * masses[2]
    mag = a * masses[0] - b * masses[2]
    return out, (abs(mass - N) / N, abs(mag - M) / N)


def project_constraints(v: StateTriple, p: ModelParams) -> StateTriple:
    """Rescale a nonnegative triple to satisfy both constraints exactly.

    The two constraints under-determine the three per-component scalings;
    the geometric-mean closure sigma0^2 = sigma1*sigma_m1 fixes the third
    degree of freedom (and is dropped automatically for empty components).
    """
    U, _ = _project_values(v.stack(), v.grid.weights, p.N, p.M)
    return state_from_values(v.grid, *U)


# ---------------------------------------------------------------------------
# Initial states


def _gaussian_values(grid: Grid) -> np.ndarray:
    out = np.ones(grid.size)
    for (lo, hi), x in zip(grid.extents, grid.coords):
        c = 0.5 * (lo + hi)
        width = (hi - lo) / 8.0
        out *= np.exp(-((x - c) ** 2) / (2.0 * width**2))
    return out


def _boundary_clamp(grid: Grid, U: np.ndarray) -> None:
    if grid.boundary is Boundary.DIRICHLET:
        U[..., ~grid.interior_mask] = 0.0


def _smooth(grid: Grid, a: np.ndarray, passes: int = 3) -> np.ndarray:
    out = a.reshape(grid.shape)
    for _ in range(passes):
        for ax in range(grid.dim):
            m = np.moveaxis(out, ax, 0)
            sm = m.copy()
            sm[1:-1] = 0.25 * m[:-2] + 0.5 * m[1:-1] + 0.25 * m[2:]
            out = np.moveaxis(sm, 0, ax)
    return out.reshape(-1)


def initial_state(p: ModelParams, opts: SolverOptions, seed: int) -> np.ndarray:
    """Build and project the flow's starting triple as a (3, size) array."""
    grid = p.grid
    kind = opts.init
    if kind is None:
        kind = (
            InitKind.TWO_COMPONENT_GAUSSIAN
            if p.c_s > 0
            else InitKind.GAMMA_STAR_GAUSSIAN
        )
    if kind is InitKind.CUSTOM:
        if opts.custom_state is None:
            raise ValueError("init=CUSTOM requires opts.custom_state")
        U = np.clip(opts.custom_state.stack(), 0.0, None)
    elif kind is InitKind.RANDOM_POSITIVE:
        rng = np.random.default_rng(seed)
        envelope = _gaussian_values(grid)
        U = np.stack(
            [
                (0.1 + rng.random(grid.size)) * envelope
                for _ in range(3)
            ]
        )
        U = np.stack([_smooth(grid, u) for u in U])
    else:
        g = _gaussian_values(grid)
        gam = (
            gamma_star(p)
            if kind is InitKind.GAMMA_STAR_GAUSSIAN
            else gamma_family(0.0, p)
        )
        U = np.stack([gam.gamma1 * g, gam.gamma0 * g, gam.gamma_m1 * g])
    _boundary_clamp(grid, U)
    U, _ = _project_values(U, grid.weights, p.N, p.M)
    return U


# ---------------------------------------------------------------------------
# Multipliers and stationarity


def _fit_multipliers(
    U: np.ndarray, G: np.ndarray, weights: np.ndarray, N: float
) -> Multipliers:
    rows, rhs = [], []
    coeff = [(1.0, 1.0), (1.0, 0.0), (1.0, -1.0)]
    for u, g, (cm, cl) in zip(U, G, coeff):
        m = float(weights @ (u * u))
        if m < 1e-12 * N:
            continue
        rows.append([cm * m, cl * m])
        rhs.append(float(weights @ (u * g)))
    if not rows:
        raise ValueError("all components are empty; multipliers undefined")
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return Multipliers(mu=float(sol[0]), lam=float(sol[1]))


def _residual_values(
    grid: Grid, U: np.ndarray, G: np.ndarray, m: Multipliers, N: float
) -> float:
    c = (m.mu + m.lam, m.mu, m.mu - m.lam)
    if grid.boundary is Boundary.DIRICHLET:
        free = grid.interior_mask
    else:
        free = slice(None)
    w = grid.weights[free]
    acc = 0.0
    for u, g, cj in zip(U, G, c):
        r = (g - cj * u)[free]
        acc += float(w @ (r * r))
    return math.sqrt(acc) / math.sqrt(N)


def lagrange_multipliers(u: StateTriple, p: ModelParams) -> Multipliers:
    """Least-squares multipliers from the three projected stationarity relations.

    Components with mass below 1e-12 * N are left out of the fit.
    """
    U = u.stack()
    G = energy_gradient_values(u.grid, U, p.V.values, p.c_n, p.c_s, p.sign)
    return _fit_multipliers(U, G, u.grid.weights, p.N)


def el_residual(u: StateTriple, p: ModelParams, m: Multipliers) -> float:
    """Stationarity defect sqrt(sum_j int |G_j - c_j u_j|^2) / sqrt(N).

    Measured over the free nodes (interior only under Dirichlet, where the
    boundary values are constrained rather than stationary).
    """
    U = u.stack()
    G = energy_gradient_values(u.grid, U, p.V.values, p.c_n, p.c_s, p.sign)
    return _residual_values(u.grid, U, G, m, p.N)


# ---------------------------------------------------------------------------
# Flow

_RAISE_TOL = 5e-13  # absolute energy increase triggering a dt retry


def flow_step(u: StateTriple, p: ModelParams, dt: float) -> StateTriple:
    """One explicit descent step followed by clip and constraint projection."""
    U = u.stack()
    G = energy_gradient_values(u.grid, U, p.V.values, p.c_n, p.c_s, p.sign)
    U = U - dt * G
    if not np.all(np.isfinite(U)):
        raise ValueError(f"flow step produced non-finite values (dt = {dt} too large?)")
    _boundary_clamp(u.grid, U)
    np.clip(U, 0.0, None, out=U)
    U, _ = _project_values(U, u.grid.weights, p.N, p.M)
    return state_from_values(u.grid, *U)


def _solve_once(p: ModelParams, opts: SolverOptions, seed: int) -> SolveReport:
    grid, w, Vv = p.grid, p.grid.weights, p.V.values
    U = initial_state(p, opts, seed)
    energy = lambda A: sum(
        amplitude_energy_values(grid, A, Vv, p.c_n, p.c_s, p.sign)
    )
    E = energy(U)
    trace = [E]
    dt = opts.dt
    max_inc = 0.0
    max_cerr = [0.0, 0.0]
    converged = False
    message = ""
    steps = 0
    last_rel_de = np.inf
    mult = None
    residual = np.inf

    while steps < opts.max_steps:
        G = energy_gradient_values(grid, U, Vv, p.c_n, p.c_s, p.sign)
        if steps % opts.check_every == 0:
            mult = _fit_multipliers(U, G, w, p.N)
            residual = _residual_values(grid, U, G, mult, p.N)
            if residual <= opts.residual_tol and last_rel_de <= opts.energy_tol:
                converged = True
                break
        retry = 0
        while True:
            trial = U - dt * G
            if not np.all(np.isfinite(trial)):
                message = f"non-finite state at step {steps} (dt = {dt})"
                break
            _boundary_clamp(grid, trial)
            np.clip(trial, 0.0, None, out=trial)
            try:
                trial, cerr = _project_values(trial, w, p.N, p.M)
            except ProjectionError as exc:
                message = f"projection failed at step {steps}: {exc}"
                break
            E_new = energy(trial)
            if E_new <= E + _RAISE_TOL:
                break
            retry += 1
            dt *= 0.5
            if retry > 60:
                message = f"energy could not be decreased at step {steps}"
                break
        if message:
            break
        max_inc = max(max_inc, E_new - E)
        max_cerr[0] = max(max_cerr[0], cerr[0])
        max_cerr[1] = max(max_cerr[1], cerr[1])
        last_rel_de = abs(E_new - E) / max(abs(E), 1.0)
        U, E = trial, E_new
        trace.append(E)
        steps += 1
        dt = min(opts.dt, dt * 1.25)
    else:
        message = f"no convergence within {opts.max_steps} steps"

    state = state_from_values(grid, *U)
    G = energy_gradient_values(grid, U, Vv, p.c_n, p.c_s, p.sign)
    mult = _fit_multipliers(U, G, w, p.N)
    residual = _residual_values(grid, U, G, mult, p.N)
    breakdown = amplitude_energy(state, p)
    from .model import constraint_values

    mass, mag = constraint_values(state)
    cerr_final = (abs(mass - p.N) / p.N, abs(mag - p.M) / p.N)
    if converged and (residual > opts.residual_tol or max(cerr_final) > 1e-10):
        converged = False
        message = "convergence certificate failed re-check"
    return SolveReport(
        state=state,
        energy=breakdown,
        multipliers=mult,
        el_residual=residual,
        constraint_error=cerr_final,
        steps=steps,
        converged=converged,
        seed=seed,
        max_energy_increase=max_inc,
        max_constraint_error=(max_cerr[0], max_cerr[1]),
        energy_trace=np.array(trace),
        message=message,
    )


def solve_ground_state(
    p: ModelParams, grid: Grid | None = None, opts: SolverOptions | None = None
) -> SolveReport:
    """Minimize the amplitude energy under both constraints.

    With ``opts.multistart > 1`` the flow is run from that many seeds
    (seed, seed+1, ...) and the lowest-energy converged run wins; energy
    ties within 1e-12 go to the lowest seed.
    """
    opts = opts or SolverOptions()
    if grid is not None and grid != p.grid:
        raise ValueError("grid does not match the potential's grid")
    if opts.multistart <= 1:
        return _solve_once(p, opts, opts.seed)
    best = None
    for k in range(opts.multistart):
        rep = _solve_once(p, opts, opts.seed + k)
        if best is None:
            best = rep
            continue
        if rep.energy.total < best.energy.total - 1e-12:
            best = rep
    return best


def solve_single_mode(
    p: ModelParams,
    grid: Grid | None = None,
    opts: SolverOptions | None = None,
    coupling: Coupling = Coupling.CN_PLUS_CS,
) -> tuple[ScalarField, SingleModeReport]:
    """Minimize the one-component energy with quartic coupling per ``coupling``.

    Same flow as the full solver, with the single mass constraint enforced
    by the scalar rescaling sqrt(N / int f^2).
    """
    opts = opts or SolverOptions()
    if grid is None:
        grid = p.grid
    elif grid != p.grid:
        raise ValueError("grid does not match the potential's grid")
    beta = p.c_n + p.c_s if coupling is Coupling.CN_PLUS_CS else p.c_n
    w, Vv = grid.weights, p.V.values

    def scale(a):
        m = float(w @ (a * a))
        if m <= 0.0:
            raise ProjectionError("profile has no mass to rescale")
        return a * math.sqrt(p.N / m), abs(m * (p.N / m) - p.N) / p.N

    def energy(a):
        kin = float(w @ kinetic_density_values(grid, a))
        return kin + float(w @ (Vv * a * a + beta * a**4))

    def gradient(a):
        return kinetic_gradient_values(grid, a) + Vv * a + 2.0 * beta * a**3

    if opts.init is InitKind.RANDOM_POSITIVE:
        rng = np.random.default_rng(opts.seed)
        f = _smooth(grid, (0.1 + rng.random(grid.size)) * _gaussian_values(grid))
    else:
        f = _gaussian_values(grid)
    if grid.boundary is Boundary.DIRICHLET:
        f = f * grid.interior_mask
    f, _ = scale(f)
    free = grid.interior_mask if grid.boundary is Boundary.DIRICHLET else slice(None)
    wf = w[free]

    E = energy(f)
    trace = [E]
    dt = opts.dt
    max_inc = 0.0
    max_cerr = 0.0
    converged = False
    message = ""
    steps = 0
    last_rel_de = np.inf
    mu = 0.0
    residual = np.inf

    while steps < opts.max_steps:
        G = gradient(f)
        if steps % opts.check_every == 0:
            mu = float(w @ (f * G)) / p.N
            r = (G - mu * f)[free]
            residual = math.sqrt(float(wf @ (r * r))) / math.sqrt(p.N)
            if residual <= opts.residual_tol and last_rel_de <= opts.energy_tol:
                converged = True
                break
        retry = 0
        while True:
            trial = f - dt * G
            if not np.all(np.isfinite(trial)):
                message = f"non-finite profile at step {steps} (dt = {dt})"
                break
            if grid.boundary is Boundary.DIRICHLET:
                trial = trial * grid.interior_mask
            np.clip(trial, 0.0, None, out=trial)
            trial, cerr = scale(trial)
            E_new = energy(trial)
            if E_new <= E + _RAISE_TOL:
                break
            retry += 1
            dt *= 0.5
            if retry > 60:
                message = f"energy could not be decreased at step {steps}"
                break
        if message:
            break
        max_inc = max(max_inc, E_new - E)
        max_cerr = max(max_cerr, cerr)
        last_rel_de = abs(E_new - E) / max(abs(E), 1.0)
        f, E = trial, E_new
        trace.append(E)
        steps += 1
        dt = min(opts.dt, dt * 1.25)
    else:
        message = f"no convergence within {opts.max_steps} steps"

    G = gradient(f)
    mu = float(w @ (f * G)) / p.N
    r = (G - mu * f)[free]
    residual = math.sqrt(float(wf @ (r * r))) / math.sqrt(p.N)
    report = SingleModeReport(
        energy=energy(f),
        mu=mu,
        residual=residual,
        steps=steps,
        converged=converged,
        max_energy_increase=max_inc,
        max_constraint_error=max_cerr,
        energy_trace=np.array(trace),
        message=message,
    )
    return ScalarField(grid, f), report


# ---------------------------------------------------------------------------
# Brute-force oracle


def brute_force_ground_state(
    p: ModelParams,
    grid: Grid | None = None,
    n_starts: int = 50,
    seed: int = 0,
) -> StateTriple:
    """Direct constrained minimization on a tiny 1D grid (independent oracle).

    Optimizes all free nodal values of the three components with SLSQP
    under the two equality constraints and nonnegativity bounds, from
    ``n_starts`` random feasible starts, and returns the best minimizer
    after an exact final projection.
    """
    if grid is None:
        grid = p.grid
    elif grid != p.grid:
        raise ValueError("grid does not match the potential's grid")
    if grid.dim != 1 or grid.size - 2 > 9:
        raise ValueError("brute force is restricted to 1D grids with <= 9 interior points")
    w, Vv = grid.weights, p.V.values
    if grid.boundary is Boundary.DIRICHLET:
        free = np.flatnonzero(grid.interior_mask)
    else:
        free = np.arange(grid.size)
    nf = free.size

    def unpack(x):
        U = np.zeros((3, grid.size))
        U[:, free] = x.reshape(3, nf)
        return U

    def objective(x):
        return sum(amplitude_energy_values(grid, unpack(x), Vv, p.c_n, p.c_s, p.sign))

    def objective_grad(x):
        U = unpack(x)
        G = energy_gradient_values(grid, U, Vv, p.c_n, p.c_s, p.sign)
        return (2.0 * w * G)[:, free].reshape(-1)

    def mass(x):
        U = unpack(x)
        return float(w @ (U[0] ** 2 + U[1] ** 2 + U[2] ** 2)) - p.N

    def mass_grad(x):
        return (2.0 * w * unpack(x))[:, free].reshape(-1)

    def mag(x):
        U = unpack(x)
        return float(w @ (U[0] ** 2 - U[2] ** 2)) - p.M

    def mag_grad(x):
        U = unpack(x)
        J = 2.0 * w * U
        J[1] = 0.0
        J[2] *= -1.0
        return J[:, free].reshape(-1)

    constraints = [
        {"type": "eq", "fun": mass, "jac": mass_grad},
        {"type": "eq", "fun": mag, "jac": mag_grad},
    ]
    rng = np.random.default_rng(seed)
    best_x, best_e = None, np.inf
    for _ in range(max(n_starts, 1)):
        U0 = 0.05 + rng.random((3, grid.size))
        _boundary_clamp(grid, U0)
        U0, _ = _project_values(U0, w, p.N, p.M)
        x0 = U0[:, free].reshape(-1)
        res = optimize.minimize(
            objective,
            x0,
            jac=objective_grad,
            bounds=[(0.0, None)] * (3 * nf),
            constraints=constraints,
            method="SLSQP",
            options={"maxiter": 400, "ftol": 1e-14},
        )
        if abs(mass(res.x)) > 1e-8 * p.N or abs(mag(res.x)) > 1e-8 * p.N:
            continue
        if res.fun < best_e:
            best_x, best_e = res.x, res.fun
    if best_x is None:
        raise RuntimeError("brute-force search found no feasible minimizer")
    U = np.clip(unpack(best_x), 0.0, None)
    U, _ = _project_values(U, w, p.N, p.M)
    return state_from_values(grid, *U)
