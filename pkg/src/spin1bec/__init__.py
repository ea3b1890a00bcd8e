"""Constrained ground states of three-component (spin-1) condensates.

Minimizes the amplitude-reduced Gross-Pitaevskii energy under fixed total
mass and magnetization by a projected gradient flow, and verifies the
structure of the minimizers: a shared spatial profile for ferromagnetic
coupling, an empty middle component for antiferromagnetic coupling with
nonzero magnetization, and a degenerate one-parameter family otherwise.
"""

from .grid import (
    Boundary,
    Grid,
    ScalarField,
    build_grid,
    field_from_callable,
    gradient_components,
    integrate,
    kinetic_density,
    kinetic_gradient,
    laplacian,
)
from .model import (
    EnergyBreakdown,
    ModelParams,
    PhaseTriple,
    StateTriple,
    WaveTriple,
    amplitude_energy,
    assemble_wavefunction,
    complex_energy,
    constraint_values,
    degenerate_energy,
    energy_gradient,
    single_mode_energy,
    spin_sign,
    state_from_values,
)
from .redistribute import (
    GammaTriple,
    RedistributionMatrix,
    antiferro_redistribute,
    gamma_family,
    gamma_star,
    kinetic_defect,
    redistribute,
    sma_redistribute,
    spin_weight,
)
from .solver import (
    Coupling,
    InitKind,
    Multipliers,
    ProjectionError,
    SingleModeReport,
    SolveReport,
    SolverOptions,
    brute_force_ground_state,
    el_residual,
    flow_step,
    lagrange_multipliers,
    project_constraints,
    solve_ground_state,
    solve_single_mode,
)
from .analysis import (
    ComponentClass,
    ConstantStateReport,
    Regime,
    SmaDeviation,
    VerificationReport,
    component_classification,
    constant_state_diagnostic,
    degenerate_family,
    sma_deviation,
    verify,
)

__version__ = "0.1.0"
