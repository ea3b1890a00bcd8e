"""Batch front-end: JSON configs, named presets, reports, and sweeps.

Exit codes: 0 success, 1 configuration error, 2 solver divergence,
3 verification verdict failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .grid import Boundary, Grid, ScalarField, build_grid
from .model import ModelParams, StateTriple, state_from_values
from .solver import (
    Coupling,
    InitKind,
    SolveReport,
    SolverOptions,
    solve_ground_state,
    solve_single_mode,
)
from .analysis import degenerate_family, verify


class ConfigError(ValueError):
    """Configuration problem; the message names the offending key."""


SWEEP_KEYS = ("M", "c_s", "c_n", "points", "t")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description (problem, physics, solver, outputs)."""

    dim: int
    extents: tuple
    points: tuple
    boundary: str
    potential: str
    potential_values: list | None
    c_n: float
    c_s: float
    N: float
    M: float
    solver: SolverOptions
    report_name: str
    dump_fields: bool
    fields_name: str

    def grid(self) -> Grid:
        try:
            return build_grid(self.dim, self.extents, self.points, self.boundary)
        except ValueError as exc:
            raise ConfigError(f"problem: {exc}") from exc

    def params(self) -> ModelParams:
        grid = self.grid()
        if self.potential == "zero":
            vals = np.zeros(grid.size)
        elif self.potential == "harmonic":
            vals = sum(x**2 for x in grid.coords)
        else:
            vals = np.array(self.potential_values, dtype=float)
            if vals.shape != (grid.size,):
                raise ConfigError(
                    f"problem.potential.values: expected {grid.size} entries, "
                    f"got {vals.size}"
                )
        try:
            return ModelParams(
                c_n=self.c_n, c_s=self.c_s, V=ScalarField(grid, vals),
                N=self.N, M=self.M,
            )
        except ValueError as exc:
            raise ConfigError(f"physics: {exc}") from exc


def _get(block: dict, key: str, kind, where: str, default=None, required=True):
    if key not in block:
        if required:
            raise ConfigError(f"missing key {where}.{key}")
        return default
    val = block[key]
    try:
        return kind(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{key}: {exc}") from exc


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    for block in ("problem", "physics"):
        if block not in raw or not isinstance(raw[block], dict):
            raise ConfigError(f"missing block '{block}'")
    prob, phys = raw["problem"], raw["physics"]
    sol = raw.get("solver", {})
    outs = raw.get("outputs", {})

    dim = _get(prob, "dim", int, "problem")
    extents = _get(prob, "extents", list, "problem")
    points = _get(prob, "points", lambda v: v, "problem")
    boundary = _get(prob, "boundary", str, "problem", default="dirichlet",
                    required=False).lower()
    if boundary not in ("dirichlet", "neumann"):
        raise ConfigError(f"problem.boundary: unknown value '{boundary}'")
    pot = prob.get("potential", {"kind": "harmonic"})
    if isinstance(pot, str):
        pot = {"kind": pot}
    kind = _get(pot, "kind", str, "problem.potential").lower()
    if kind not in ("zero", "harmonic", "tabulated"):
        raise ConfigError(f"problem.potential.kind: unknown value '{kind}'")
    pot_values = pot.get("values")
    if kind == "tabulated" and pot_values is None:
        raise ConfigError("missing key problem.potential.values")

    init_raw = sol.get("init", "auto")
    if init_raw in (None, "auto"):
        init = None
    else:
        try:
            init = InitKind(str(init_raw).lower())
        except ValueError as exc:
            raise ConfigError(f"solver.init: {exc}") from exc
    try:
        opts = SolverOptions(
            dt=_get(sol, "dt", float, "solver", default=2e-3, required=False),
            max_steps=_get(sol, "max_steps", int, "solver", default=500_000,
                           required=False),
            energy_tol=_get(sol, "energy_tol", float, "solver", default=1e-12,
                            required=False),
            residual_tol=_get(sol, "residual_tol", float, "solver",
                              default=1e-6, required=False),
            seed=_get(sol, "seed", int, "solver", default=0, required=False),
            init=init,
            multistart=_get(sol, "multistart", int, "solver", default=1,
                            required=False),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    return RunConfig(
        dim=dim,
        extents=tuple(tuple(e) if isinstance(e, (list, tuple)) else e
                      for e in extents),
        points=tuple(points) if isinstance(points, (list, tuple)) else (int(points),) * dim,
        boundary=boundary,
        potential=kind,
        potential_values=pot_values,
        c_n=_get(phys, "c_n", float, "physics"),
        c_s=_get(phys, "c_s", float, "physics"),
        N=_get(phys, "N", float, "physics"),
        M=_get(phys, "M", float, "physics"),
        solver=opts,
        report_name=_get(outs, "report", str, "outputs", default="report.json",
                         required=False),
        dump_fields=_get(outs, "dump_fields", bool, "outputs", default=False,
                         required=False),
        fields_name=_get(outs, "fields", str, "outputs", default="fields.csv",
                         required=False),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): "
            f"{exc.msg}"
        ) from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Presets: one per stock experiment; all run in seconds to a minute.

_HARMONIC_257 = {
    "dim": 1, "extents": [[-8.0, 8.0]], "points": [257],
    "boundary": "dirichlet", "potential": {"kind": "harmonic"},
}

PRESETS: dict[str, dict] = {
    "ferro-1d": {
        "description": "ferromagnetic trap, M = 0.3: shared-profile ground state",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": -1.0, "N": 1.0, "M": 0.3},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7},
    },
    "ferro-1d-M0": {
        "description": "ferromagnetic trap, M = 0",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": -1.0, "N": 1.0, "M": 0.0},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7},
    },
    "ferro-1d-M06": {
        "description": "ferromagnetic trap, M = 0.6",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": -1.0, "N": 1.0, "M": 0.6},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7},
    },
    "antiferro-1d-M03": {
        "description": "antiferromagnetic trap, M = 0.3: middle component empties",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": 1.0, "N": 1.0, "M": 0.3},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7,
                   "init": "gamma-star-gaussian"},
    },
    "antiferro-1d-M06": {
        "description": "antiferromagnetic trap, M = 0.6",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": 1.0, "N": 1.0, "M": 0.6},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7,
                   "init": "gamma-star-gaussian"},
    },
    "degenerate-1d": {
        "description": "antiferromagnetic trap, M = 0: degenerate family",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": 1.0, "N": 1.0, "M": 0.0},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7},
    },
    "zero-cs-1d": {
        "description": "no spin exchange (c_s = 0), M = 0",
        "problem": _HARMONIC_257,
        "physics": {"c_n": 100.0, "c_s": 0.0, "N": 1.0, "M": 0.0},
        "solver": {"dt": 4e-3, "residual_tol": 1e-7},
    },
    "antiferro-flat-neumann": {
        "description": "antiferromagnetic flat box (V = 0, Neumann): constant state",
        "problem": {"dim": 1, "extents": [[0.0, 1.0]], "points": [129],
                    "boundary": "neumann", "potential": {"kind": "zero"}},
        "physics": {"c_n": 2.0, "c_s": 1.0, "N": 1.0, "M": 0.3},
        "solver": {"dt": 1e-3, "residual_tol": 1e-9,
                   "init": "gamma-star-gaussian"},
    },
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset '{name}' (known: {known})")
    raw = {k: v for k, v in PRESETS[name].items() if k != "description"}
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Reports


def _report_dict(rep: SolveReport, ver: analysis.VerificationReport) -> dict:
    return {
        "converged": rep.converged,
        "steps": rep.steps,
        "seed": rep.seed,
        "message": rep.message,
        "energy": {
            "kinetic": rep.energy.kinetic,
            "potential": rep.energy.potential,
            "density_interaction": rep.energy.density_interaction,
            "spin_interaction": rep.energy.spin_interaction,
            "total": rep.energy.total,
        },
        "multipliers": {"mu": rep.multipliers.mu, "lambda": rep.multipliers.lam},
        "el_residual": rep.el_residual,
        "constraint_error": list(rep.constraint_error),
        "max_energy_increase": rep.max_energy_increase,
        "max_constraint_error": list(rep.max_constraint_error),
        "verification": {
            "regime": ver.regime.value,
            "sma_wronskian": ver.sma_wronskian,
            "sma_gamma_error": ver.sma_gamma_error,
            "pairing_error": ver.pairing_error,
            "u0_mass_fraction": ver.u0_mass_fraction,
            "component_class": [c.value for c in ver.component_class],
            "energy_total": ver.energy_total,
            "reference_energy": ver.reference_energy,
            "passed": ver.passed,
        },
    }


def dump_fields(path: Path, state: StateTriple) -> None:
    grid = state.grid
    headers = ["x", "y"][: grid.dim] + ["u1", "u0", "um1"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        cols = [*grid.coords, state.u1.values, state.u0.values, state.um1.values]
        for row in zip(*cols):
            writer.writerow([repr(float(v)) for v in row])


def load_fields(path: Path, grid: Grid) -> StateTriple:
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read state dump: {exc}") from exc
    if not rows:
        raise ConfigError("state dump is empty")
    header, data = rows[0], rows[1:]
    expected = ["x", "y"][: grid.dim] + ["u1", "u0", "um1"]
    if header != expected:
        raise ConfigError(
            f"state dump columns {header} do not match grid ({expected})"
        )
    if len(data) != grid.size:
        raise ConfigError(
            f"state dump has {len(data)} rows, grid has {grid.size} nodes"
        )
    try:
        arr = np.array(data, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"state dump has malformed numbers: {exc}") from exc
    off = grid.dim
    return state_from_values(grid, arr[:, off], arr[:, off + 1], arr[:, off + 2])


# ---------------------------------------------------------------------------
# Verbs


def run_solve(config: RunConfig, out_dir: Path) -> int:
    p = config.params()
    rep = solve_ground_state(p, opts=config.solver)
    ver = verify(rep.state, p)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _report_dict(rep, ver)
    (out_dir / config.report_name).write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if config.dump_fields:
        dump_fields(out_dir / config.fields_name, rep.state)
    if not rep.converged:
        print(f"solve did not converge: {rep.message}", file=sys.stderr)
        return 2
    if not ver.passed:
        print(f"verification failed in regime {ver.regime.value}", file=sys.stderr)
        return 3
    return 0


_SCALAR_COLUMNS = (
    "converged", "steps", "energy_total", "energy_kinetic", "energy_potential",
    "energy_density", "energy_spin", "mu", "lambda", "el_residual",
    "mass_error", "mag_error", "u1_mass_fraction", "u0_mass_fraction",
    "um1_mass_fraction", "sma_gamma_error", "sma_wronskian", "verdict",
)


def _sweep_row(rep: SolveReport, ver: analysis.VerificationReport, p: ModelParams) -> list:
    w = rep.state.grid.weights
    frac = [float(w @ f.values**2) / p.N for f in rep.state.fields]
    return [
        int(rep.converged), rep.steps, rep.energy.total, rep.energy.kinetic,
        rep.energy.potential, rep.energy.density_interaction,
        rep.energy.spin_interaction, rep.multipliers.mu, rep.multipliers.lam,
        rep.el_residual, rep.constraint_error[0], rep.constraint_error[1],
        frac[0], frac[1], frac[2], ver.sma_gamma_error, ver.sma_wronskian,
        int(ver.passed),
    ]


def run_sweep(config: RunConfig, key: str, values: list[float], out_dir: Path) -> int:
    if key not in SWEEP_KEYS:
        raise ConfigError(f"sweep key must be one of {SWEEP_KEYS}, got '{key}'")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = 0
    if key == "t":
        # Degenerate-family scan: one spin-free profile solve, then the
        # family energies and metrics at each t.
        p = config.params()
        f, ref = solve_single_mode(p, opts=config.solver, coupling=Coupling.CN_ONLY)
        for t in values:
            try:
                u = degenerate_family(f, float(t), p)
                from .model import amplitude_energy, constraint_values

                e = amplitude_energy(u, p)
                dev = analysis.sma_deviation(u, p)
                mass, mag = constraint_values(u)
                w = u.grid.weights
                frac = [float(w @ g.values**2) / p.N for g in u.fields]
                rows.append([float(t), int(ref.converged), ref.steps, e.total,
                             e.kinetic, e.potential, e.density_interaction,
                             e.spin_interaction, float("nan"), float("nan"),
                             ref.residual, abs(mass - p.N) / p.N,
                             abs(mag - p.M) / p.N, frac[0], frac[1], frac[2],
                             dev.gamma_error, dev.wronskian, 1])
            except (ValueError, ConfigError) as exc:
                failures += 1
                rows.append([float(t)] + ["error"] * (len(_SCALAR_COLUMNS) - 1)
                            + [str(exc)])
    else:
        for val in values:
            try:
                raw = {
                    "problem": {
                        "dim": config.dim,
                        "extents": [list(e) for e in config.extents],
                        "points": list(config.points),
                        "boundary": config.boundary,
                        "potential": {"kind": config.potential,
                                      "values": config.potential_values},
                    },
                    "physics": {"c_n": config.c_n, "c_s": config.c_s,
                                "N": config.N, "M": config.M},
                }
                if key == "points":
                    raw["problem"]["points"] = [int(val)] * config.dim
                else:
                    raw["physics"][key] = float(val)
                sub = parse_config(raw)
                p = sub.params()
                rep = solve_ground_state(p, opts=config.solver)
                ver = verify(rep.state, p)
                rows.append([float(val)] + _sweep_row(rep, ver, p))
                if not rep.converged:
                    failures += 1
            except (ValueError, ConfigError) as exc:
                failures += 1
                rows.append([float(val)] + ["error"] * (len(_SCALAR_COLUMNS) - 1)
                            + [str(exc)])
    path = out_dir / "sweep.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([key, *_SCALAR_COLUMNS])
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return 0 if failures == 0 else 2


def run_verify(config: RunConfig, state_path: Path, out_dir: Path) -> int:
    p = config.params()
    state = load_fields(state_path, p.grid)
    ver = verify(state, p)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "regime": ver.regime.value,
        "sma_wronskian": ver.sma_wronskian,
        "sma_gamma_error": ver.sma_gamma_error,
        "pairing_error": ver.pairing_error,
        "u0_mass_fraction": ver.u0_mass_fraction,
        "component_class": [c.value for c in ver.component_class],
        "energy_total": ver.energy_total,
        "reference_energy": ver.reference_energy,
        "passed": ver.passed,
    }
    (out_dir / "verification.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0 if ver.passed else 3


# ---------------------------------------------------------------------------
# Entry point


def _add_common(sub):
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", type=Path, help="JSON config file")
    group.add_argument("--preset", help="named preset (see 'presets')")
    sub.add_argument("--out", type=Path, default=Path("."), help="output directory")
    sub.add_argument("--seed", type=int, help="override solver seed")
    sub.add_argument("--dump-fields", action="store_true",
                     help="write the converged state as CSV")


def _resolve_config(args) -> RunConfig:
    cfg = preset_config(args.preset) if args.preset else load_config(args.config)
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(
            cfg, solver=dataclasses.replace(cfg.solver, seed=args.seed)
        )
    if getattr(args, "dump_fields", False):
        import dataclasses

        cfg = dataclasses.replace(cfg, dump_fields=True)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="spin1bec",
        description="Constrained ground states of three-component condensates",
    )
    subs = parser.add_subparsers(dest="verb", required=True)

    sub = subs.add_parser("solve", help="run one ground-state solve")
    _add_common(sub)

    sub = subs.add_parser("sweep", help="re-solve over a list of values")
    _add_common(sub)
    sub.add_argument("--key", required=True, choices=SWEEP_KEYS)
    sub.add_argument("--values", required=True,
                     help="comma-separated list of numbers")

    sub = subs.add_parser("verify", help="re-verify a stored state dump")
    _add_common(sub)
    sub.add_argument("--state", type=Path, required=True, help="fields CSV")

    subs.add_parser("presets", help="list available presets")

    args = parser.parse_args(argv)
    try:
        if args.verb == "presets":
            for name in sorted(PRESETS):
                print(f"{name}: {PRESETS[name]['description']}")
            return 0
        cfg = _resolve_config(args)
        if args.verb == "solve":
            return run_solve(cfg, args.out)
        if args.verb == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("--values is empty")
            return run_sweep(cfg, args.key, values, args.out)
        if args.verb == "verify":
            return run_verify(cfg, args.state, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
