"""Cavity benchmark configurations, unit handling and result files.

The solver core works in reference units: length ``L = Lx``, density
``rho0``, temperature ``theta_ref = k_B T_ref / m`` (``T_ref`` the initial
temperature) and velocity ``sqrt(theta_ref)``. The Knudsen number is an
independent input used only in the collision frequency.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .collision import ARGON_MASS, ARGON_PRANDTL, VISCOSITY_INDEX, CollisionModel, GasParams
from .errors import ConfigError, NonConvergence
from .multigrid import DEFAULT_TOL, MIN_COARSE_CELLS, CyclePolicy, SolveReport, solve_steady
from .single_level import DEFAULT_CFL, CflPolicy
from .spatial import SIDES, CellField, Discretization, Grid2D, WallSpec

BOLTZMANN = 1.380649e-23  # J/K

FIELD_COLUMNS = ("x", "y", "rho", "u1", "u2", "T", "sigma11", "sigma12", "sigma22", "q1", "q2")
HISTORY_COLUMNS = ("iter", "rel_residual", "seconds")


def kelvin_to_theta(temperature: float, molecule_mass: float = ARGON_MASS) -> float:
    return BOLTZMANN * temperature / molecule_mass


def theta_to_kelvin(theta: float, molecule_mass: float = ARGON_MASS) -> float:
    return theta * molecule_mass / BOLTZMANN


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CollisionConfig(_Strict):
    model: Literal["BGK", "ES-BGK", "Shakhov"] = "Shakhov"
    prandtl: PositiveFloat = ARGON_PRANDTL


class GasConfig(_Strict):
    knudsen: Optional[PositiveFloat] = None
    viscosity_index: float = VISCOSITY_INDEX
    molecule_mass: PositiveFloat = ARGON_MASS


class GeometryConfig(_Strict):
    lx: PositiveFloat
    ly: PositiveFloat


class WallConfig(_Strict):
    velocity: float = 0.0  # m/s, +x for bottom/top, +y for left/right
    temperature: PositiveFloat  # K


class InitConfig(_Strict):
    density: Optional[PositiveFloat] = None  # kg/m^3
    velocity: tuple[float, float] = (0.0, 0.0)  # m/s
    temperature: PositiveFloat  # K


class CycleConfig(_Strict):
    s1: PositiveInt = 2
    s2: PositiveInt = 2
    s3: PositiveInt = 4
    gamma: Literal[1, 2] = 1


class ScenarioConfig(_Strict):
    scenario: Literal["single_lid", "four_lid", "bottom_heated", "custom"] = "custom"
    collision: CollisionConfig = CollisionConfig()
    M: int = Field(3, ge=3)
    nx: PositiveInt = 32
    ny: PositiveInt = 32
    order: Literal[1, 2] = 1
    solver: Literal["euler", "fs", "nmg"] = "nmg"
    levels: Union[Literal["auto"], PositiveInt] = "auto"
    cfl: float = Field(DEFAULT_CFL, gt=0.0, lt=1.0)
    tol: PositiveFloat = DEFAULT_TOL
    max_iter: Optional[PositiveInt] = None
    threads: PositiveInt = 1
    gas: GasConfig = GasConfig()
    geometry: GeometryConfig
    walls: dict[Literal["left", "right", "bottom", "top"], WallConfig]
    init: InitConfig
    cycle: CycleConfig = CycleConfig()
    output_dir: str = "output"

    @model_validator(mode="after")
    def _complete(self) -> "ScenarioConfig":
        missing = set(SIDES) - set(self.walls)
        if missing:
            raise ValueError(f"walls: missing {sorted(missing)}")
        if self.gas.knudsen is None:
            raise ValueError("gas.knudsen is required")
        if self.init.density is None:
            raise ValueError("init.density is required")
        return self


def _single_lid(user: dict) -> dict:
    kn = (user.get("gas") or {}).get("knudsen", 0.1)
    wall = {"velocity": 0.0, "temperature": 273.0}
    return {
        "geometry": {"lx": 9.63e-7, "ly": 9.63e-7},
        "gas": {"knudsen": kn},
        "walls": {"left": wall, "right": wall, "bottom": wall, "top": {"velocity": 50.0, "temperature": 273.0}},
        # 0.891 kg/m^3 at Kn = 0.1 and 0.0891 at Kn = 1: rho0 * Kn is fixed
        "init": {"density": 0.0891 / kn, "temperature": 273.0},
    }


def _four_lid(user: dict) -> dict:
    return {
        "geometry": {"lx": 1.0, "ly": 1.0},
        "gas": {"knudsen": 0.777},
        "walls": {
            "top": {"velocity": 50.0, "temperature": 273.0},
            "right": {"velocity": 50.0, "temperature": 273.0},
            "bottom": {"velocity": -50.0, "temperature": 273.0},
            "left": {"velocity": -50.0, "temperature": 273.0},
        },
        "init": {"density": 1.1044e-7, "temperature": 273.0},
    }


def _bottom_heated(user: dict) -> dict:
    cold = {"velocity": 0.0, "temperature": 300.0}
    return {
        "geometry": {"lx": 1e-6, "ly": 1e-6},
        "gas": {"knudsen": 0.3},
        "walls": {"left": cold, "right": cold, "top": cold, "bottom": {"velocity": 0.0, "temperature": 600.0}},
        "init": {"density": 0.2733, "temperature": 300.0},
    }


PRESETS = {"single_lid": _single_lid, "four_lid": _four_lid, "bottom_heated": _bottom_heated}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    scenario = data.get("scenario", "custom")
    if scenario in PRESETS:
        data = _merge(PRESETS[scenario](data), data)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            key = ".".join(str(x) for x in err["loc"]) or "<root>"
            lines.append(f"{key}: {err['msg']}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines)) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark is not None else ""
        raise ConfigError(f"cannot parse {path}{where}: {getattr(exc, 'problem', exc)}") from None
    return config_from_dict(data or {})


# ---------------------------------------------------------------------------
# setup and export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Units:
    length: float
    density: float
    temperature: float
    molecule_mass: float

    @property
    def theta(self) -> float:
        return kelvin_to_theta(self.temperature, self.molecule_mass)

    @property
    def velocity(self) -> float:
        return math.sqrt(self.theta)

    @classmethod
    def of(cls, cfg: ScenarioConfig) -> "Units":
        return cls(cfg.geometry.lx, cfg.init.density, cfg.init.temperature, cfg.gas.molecule_mass)


@dataclass
class Problem:
    field: CellField
    disc: Discretization
    units: Units


def build_problem(cfg: ScenarioConfig) -> Problem:
    units = Units.of(cfg)
    grid = Grid2D.uniform(cfg.nx, cfg.ny, 1.0, cfg.geometry.ly / units.length)
    walls = [
        WallSpec(side, w.velocity / units.velocity, w.temperature / units.temperature)
        for side, w in cfg.walls.items()
    ]
    model = CollisionModel(cfg.collision.model, cfg.collision.prandtl)
    gas = GasParams(cfg.gas.knudsen, cfg.gas.viscosity_index, cfg.gas.molecule_mass)
    u0 = (cfg.init.velocity[0] / units.velocity, cfg.init.velocity[1] / units.velocity, 0.0)
    field = CellField.uniform(grid, cfg.M, 1.0, u0, 1.0)
    return Problem(field, Discretization(walls, model, gas, cfg.order), units)


@dataclass
class FieldSnapshot:
    """Per-cell macroscopic fields in SI units, rows ordered j outer, i inner."""

    data: np.ndarray  # (nx * ny, len(FIELD_COLUMNS))

    @classmethod
    def from_field(cls, field: CellField, units: Units) -> "FieldSnapshot":
        m = field.macro()
        g = field.grid
        x, y = np.meshgrid(g.xc, g.yc, indexing="ij")
        stress = units.density * units.theta
        flux = units.density * units.velocity**3
        cols = [
            x * units.length,
            y * units.length,
            m["rho"] * units.density,
            m["u"][..., 0] * units.velocity,
            m["u"][..., 1] * units.velocity,
            m["theta"] * units.temperature,
            m["sigma"][..., 0, 0] * stress,
            m["sigma"][..., 0, 1] * stress,
            m["sigma"][..., 1, 1] * stress,
            m["q"][..., 0] * flux,
            m["q"][..., 1] * flux,
        ]
        # transpose so that i runs fastest
        return cls(np.stack([c.T.ravel() for c in cols], axis=1))

    def column(self, name: str) -> np.ndarray:
        return self.data[:, FIELD_COLUMNS.index(name)]


def export_history(report: SolveReport | None, path) -> None:
    rows = np.asarray(report.history if report is not None else [], dtype=float).reshape(-1, 3)
    with open(path, "w") as fh:
        fh.write("\t".join(HISTORY_COLUMNS) + "\n")
        for it, ratio, sec in rows:
            fh.write(f"{int(it)}\t{ratio:.17g}\t{sec:.17g}\n")


def export_field(snapshot: FieldSnapshot, path) -> None:
    np.savetxt(path, snapshot.data, fmt="%.17g", delimiter="\t", header="\t".join(FIELD_COLUMNS), comments="")


def benchmark_constants() -> dict:
    policy = CyclePolicy()
    return {
        "molecule_mass_kg": ARGON_MASS,
        "prandtl": ARGON_PRANDTL,
        "viscosity_index": VISCOSITY_INDEX,
        "tol": DEFAULT_TOL,
        "cfl": DEFAULT_CFL,
        "s1": policy.pre_smooth,
        "s2": policy.post_smooth,
        "s3": policy.coarse_steps,
        "coarsest_cells": f"{MIN_COARSE_CELLS}x{MIN_COARSE_CELLS}",
    }


@dataclass
class RunResult:
    report: SolveReport
    snapshot: FieldSnapshot
    output_dir: Path


def run(cfg: ScenarioConfig, output_dir=None, write: bool = True) -> RunResult:
    """Solve a configured scenario and write history.tsv, field.tsv and report.json.

    On ``NonConvergence`` the partial history and the last field are written
    before the exception propagates.
    """
    out = Path(output_dir or cfg.output_dir)
    problem = build_problem(cfg)
    policy = CyclePolicy(cfg.cycle.s1, cfg.cycle.s2, cfg.cycle.s3, cfg.cycle.gamma)
    failure = None
    try:
        report = solve_steady(
            problem.field,
            problem.disc,
            cfg.solver,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            levels=cfg.levels,
            policy=policy,
            threads=cfg.threads,
            cfl=CflPolicy(cfg.cfl),
        )
    except NonConvergence as exc:
        failure = exc
        report = exc.report
    snapshot = FieldSnapshot.from_field(problem.field, problem.units)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        export_history(report, out / "history.tsv")
        export_field(snapshot, out / "field.tsv")
        meta = {
            "constants": benchmark_constants(),
            "config": cfg.model_dump(mode="json"),
            "reference_units": {
                "length_m": problem.units.length,
                "density_kg_m3": problem.units.density,
                "temperature_K": problem.units.temperature,
                "velocity_m_s": problem.units.velocity,
            },
            "result": {
                "solver": report.solver,
                "converged": report.converged,
                "iterations": report.iterations,
                "final_ratio": report.final_ratio,
                "initial_residual": report.initial_residual,
                "levels": report.levels,
                "evaluations": report.evaluations,
                "seconds": report.seconds,
                "message": report.message,
            },
        }
        (out / "report.json").write_text(json.dumps(meta, indent=2) + "\n")
    if failure is not None:
        raise failure
    return RunResult(report, snapshot, out)


__all__ = [
    "FIELD_COLUMNS",
    "FieldSnapshot",
    "ScenarioConfig",
    "Units",
    "benchmark_constants",
    "build_problem",
    "config_from_dict",
    "export_field",
    "export_history",
    "kelvin_to_theta",
    "load_config",
    "run",
    "theta_to_kelvin",
]
