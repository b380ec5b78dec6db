"""Nonlinear (FAS) multigrid with fast sweeping smoothers, and the steady-state driver.

Coarse cells are the union of 2x2 fine cells. Restriction keeps the mass,
momentum and energy of the children: the coarse basis is the mean velocity
and temperature of the merged gas, every child is projected into it and the
results are area-averaged. Prolongation adds the coarse-grid change
``f_H_new - f_H_old`` to each child in the child's own basis.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .errors import NonConvergence, NonphysicalState, SolverError
from .hermite_core import GRAD_MAX_ITER, GRAD_TOL, OK, grad_normalize_inplace, index_table, project_inplace
from .single_level import DEFAULT_CFL, CflPolicy, euler_step, fast_sweep_step, mass_correction, set_threads, sweep_evaluations
from .spatial import CellField, Discretization, Grid2D, field_residual

SOLVERS = ("euler", "fs", "nmg")
MIN_COARSE_CELLS = 8
DIVERGENCE_RATIO = 1e6
DEFAULT_TOL = 1e-8
ZERO_RESIDUAL = 1e-12


@dataclass(frozen=True)
class CyclePolicy:
    pre_smooth: int = 2
    post_smooth: int = 2
    coarse_steps: int = 4
    gamma: int = 1

    def __post_init__(self):
        if min(self.pre_smooth, self.post_smooth, self.coarse_steps) < 1:
            raise ValueError("smoothing step counts must be >= 1")
        if self.gamma not in (1, 2):
            raise ValueError(f"gamma must be 1 (V-cycle) or 2 (W-cycle), got {self.gamma}")


@dataclass
class GridHierarchy:
    """Grids from finest (index 0) to coarsest."""

    grids: list

    @classmethod
    def build(cls, fine: Grid2D, levels="auto") -> "GridHierarchy":
        grids = [fine]
        if levels == "auto" or levels is None:
            g = fine
            while g.nx % 2 == 0 and g.ny % 2 == 0 and g.nx // 2 >= MIN_COARSE_CELLS and g.ny // 2 >= MIN_COARSE_CELLS:
                g = g.coarsen()
                grids.append(g)
            return cls(grids)
        levels = int(levels)
        if levels < 1:
            raise ValueError("number of levels must be >= 1")
        for _ in range(levels - 1):
            g = grids[-1]
            if g.nx % 2 or g.ny % 2 or g.nx < 2 or g.ny < 2:
                raise ValueError(f"a {fine.nx}x{fine.ny} grid does not support {levels} levels")
            grids.append(g.coarsen())
        return cls(grids)

    @property
    def depth(self) -> int:
        return len(self.grids)

    def __getitem__(self, k: int) -> Grid2D:
        return self.grids[k]


@dataclass
class SolveReport:
    solver: str
    converged: bool
    iterations: int
    history: list = field(default_factory=list)  # (iteration, relative residual, seconds)
    initial_residual: float = math.nan
    final_ratio: float = math.nan
    evaluations: int = 0  # local residual evaluations summed over all levels
    levels: int = 1
    seconds: float = 0.0
    message: str = ""


class ConvergenceMonitor:
    """Tracks ||R(f^n)|| / ||R(f^0)|| and decides when to stop."""

    def __init__(self, tol: float, max_iter: int, scale: float = 1.0):
        self.tol = tol
        self.max_iter = max_iter
        self.scale = scale
        self.r0 = math.nan
        self.history: list = []
        self._t0 = time.perf_counter()

    def start(self, r0: float) -> bool:
        """Record the initial residual; True if it is already negligible."""
        self.r0 = r0
        self._t0 = time.perf_counter()
        if not math.isfinite(r0):
            raise NonphysicalState("initial residual is not finite")
        if r0 <= ZERO_RESIDUAL * self.scale:
            self.history.append((0, 0.0, 0.0))
            return True
        self.history.append((0, 1.0, 0.0))
        return False

    def record(self, iteration: int, norm: float) -> str:
        ratio = norm / self.r0
        self.history.append((iteration, ratio, time.perf_counter() - self._t0))
        if not math.isfinite(ratio) or ratio > DIVERGENCE_RATIO:
            return "diverged"
        if ratio <= self.tol:
            return "converged"
        if iteration >= self.max_iter:
            return "exhausted"
        return "running"

    @property
    def ratio(self) -> float:
        return self.history[-1][1] if self.history else math.nan

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._t0


def residual_norm(res: np.ndarray, field_: CellField) -> float:
    """sqrt(1/|Omega| sum_ij |R_ij|_w^2 dx_i dy_j), |R|_w^2 = sum alpha!/theta^|alpha| R_alpha^2."""
    alpha = index_table(field_.order).alpha
    fact = np.array([math.factorial(a) * math.factorial(b) * math.factorial(c) for a, b, c in alpha])
    deg = alpha.sum(axis=1)
    w = fact[None, None, :] / field_.spread[..., None] ** deg[None, None, :]
    g = field_.grid
    total = np.sum(np.sum(w * res * res, axis=2) * g.area)
    return float(math.sqrt(total / (g.lx * g.ly)))


# ---------------------------------------------------------------------------
# transfer kernels
# ---------------------------------------------------------------------------


@njit(parallel=True, cache=True)
def _restrict_kernel(F, U, T, area, FH, UH, TH, down, special, status):
    nxc, nyc, nc = FH.shape
    for ic in prange(nxc):
        g = np.empty(nc)
        for jc in range(nyc):
            m = 0.0
            p0 = 0.0
            p1 = 0.0
            p2 = 0.0
            e = 0.0
            for a in range(2):
                for b in range(2):
                    i = 2 * ic + a
                    j = 2 * jc + b
                    w = area[i, j] * F[i, j, 0]
                    m += w
                    p0 += w * U[i, j, 0]
                    p1 += w * U[i, j, 1]
                    p2 += w * U[i, j, 2]
                    e += w * (U[i, j, 0] ** 2 + U[i, j, 1] ** 2 + U[i, j, 2] ** 2 + 3.0 * T[i, j])
            if not m > 0.0:
                status[ic, jc] = 1
                continue
            UH[ic, jc, 0] = p0 / m
            UH[ic, jc, 1] = p1 / m
            UH[ic, jc, 2] = p2 / m
            th = (e / m - (UH[ic, jc, 0] ** 2 + UH[ic, jc, 1] ** 2 + UH[ic, jc, 2] ** 2)) / 3.0
            if not th > 0.0:
                status[ic, jc] = 1
                continue
            TH[ic, jc] = th
            atot = 0.0
            for p in range(nc):
                FH[ic, jc, p] = 0.0
            for a in range(2):
                for b in range(2):
                    i = 2 * ic + a
                    j = 2 * jc + b
                    g[:] = F[i, j]
                    project_inplace(g, U[i, j], T[i, j], UH[ic, jc], th, down)
                    atot += area[i, j]
                    for p in range(nc):
                        FH[ic, jc, p] += area[i, j] * g[p]
            for p in range(nc):
                FH[ic, jc, p] /= atot
            tn, st = grad_normalize_inplace(FH[ic, jc], UH[ic, jc], th, special, down, GRAD_TOL, GRAD_MAX_ITER)
            TH[ic, jc] = tn
            if st != OK:
                status[ic, jc] = st


@njit(parallel=True, cache=True)
def _restrict_residual_kernel(R, U, T, area, UH, TH, RH, down):
    nxc, nyc, nc = RH.shape
    for ic in prange(nxc):
        g = np.empty(nc)
        for jc in range(nyc):
            atot = 0.0
            for p in range(nc):
                RH[ic, jc, p] = 0.0
            for a in range(2):
                for b in range(2):
                    i = 2 * ic + a
                    j = 2 * jc + b
                    g[:] = R[i, j]
                    project_inplace(g, U[i, j], T[i, j], UH[ic, jc], TH[ic, jc], down)
                    atot += area[i, j]
                    for p in range(nc):
                        RH[ic, jc, p] += area[i, j] * g[p]
            for p in range(nc):
                RH[ic, jc, p] /= atot


@njit(parallel=True, cache=True)
def _correct_kernel(F, U, T, FHold, UHold, THold, FHnew, UHnew, THnew, down, special, bad):
    nx, ny, nc = F.shape
    for i in prange(nx):
        new = np.empty(nc)
        old = np.empty(nc)
        trial = np.empty(nc)
        ut = np.empty(3)
        for j in range(ny):

            ic = i // 2
            jc = j // 2
            new[:] = FHnew[ic, jc]
            project_inplace(new, UHnew[ic, jc], THnew[ic, jc], U[i, j], T[i, j], down)
            old[:] = FHold[ic, jc]
            project_inplace(old, UHold[ic, jc], THold[ic, jc], U[i, j], T[i, j], down)
            for p in range(nc):
                trial[p] = F[i, j, p] + new[p] - old[p]
            ut[:] = U[i, j]
            st = 1
            tn = T[i, j]
            if trial[0] > 0.0:
                tn, st = grad_normalize_inplace(trial, ut, T[i, j], special, down, GRAD_TOL, GRAD_MAX_ITER)
            if st != OK:
                bad[i, j] = 1
                continue
            F[i, j] = trial
            U[i, j] = ut
            T[i, j] = tn


def restrict_solution(fine: CellField, coarse_grid: Grid2D | None = None) -> CellField:
    """Conservative 2x2 restriction of a fine field."""
    grid = coarse_grid or fine.grid.coarsen()
    nxc, nyc = grid.nx, grid.ny
    if (2 * nxc, 2 * nyc) != (fine.grid.nx, fine.grid.ny):
        raise ValueError("coarse grid is not a 2x2 agglomeration of the fine grid")
    n = fine.coeffs.shape[2]
    fh, uh, th = np.empty((nxc, nyc, n)), np.empty((nxc, nyc, 3)), np.empty((nxc, nyc))
    status = np.zeros((nxc, nyc), dtype=np.int64)
    tab = index_table(fine.order)
    _restrict_kernel(fine.coeffs, fine.mean, fine.spread, fine.grid.area, fh, uh, th, tab.down, tab.special, status)
    if status.any():
        where = tuple(int(x) for x in np.argwhere(status)[0])
        raise NonphysicalState("restriction produced a non-physical coarse state", cell=where)
    return CellField(grid, fine.order, fh, uh, th)


def restrict_residual(res: np.ndarray, fine: CellField, coarse: CellField) -> np.ndarray:
    """Area-average a per-cell quantity after projecting each child into the coarse basis."""
    out = np.empty_like(coarse.coeffs)
    _restrict_residual_kernel(
        np.ascontiguousarray(res), fine.mean, fine.spread, fine.grid.area, coarse.mean, coarse.spread, out,
        index_table(fine.order).down,
    )
    return out


def coarse_rhs(fine: CellField, fine_rhs, coarse: CellField, fine_disc: Discretization, coarse_disc: Discretization | None = None, level=None):
    """r_H = R_H(I f_h) + I (r_h - R_h(f_h)), with ``coarse`` = I f_h."""
    coarse_disc = coarse_disc or fine_disc
    defect = -field_residual(fine, fine_disc, level)
    if fine_rhs is not None:
        defect += fine_rhs
    return field_residual(coarse, coarse_disc, None if level is None else level + 1) + restrict_residual(defect, fine, coarse)


def fas_correct(fine: CellField, coarse_old: CellField, coarse_new: CellField, level=None) -> CellField:
    """f_h += P(f_H_new - f_H_old) in each child's basis, then re-normalize, in place."""
    tab = index_table(fine.order)
    bad = np.zeros(fine.spread.shape, dtype=np.int64)
    _correct_kernel(
        fine.coeffs, fine.mean, fine.spread,
        coarse_old.coeffs, coarse_old.mean, coarse_old.spread,
        coarse_new.coeffs, coarse_new.mean, coarse_new.spread,
        tab.down, tab.special, bad,
    )
    if bad.any():
        where = tuple(int(x) for x in np.argwhere(bad)[0])
        raise NonphysicalState(
            f"coarse-grid correction is non-physical in {int(bad.sum())} cell(s)", cell=where, level=level
        )
    return fine


class WorkCounter:
    """Local residual evaluations: inside smoothers, and for whole-grid residuals."""

    def __init__(self):
        self.sweep = 0
        self.residual = 0

    @property
    def total(self) -> int:
        return self.sweep + self.residual


def nmg_cycle(
    field_: CellField,
    rhs,
    hierarchy: GridHierarchy,
    disc: Discretization,
    policy: CyclePolicy = CyclePolicy(),
    threads: int = 1,
    cfl: CflPolicy | float = DEFAULT_CFL,
    level: int = 0,
    counter: WorkCounter | None = None,
) -> CellField:
    """One FAS cycle on ``field_`` (living on ``hierarchy[level]``), in place.

    Level 0 is the finest grid. On the coarsest level the cycle is
    ``coarse_steps`` fast-sweeping steps.
    """
    counter = counter if counter is not None else WorkCounter()

    def smooth(f, r, steps, k):
        for _ in range(steps):
            fast_sweep_step(f, disc, r, threads=threads, cfl=cfl, level=k)
            counter.sweep += sweep_evaluations(f)

    if level == hierarchy.depth - 1:
        smooth(field_, rhs, policy.coarse_steps, level)
        return field_
    smooth(field_, rhs, policy.pre_smooth, level)
    coarse_old = restrict_solution(field_, hierarchy[level + 1])
    r_coarse = coarse_rhs(field_, rhs, coarse_old, disc, level=level)
    counter.residual += field_.grid.nx * field_.grid.ny + coarse_old.grid.nx * coarse_old.grid.ny
    coarse = coarse_old.copy()
    for _ in range(policy.gamma):
        nmg_cycle(coarse, r_coarse, hierarchy, disc, policy, threads, cfl, level + 1, counter)
    fas_correct(field_, coarse_old, coarse, level=level)
    smooth(field_, rhs, policy.post_smooth, level)
    return field_


def cycle_sweep_work(hierarchy: GridHierarchy, policy: CyclePolicy = CyclePolicy()) -> int:
    """Closed-form smoother evaluations of one cycle (4 per cell per sweep step)."""

    def work(k):
        cells = hierarchy[k].nx * hierarchy[k].ny
        if k == hierarchy.depth - 1:
            return 4 * cells * policy.coarse_steps
        return 4 * cells * (policy.pre_smooth + policy.post_smooth) + policy.gamma * work(k + 1)

    return work(0)


def solve_steady(
    field_: CellField,
    disc: Discretization,
    solver: str = "nmg",
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    levels="auto",
    policy: CyclePolicy = CyclePolicy(),
    threads: int = 1,
    cfl: CflPolicy | float = DEFAULT_CFL,
    mass_fix: bool | None = None,
    callback=None,
    raise_on_failure: bool = True,
) -> SolveReport:
    """Iterate to steady state, in place.

    One iteration is one Euler step, one fast-sweeping step (four directions)
    or one multigrid cycle. Convergence is ``||R(f^n)|| <= tol ||R(f^0)||``.
    ``callback(iteration, ratio, field)`` is called after each iteration.
    """
    solver = solver.lower()
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if max_iter is None:
        max_iter = 200 if solver == "nmg" else 100_000
    if mass_fix is None:
        mass_fix = solver != "euler"
    set_threads(threads)
    hierarchy = GridHierarchy.build(field_.grid, levels if solver == "nmg" else 1)
    g = field_.grid
    mean_rho = field_.total_mass() / (g.lx * g.ly)
    scale = mean_rho * math.sqrt(float(np.mean(field_.spread))) / min(g.dx.min(), g.dy.min())
    monitor = ConvergenceMonitor(tol, max_iter, scale)
    report = SolveReport(solver, False, 0, levels=hierarchy.depth)
    target_mass = field_.total_mass()
    ncells = g.nx * g.ny
    counter = WorkCounter()

    r0 = residual_norm(field_residual(field_, disc), field_)
    report.initial_residual = r0
    if monitor.start(r0):
        report.converged = True
        report.final_ratio = 0.0
        report.history = monitor.history
        report.message = "initial residual is already negligible"
        return report

    state = "running"
    iteration = 0
    failure = None
    while state == "running":
        iteration += 1
        try:
            if solver == "euler":
                euler_step(field_, disc, cfl=cfl)
                counter.sweep += ncells
            elif solver == "fs":
                fast_sweep_step(field_, disc, threads=threads, cfl=cfl)
                counter.sweep += sweep_evaluations(field_)
            else:
                nmg_cycle(field_, None, hierarchy, disc, policy, threads, cfl, 0, counter)
            if mass_fix:
                mass_correction(field_, target_mass)
            norm = residual_norm(field_residual(field_, disc), field_)
        except SolverError as exc:
            failure = exc
            state = "failed"
            break
        counter.residual += ncells
        state = monitor.record(iteration, norm)
        report.iterations = iteration
        report.history = monitor.history
        if callback is not None:
            callback(iteration, monitor.ratio, field_)

    report.final_ratio = monitor.ratio
    report.evaluations = counter.total
    report.seconds = monitor.elapsed
    report.converged = state == "converged"
    if not report.converged:
        if state == "failed":
            report.message = f"aborted at iteration {iteration}: {failure}"
        elif state == "diverged":
            report.message = f"diverged: residual ratio {monitor.ratio:.3e} at iteration {iteration}"
        else:
            report.message = f"no convergence to {tol:g} within {max_iter} iterations (ratio {monitor.ratio:.3e})"
        if raise_on_failure:
            raise NonConvergence(report.message, report=report) from failure
    return report


__all__ = [
    "ConvergenceMonitor",
    "CyclePolicy",
    "GridHierarchy",
    "SolveReport",
    "WorkCounter",
    "coarse_rhs",
    "cycle_sweep_work",
    "fas_correct",
    "nmg_cycle",
    "residual_norm",
    "restrict_residual",
    "restrict_solution",
    "solve_steady",
]
