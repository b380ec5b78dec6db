"""Single-level smoothers: forward Euler with a global step and the fast sweeping
(symmetric Gauss-Seidel) iteration with local steps.

Both solve ``df/dt = R(f) - r`` toward steady state, where ``r`` is a fixed
right-hand side (zero on the finest level, the FAS forcing on coarse levels).
``r`` is stored per cell in that cell's basis and re-projected whenever the
cell's basis changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numba
from numba import njit, prange

from .errors import NonphysicalState
from .hermite_core import GRAD_MAX_ITER, GRAD_TOL, OK, grad_normalize_inplace, max_hermite_root, project_inplace
from .spatial import CellField, Discretization, cell_residual, field_residual, raise_status

# sweep directions: (i ascending, j ascending)
DIRECTIONS = {"D1": (True, True), "D2": (False, True), "D3": (False, False), "D4": (True, False)}
DEFAULT_ORDER = ("D1", "D2", "D3", "D4")
DEFAULT_CFL = 0.9


@dataclass(frozen=True)
class CflPolicy:
    """CFL number and characteristic-speed bound; ``c_bound=None`` means C_{M+1}."""

    cfl_number: float = DEFAULT_CFL
    c_bound: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl_number < 1.0:
            raise ValueError(f"CFL number must lie in (0, 1), got {self.cfl_number}")
        if self.c_bound is not None and not self.c_bound > 0:
            raise ValueError("speed bound must be positive")

    def bound(self, order: int) -> float:
        return max_hermite_root(order + 1) if self.c_bound is None else float(self.c_bound)


def as_policy(cfl) -> CflPolicy:
    return cfl if isinstance(cfl, CflPolicy) else CflPolicy(float(cfl))


def set_threads(threads: int) -> int:
    """Size numba's worker pool (capped by its launch-time maximum); returns the size used."""
    n = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True)
def cell_dt(u, th, hx, hy, cbound, cfl):
    c = cbound * math.sqrt(th)
    return cfl / ((abs(u[0]) + c) / hx + (abs(u[1]) + c) / hy)


@njit(cache=True)
def update_cell(f, u, th, res, rhs, has_rhs, dt, tab):
    """f <- normalize(f + dt (R - r)), halving dt once on failure.

    Returns (new theta, status). On success f, u and rhs are updated in place.
    """
    alpha, down, up, special = tab
    nc = f.shape[0]
    trial = np.empty(nc)
    ut = np.empty(3)
    tn = th
    status = OK
    h = dt
    for attempt in range(2):
        for p in range(nc):
            trial[p] = f[p] + h * (res[p] - rhs[p])
        ut[:] = u
        if trial[0] > 0.0:
            tn, status = grad_normalize_inplace(trial, ut, th, special, down, GRAD_TOL, GRAD_MAX_ITER)
        else:
            status = 1
        if status == OK:
            break
        h *= 0.5
    if status != OK:
        return th, status
    if has_rhs:
        project_inplace(rhs, u, th, ut, tn, down)
    f[:] = trial
    u[:] = ut
    return tn, OK


@njit(parallel=True, cache=True)
def euler_kernel(F, U, T, R, Rhs, has_rhs, dt, tab, status):
    nx, ny, nc = F.shape
    for i in prange(nx):
        for j in range(ny):
            tn, st = update_cell(F[i, j], U[i, j], T[i, j], R[i, j], Rhs[i, j], has_rhs, dt, tab)
            if st != OK:
                status[i, j] = st
            else:
                T[i, j] = tn


@njit(cache=True)
def _sweep_block(F, U, T, Fs, Us, Ts, ilo, ihi, i_asc, j_asc, Rhs, has_rhs, xc, yc, dx, dy, walls, order, cpar, cbound, cfl, tab, res, status):
    ny = T.shape[1]
    for ii in range(ihi - ilo):
        i = ilo + ii if i_asc else ihi - 1 - ii
        for jj in range(ny):
            j = jj if j_asc else ny - 1 - jj
            st = cell_residual(F, U, T, Fs, Us, Ts, ilo, ihi, i, j, order, xc, yc, dx, dy, walls, cpar, cbound, tab, res)
            if st == OK:
                dt = cell_dt(U[i, j], T[i, j], dx[i], dy[j], cbound, cfl)
                tn, st = update_cell(F[i, j], U[i, j], T[i, j], res, Rhs[i, j], has_rhs, dt, tab)
                T[i, j] = tn
            if st != OK:
                status[0] = st
                status[1] = i
                status[2] = j
                return


@njit(parallel=True, cache=True)
def fs_kernel(F, U, T, Rhs, has_rhs, dirs, bounds, xc, yc, dx, dy, walls, order, cpar, cbound, cfl, tab, status):
    nblocks = bounds.shape[0] - 1
    nc = F.shape[2]
    for k in range(dirs.shape[0]):
        i_asc = dirs[k, 0] == 1
        j_asc = dirs[k, 1] == 1
        if nblocks > 1:
            Fs = F.copy()
            Us = U.copy()
            Ts = T.copy()
        else:
            Fs = F
            Us = U
            Ts = T
        for b in prange(nblocks):
            res = np.empty(nc)
            _sweep_block(
                F, U, T, Fs, Us, Ts, bounds[b], bounds[b + 1], i_asc, j_asc, Rhs, has_rhs,
                xc, yc, dx, dy, walls, order, cpar, cbound, cfl, tab, res, status[b],
            )
        for b in range(nblocks):
            if status[b, 0] != OK:
                return


def cell_time_step(u, theta: float, dx: float, dy: float, policy: CflPolicy) -> float:
    """Local step of one cell; ``policy.c_bound`` must be set."""
    if not theta > 0:
        raise NonphysicalState(f"time step needs theta > 0, got {theta}")
    if policy.c_bound is None:
        raise ValueError("cell_time_step needs an explicit speed bound")
    return float(cell_dt(np.asarray(u, dtype=float), theta, dx, dy, policy.c_bound, policy.cfl_number))


def local_dt(field: CellField, cfl: CflPolicy | float = DEFAULT_CFL) -> np.ndarray:
    """Per-cell stable step cfl / ((|u1| + C sqrt(theta))/dx + (|u2| + C sqrt(theta))/dy)."""
    policy = as_policy(cfl)
    speed = policy.bound(field.order) * np.sqrt(field.spread)
    g = field.grid
    return policy.cfl_number / (
        (np.abs(field.mean[..., 0]) + speed) / g.dx[:, None] + (np.abs(field.mean[..., 1]) + speed) / g.dy[None, :]
    )


def global_dt(field: CellField, cfl: CflPolicy | float = DEFAULT_CFL) -> float:
    return float(local_dt(field, cfl).min())


def _rhs_array(field: CellField, rhs):
    if rhs is None:
        return np.zeros_like(field.coeffs), False
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if rhs.shape != field.coeffs.shape:
        raise ValueError("right-hand side does not match the field")
    return rhs, True


def euler_step(field: CellField, disc: Discretization, rhs=None, cfl: CflPolicy | float = DEFAULT_CFL, level=None) -> CellField:
    """One forward-Euler step with the global minimum step, in place.

    ``rhs`` (if given) is re-projected in place to follow the updated bases.
    """
    rhs_arr, has_rhs = _rhs_array(field, rhs)
    res = field_residual(field, disc, level)
    dt = global_dt(field, cfl)
    status = np.zeros(field.spread.shape, dtype=np.int64)
    euler_kernel(field.coeffs, field.mean, field.spread, res, rhs_arr, has_rhs, dt, disc.kernel_args(field.grid, field.order)[-1], status)
    if status.any():
        where = tuple(int(x) for x in np.argwhere(status)[0])
        raise_status(int(status[where]), where, level, what="Euler update")
    if has_rhs and rhs is not rhs_arr:
        rhs[...] = rhs_arr
    return field


def _direction_table(directions) -> np.ndarray:
    if directions is None:
        directions = DEFAULT_ORDER
    rows = []
    for d in directions:
        key = d.upper() if isinstance(d, str) else f"D{int(d)}"
        if key not in DIRECTIONS:
            raise ValueError(f"unknown sweep direction {d!r}")
        rows.append([int(x) for x in DIRECTIONS[key]])
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def block_bounds(nx: int, threads: int) -> np.ndarray:
    nblocks = max(1, min(int(threads), nx))
    return np.linspace(0, nx, nblocks + 1).round().astype(np.int64)


def fast_sweep_step(
    field: CellField,
    disc: Discretization,
    rhs=None,
    directions=None,
    threads: int = 1,
    cfl: CflPolicy | float = DEFAULT_CFL,
    level=None,
) -> CellField:
    """One fast-sweeping step (default D1..D4), in place.

    With ``threads > 1`` the i-range is split into blocks swept concurrently.
    Reads across block boundaries use a snapshot taken at the start of each
    direction, so the result depends on the block count but not on scheduling.
    """
    rhs_arr, has_rhs = _rhs_array(field, rhs)
    policy = as_policy(cfl)
    bounds = block_bounds(field.grid.nx, threads)
    status = np.zeros((bounds.shape[0] - 1, 3), dtype=np.int64)
    args = disc.kernel_args(field.grid, field.order)
    xc, yc, dx, dy, walls, order, cpar, cbound, tab = args
    cbound = policy.bound(field.order)
    fs_kernel(
        field.coeffs, field.mean, field.spread, rhs_arr, has_rhs, _direction_table(directions), bounds,
        xc, yc, dx, dy, walls, order, cpar, cbound, policy.cfl_number, tab, status,
    )
    bad = np.flatnonzero(status[:, 0])
    if bad.size:
        code, i, j = (int(x) for x in status[bad[0]])
        raise_status(code, (i, j), level, what="fast sweeping update")
    if has_rhs and rhs is not rhs_arr:
        rhs[...] = rhs_arr
    return field


def sweep_evaluations(field: CellField, directions=None) -> int:
    """Local residual evaluations performed by one fast-sweeping step."""
    return len(_direction_table(directions)) * field.grid.nx * field.grid.ny


def mass_correction(field: CellField, target_mass: float) -> CellField:
    """Rescale every cell so the total mass equals ``target_mass``.

    Scaling all coefficients keeps each cell Grad-normalized.
    """
    current = field.total_mass()
    if not current > 0 or not target_mass > 0:
        raise NonphysicalState(f"cannot correct mass {current} to {target_mass}")
    field.coeffs *= target_mass / current
    return field


__all__ = [
    "CflPolicy",
    "DIRECTIONS",
    "block_bounds",
    "cell_time_step",
    "euler_step",
    "fast_sweep_step",
    "global_dt",
    "local_dt",
    "mass_correction",
    "set_threads",
    "sweep_evaluations",
]
