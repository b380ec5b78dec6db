"""Finite-volume discretization on rectangular grids.

Every cell stores a Grad-normalized expansion. A face flux is built in the
face basis (mean of the two face-state parameters) with an HLL flux whose
signal speeds are ``u_n -/+ C_{M+1} sqrt(theta)``, then projected into the
basis of each neighbouring cell. Because projection keeps all moments of
order <= M, both cells see the same transfer of every conserved quantity.

Walls are fully diffuse: the half-range flux of the interior expansion leaves
the domain and a wall Maxwellian, with density fixed by zero net mass flux,
enters it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .collision import CollisionModel, GasParams, collision_kernel, model_params
from .errors import NonphysicalState, NonSPDError, SolverError
from .hermite_core import (
    BAD_WALL_DENSITY,
    NON_SPD,
    NONPHYSICAL,
    OK,
    BasisParams,
    MacroState,
    MomentRep,
    coefficient_count,
    index_table,
    max_hermite_root,
    project_inplace,
)

SIDES = ("left", "right", "bottom", "top")


@dataclass
class Grid2D:
    """Tensor-product grid of ``nx x ny`` cells; ``dx``/``dy`` may be nonuniform."""

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.dx = np.ascontiguousarray(self.dx, dtype=float)
        self.dy = np.ascontiguousarray(self.dy, dtype=float)
        if self.dx.ndim != 1 or self.dy.ndim != 1 or not (np.all(self.dx > 0) and np.all(self.dy > 0)):
            raise ValueError("cell sizes must be positive 1D arrays")

    @classmethod
    def uniform(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid2D":
        return cls(np.full(nx, lx / nx), np.full(ny, ly / ny))

    @property
    def nx(self) -> int:
        return self.dx.shape[0]

    @property
    def ny(self) -> int:
        return self.dy.shape[0]

    @property
    def lx(self) -> float:
        return float(self.dx.sum())

    @property
    def ly(self) -> float:
        return float(self.dy.sum())

    @property
    def xc(self) -> np.ndarray:
        return np.cumsum(self.dx) - 0.5 * self.dx

    @property
    def yc(self) -> np.ndarray:
        return np.cumsum(self.dy) - 0.5 * self.dy

    @property
    def area(self) -> np.ndarray:
        return np.outer(self.dx, self.dy)

    def coarsen(self) -> "Grid2D":
        if self.nx % 2 or self.ny % 2:
            raise ValueError(f"cannot coarsen a {self.nx}x{self.ny} grid")
        return Grid2D(self.dx[0::2] + self.dx[1::2], self.dy[0::2] + self.dy[1::2])


@dataclass(frozen=True)
class WallSpec:
    """A fully diffuse wall moving tangentially with ``wall_velocity``.

    Bottom/top walls move along +x for positive speed, left/right walls along +y.
    """

    side: str
    wall_velocity: float = 0.0
    wall_theta: float = 1.0

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"wall side must be one of {SIDES}, got {self.side!r}")
        if not self.wall_theta > 0:
            raise ValueError("wall temperature must be positive")

    @property
    def axis(self) -> int:
        return 0 if self.side in ("left", "right") else 1

    @property
    def outward(self) -> int:
        return 1 if self.side in ("right", "top") else -1

    def velocity_vector(self) -> np.ndarray:
        v = np.zeros(3)
        v[1 - self.axis] = self.wall_velocity
        return v


def wall_array(walls) -> np.ndarray:
    """Rows (left, right, bottom, top) of [ux, uy, uz, theta]."""
    if isinstance(walls, dict):
        walls = list(walls.values())
    by_side = {w.side: w for w in walls}
    missing = set(SIDES) - set(by_side)
    if missing:
        raise ValueError(f"missing wall specification for {sorted(missing)}")
    out = np.zeros((4, 4))
    for k, side in enumerate(SIDES):
        w = by_side[side]
        out[k, :3] = w.velocity_vector()
        out[k, 3] = w.wall_theta
    return out


def resting_walls(theta: float = 1.0) -> list[WallSpec]:
    return [WallSpec(s, 0.0, theta) for s in SIDES]


@dataclass
class CellField:
    """Per-cell Grad expansions on a grid.

    ``coeffs[i, j]`` are the coefficients of cell (i, j) in the basis
    ``(mean[i, j], spread[i, j])``.
    """

    grid: Grid2D
    order: int
    coeffs: np.ndarray
    mean: np.ndarray
    spread: np.ndarray

    def __post_init__(self):
        n = coefficient_count(self.order)
        shape = (self.grid.nx, self.grid.ny)
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=float)
        self.mean = np.ascontiguousarray(self.mean, dtype=float)
        self.spread = np.ascontiguousarray(self.spread, dtype=float)
        if self.coeffs.shape != shape + (n,) or self.mean.shape != shape + (3,) or self.spread.shape != shape:
            raise ValueError("field arrays do not match the grid and order")

    @classmethod
    def uniform(cls, grid: Grid2D, order: int, rho: float, u=(0.0, 0.0, 0.0), theta: float = 1.0) -> "CellField":
        nx, ny = grid.nx, grid.ny
        coeffs = np.zeros((nx, ny, coefficient_count(order)))
        coeffs[..., 0] = rho
        mean = np.broadcast_to(np.asarray(u, dtype=float), (nx, ny, 3)).copy()
        return cls(grid, order, coeffs, mean, np.full((nx, ny), float(theta)))

    def copy(self) -> "CellField":
        return CellField(self.grid, self.order, self.coeffs.copy(), self.mean.copy(), self.spread.copy())

    def cell(self, i: int, j: int) -> MomentRep:
        return MomentRep(self.order, BasisParams(self.mean[i, j], self.spread[i, j]), self.coeffs[i, j].copy())

    def set_cell(self, i: int, j: int, rep: MomentRep) -> None:
        self.coeffs[i, j] = rep.coeffs
        self.mean[i, j] = rep.params.mean
        self.spread[i, j] = rep.params.spread

    @property
    def density(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def total_mass(self) -> float:
        return float(np.sum(self.coeffs[..., 0] * self.grid.area))

    def macro(self) -> dict:
        """Macroscopic fields rho, u, theta, sigma (nx, ny, 3, 3) and q (nx, ny, 3)."""
        sp = index_table(self.order).special
        f = self.coeffs
        sigma = np.empty(f.shape[:2] + (3, 3))
        for i in range(3):
            for j in range(3):
                sigma[..., i, j] = f[..., sp[3 + i, j]]
            sigma[..., i, i] *= 2.0
        q = np.empty(f.shape[:2] + (3,))
        for i in range(3):
            q[..., i] = 2.0 * f[..., sp[2, i]] + sum(f[..., sp[6 + i, d]] for d in range(3))
        return {"rho": f[..., 0].copy(), "u": self.mean.copy(), "theta": self.spread.copy(), "sigma": sigma, "q": q}


@dataclass
class InterfaceStates:
    left: MomentRep
    right: MomentRep


@dataclass
class FaceStates:
    """Reconstructed interior face states.

    x-face ``I`` (1..nx-1) separates cells I-1 and I; arrays are indexed by
    ``I - 1``. ``fallback`` lists faces where a non-positive reconstructed
    temperature or density forced first order.
    """

    order: int
    x_left: tuple
    x_right: tuple
    y_left: tuple
    y_right: tuple
    fallback: list

    def _rep(self, parts, k, j):
        f, u, t = parts
        return MomentRep(self.order, BasisParams(u[k, j], t[k, j]), f[k, j].copy())

    def x_face(self, face: int, j: int) -> InterfaceStates:
        return InterfaceStates(self._rep(self.x_left, face - 1, j), self._rep(self.x_right, face - 1, j))

    def y_face(self, i: int, face: int) -> InterfaceStates:
        return InterfaceStates(self._rep(self.y_left, i, face - 1), self._rep(self.y_right, i, face - 1))


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def phys_flux(g, uf, thf, n, alpha, down, up, out):
    """Coefficients of xi_n g, truncated at the order of ``g``."""
    for p in range(g.shape[0]):
        s = uf[n] * g[p]
        q = down[p, n]
        if q >= 0:
            s += thf * g[q]
        q = up[p, n]
        if q >= 0:
            s += (alpha[p, n] + 1) * g[q]
        out[p] = s


@njit(cache=True)
def hll_flux(fl, ul, thl, fr, ur, thr, n, cbound, tab, out, uf):
    """HLL flux in the face basis; writes the face mean into ``uf`` and returns its spread."""
    alpha, down, up, special = tab
    nc = fl.shape[0]
    for d in range(3):
        uf[d] = 0.5 * (ul[d] + ur[d])
    thf = 0.5 * (thl + thr)
    sl = math.sqrt(thl)
    sr = math.sqrt(thr)
    lam_l = min(ul[n] - cbound * sl, ur[n] - cbound * sr)
    lam_r = max(ul[n] + cbound * sl, ur[n] + cbound * sr)
    if lam_l >= 0.0:
        g = fl.copy()
        project_inplace(g, ul, thl, uf, thf, down)
        phys_flux(g, uf, thf, n, alpha, down, up, out)
        return thf
    if lam_r <= 0.0:
        g = fr.copy()
        project_inplace(g, ur, thr, uf, thf, down)
        phys_flux(g, uf, thf, n, alpha, down, up, out)
        return thf
    gl = fl.copy()
    project_inplace(gl, ul, thl, uf, thf, down)
    gr = fr.copy()
    project_inplace(gr, ur, thr, uf, thf, down)
    flx_l = np.empty(nc)
    flx_r = np.empty(nc)
    phys_flux(gl, uf, thf, n, alpha, down, up, flx_l)
    phys_flux(gr, uf, thf, n, alpha, down, up, flx_r)
    inv = 1.0 / (lam_r - lam_l)
    for p in range(nc):
        out[p] = (lam_r * flx_l[p] - lam_l * flx_r[p] + lam_l * lam_r * (gr[p] - gl[p])) * inv
    return thf


@njit(cache=True)
def half_range_table(v0, upper, amax, bmax):
    """P[a, b] = int He_a He_b phi over v > v0 (``upper``) or v < v0."""
    width = amax + bmax + 2
    tbl = np.zeros((amax + 2, width + 1))
    phi = math.exp(-0.5 * v0 * v0) / math.sqrt(2.0 * math.pi)
    he = np.empty(width + 1)
    he[0] = 1.0
    he[1] = v0
    for k in range(1, width):
        he[k + 1] = v0 * he[k] - k * he[k - 1]
    if upper:
        tbl[0, 0] = 0.5 * math.erfc(v0 / math.sqrt(2.0))
        sgn = 1.0
    else:
        tbl[0, 0] = 0.5 * math.erfc(-v0 / math.sqrt(2.0))
        sgn = -1.0
    for b in range(1, width + 1):
        tbl[0, b] = sgn * he[b - 1] * phi
    # He_{a+1} = v He_a - a He_{a-1} and v He_b = He_{b+1} + b He_{b-1}
    for a in range(amax + 1):
        for b in range(width - a):
            s = tbl[a, b + 1]
            if b > 0:
                s += b * tbl[a, b - 1]
            if a > 0:
                s -= a * tbl[a - 1, b]
            tbl[a + 1, b] = s
    return tbl


@njit(cache=True)
def wall_flux_kernel(f, u, th, axis, outward, uw, thw, tab, out):
    """Diffuse-wall flux (along +axis) in the basis of the adjacent cell."""
    alpha, down, up, special = tab
    nc = f.shape[0]
    order = alpha[nc - 1, 0] + alpha[nc - 1, 1] + alpha[nc - 1, 2]
    sq = math.sqrt(th)
    un = u[axis]
    # particles heading into the wall: outward * xi_n > 0
    tbl = half_range_table(-un / sq, outward > 0, order + 1, order + 1)
    tmat = np.empty((order + 1, order + 1))
    for a in range(order + 1):
        for b in range(order + 1):
            s = tbl[a + 1, b]
            if a > 0:
                s += a * tbl[a - 1, b]
            tmat[a, b] = un * tbl[a, b] + sq * s
    for p in range(nc):
        an = alpha[p, axis]
        base = p
        while down[base, axis] >= 0:
            base = down[base, axis]
        fact = 1.0
        for k in range(2, an + 1):
            fact *= k
        s = 0.0
        q = base
        b = 0
        while q >= 0:
            s += f[q] * sq ** (an - b) * tmat[an, b]
            q = up[q, axis]
            b += 1
        out[p] = s / fact
    # re-emitted wall Maxwellian, per unit density, in the wall basis
    sqw = math.sqrt(thw)
    wtbl = half_range_table(0.0, outward < 0, order + 1, 1)
    g = np.zeros(nc)
    q = 0
    k = 0
    fact = 1.0
    while q >= 0:
        if k > 0:
            fact *= k
        s = wtbl[k + 1, 0]
        if k > 0:
            s += k * wtbl[k - 1, 0]
        g[q] = sqw ** (k + 1) * s / fact
        q = up[q, axis]
        k += 1
    rho_w = -out[0] / g[0]
    if not rho_w > 0.0:
        return BAD_WALL_DENSITY
    for p in range(nc):
        g[p] *= rho_w
    project_inplace(g, uw, thw, u, th, down)
    for p in range(nc):
        out[p] += g[p]
    out[0] = 0.0
    return OK


@njit(cache=True)
def _face_state(F, U, T, Fs, Us, Ts, ilo, ihi, i, j, axis, side, order, xc, yc, dx, dy, out_f, out_u):
    # cells with ilo <= i < ihi are read from (F, U, T), all others from the snapshot
    i = np.int64(i)
    j = np.int64(j)
    nx = T.shape[0]
    ny = T.shape[1]
    if ilo <= i < ihi:
        f0 = F[i, j]
        u0 = U[i, j]
        t0 = T[i, j]
    else:
        f0 = Fs[i, j]
        u0 = Us[i, j]
        t0 = Ts[i, j]
    k = i if axis == 0 else j
    ncell = nx if axis == 0 else ny
    if order == 1 or k == 0 or k == ncell - 1:
        out_f[:] = f0
        out_u[:] = u0
        return t0
    if axis == 0:
        im = i - 1
        ip = i + 1
        jm = j
        jp = j
        w = 0.5 * side * dx[i] / (xc[i + 1] - xc[i - 1])
    else:
        im = i
        ip = i
        jm = j - 1
        jp = j + 1
        w = 0.5 * side * dy[j] / (yc[j + 1] - yc[j - 1])
    if ilo <= im < ihi:
        fm = F[im, jm]
        um = U[im, jm]
        tm = T[im, jm]
    else:
        fm = Fs[im, jm]
        um = Us[im, jm]
        tm = Ts[im, jm]
    if ilo <= ip < ihi:
        fp = F[ip, jp]
        up = U[ip, jp]
        tp = T[ip, jp]
    else:
        fp = Fs[ip, jp]
        up = Us[ip, jp]
        tp = Ts[ip, jp]
    for p in range(f0.shape[0]):
        out_f[p] = f0[p] + w * (fp[p] - fm[p])
    for d in range(3):
        out_u[d] = u0[d] + w * (up[d] - um[d])
    return t0 + w * (tp - tm)


@njit(cache=True)
def face_flux(F, U, T, Fs, Us, Ts, ilo, ihi, axis, face, j, order, xc, yc, dx, dy, walls, cbound, tab, out_f, out_u):
    """Flux through face ``face`` along ``axis`` in row/column ``j``.

    Returns (face spread, status); the flux basis is (out_u, spread).
    """
    face = np.int64(face)
    j = np.int64(j)
    nx = T.shape[0]
    ny = T.shape[1]
    ncell = nx if axis == 0 else ny
    if face == 0 or face == ncell:
        if face == 0:
            c = 0
            outward = -1
            row = 0 if axis == 0 else 2
        else:
            c = ncell - 1
            outward = 1
            row = 1 if axis == 0 else 3
        ci = c if axis == 0 else j
        cj = j if axis == 0 else c
        if ilo <= ci < ihi:
            fc = F[ci, cj]
            uc = U[ci, cj]
            tc = T[ci, cj]
        else:
            fc = Fs[ci, cj]
            uc = Us[ci, cj]
            tc = Ts[ci, cj]
        status = wall_flux_kernel(fc, uc, tc, axis, outward, walls[row, :3], walls[row, 3], tab, out_f)
        out_u[:] = uc
        return tc, status
    if axis == 0:
        ia, ja, ib, jb = face - 1, j, face, j
    else:
        ia, ja, ib, jb = j, face - 1, j, face
    nc = out_f.shape[0]
    fl = np.empty(nc)
    fr = np.empty(nc)
    ul = np.empty(3)
    ur = np.empty(3)
    thl = _face_state(F, U, T, Fs, Us, Ts, ilo, ihi, ia, ja, axis, 1, order, xc, yc, dx, dy, fl, ul)
    thr = _face_state(F, U, T, Fs, Us, Ts, ilo, ihi, ib, jb, axis, -1, order, xc, yc, dx, dy, fr, ur)
    if order != 1 and not (thl > 0.0 and thr > 0.0 and fl[0] > 0.0 and fr[0] > 0.0):
        thl = _face_state(F, U, T, Fs, Us, Ts, ilo, ihi, ia, ja, axis, 1, 1, xc, yc, dx, dy, fl, ul)
        thr = _face_state(F, U, T, Fs, Us, Ts, ilo, ihi, ib, jb, axis, -1, 1, xc, yc, dx, dy, fr, ur)
    thf = hll_flux(fl, ul, thl, fr, ur, thr, axis, cbound, tab, out_f, out_u)
    return thf, OK


@njit(cache=True)
def _add_projected(acc, flux, uf, thf, u, th, scale, down):
    g = flux.copy()
    project_inplace(g, uf, thf, u, th, down)
    for p in range(acc.shape[0]):
        acc[p] += scale * g[p]


@njit(cache=True)
def cell_residual(F, U, T, Fs, Us, Ts, ilo, ihi, i, j, order, xc, yc, dx, dy, walls, cpar, cbound, tab, out):
    """R_ij from the four face fluxes of cell (i, j) and its collision term."""
    alpha, down, up, special = tab
    nc = out.shape[0]
    f = F[i, j]
    u = U[i, j]
    th = T[i, j]
    status = collision_kernel(f, th, cpar, tab, out)
    if status != OK:
        return status
    flux = np.empty(nc)
    uf = np.empty(3)
    for axis in range(2):
        face = i if axis == 0 else j
        other = j if axis == 0 else i
        h = dx[i] if axis == 0 else dy[j]
        for k in range(2):
            thf, status = face_flux(
                F, U, T, Fs, Us, Ts, ilo, ihi, axis, face + k, other, order, xc, yc, dx, dy, walls, cbound, tab, flux, uf
            )
            if status != OK:
                return status
            _add_projected(out, flux, uf, thf, u, th, (1.0 - 2.0 * k) / h, down)
    return OK


@njit(parallel=True, cache=True)
def residual_kernel(F, U, T, xc, yc, dx, dy, walls, order, cpar, cbound, tab, R, status):
    alpha, down, up, special = tab
    nx, ny, nc = F.shape
    fx = np.empty((nx + 1, ny, nc))
    ux = np.empty((nx + 1, ny, 3))
    tx = np.empty((nx + 1, ny))
    fy = np.empty((nx, ny + 1, nc))
    uy = np.empty((nx, ny + 1, 3))
    ty = np.empty((nx, ny + 1))
    for face in prange(nx + 1):
        for j in range(ny):
            th, st = face_flux(F, U, T, F, U, T, 0, nx, 0, face, j, order, xc, yc, dx, dy, walls, cbound, tab, fx[face, j], ux[face, j])
            tx[face, j] = th
            if st != OK:
                status[face, j] = st
    for i in prange(nx):
        for face in range(ny + 1):
            th, st = face_flux(F, U, T, F, U, T, 0, nx, 1, face, i, order, xc, yc, dx, dy, walls, cbound, tab, fy[i, face], uy[i, face])
            ty[i, face] = th
            if st != OK:
                status[i, face] = st
    for i in prange(nx):
        for j in range(ny):
            st = collision_kernel(F[i, j], T[i, j], cpar, tab, R[i, j])
            if st != OK:
                status[i, j] = st
                continue
            u = U[i, j]
            th = T[i, j]
            _add_projected(R[i, j], fx[i + 1, j], ux[i + 1, j], tx[i + 1, j], u, th, -1.0 / dx[i], down)
            _add_projected(R[i, j], fx[i, j], ux[i, j], tx[i, j], u, th, 1.0 / dx[i], down)
            _add_projected(R[i, j], fy[i, j + 1], uy[i, j + 1], ty[i, j + 1], u, th, -1.0 / dy[j], down)
            _add_projected(R[i, j], fy[i, j], uy[i, j], ty[i, j], u, th, 1.0 / dy[j], down)


@njit(parallel=True, cache=True)
def reconstruct_kernel(F, U, T, xc, yc, dx, dy, order, xl, xlu, xlt, xr, xru, xrt, yl, ylu, ylt, yr, yru, yrt, flags):
    nx, ny, nc = F.shape
    for face in prange(1, nx):
        for j in range(ny):
            k = face - 1
            xlt[k, j] = _face_state(F, U, T, F, U, T, 0, nx, face - 1, j, 0, 1, order, xc, yc, dx, dy, xl[k, j], xlu[k, j])
            xrt[k, j] = _face_state(F, U, T, F, U, T, 0, nx, face, j, 0, -1, order, xc, yc, dx, dy, xr[k, j], xru[k, j])
            if not (xlt[k, j] > 0.0 and xrt[k, j] > 0.0 and xl[k, j, 0] > 0.0 and xr[k, j, 0] > 0.0):
                flags[0, k, j] = 1
                xlt[k, j] = _face_state(F, U, T, F, U, T, 0, nx, face - 1, j, 0, 1, 1, xc, yc, dx, dy, xl[k, j], xlu[k, j])
                xrt[k, j] = _face_state(F, U, T, F, U, T, 0, nx, face, j, 0, -1, 1, xc, yc, dx, dy, xr[k, j], xru[k, j])
    for i in prange(nx):
        for face in range(1, ny):
            k = face - 1
            ylt[i, k] = _face_state(F, U, T, F, U, T, 0, nx, i, face - 1, 1, 1, order, xc, yc, dx, dy, yl[i, k], ylu[i, k])
            yrt[i, k] = _face_state(F, U, T, F, U, T, 0, nx, i, face, 1, -1, order, xc, yc, dx, dy, yr[i, k], yru[i, k])
            if not (ylt[i, k] > 0.0 and yrt[i, k] > 0.0 and yl[i, k, 0] > 0.0 and yr[i, k, 0] > 0.0):
                flags[1, i, k] = 1
                ylt[i, k] = _face_state(F, U, T, F, U, T, 0, nx, i, face - 1, 1, 1, 1, xc, yc, dx, dy, yl[i, k], ylu[i, k])
                yrt[i, k] = _face_state(F, U, T, F, U, T, 0, nx, i, face, 1, -1, 1, xc, yc, dx, dy, yr[i, k], yru[i, k])


# ---------------------------------------------------------------------------
# Python surface
# ---------------------------------------------------------------------------


@dataclass
class Discretization:
    """Everything besides the field that the residual depends on."""

    walls: list
    model: CollisionModel
    gas: GasParams
    order: int = 1

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError(f"spatial order must be 1 or 2, got {self.order}")
        self.wall_arr = wall_array(self.walls)
        self.cpar = model_params(self.model, self.gas)

    def kernel_args(self, grid: Grid2D, moment_order: int):
        return (
            grid.xc,
            grid.yc,
            grid.dx,
            grid.dy,
            self.wall_arr,
            self.order,
            self.cpar,
            max_hermite_root(moment_order + 1),
            index_table(moment_order).packed(),
        )


def raise_status(code: int, where=None, level=None, what="residual evaluation"):
    if code == OK:
        return
    if code == NON_SPD:
        raise NonSPDError(f"ES-BGK covariance lost positive definiteness during {what}", cell=where)
    if code == BAD_WALL_DENSITY:
        raise NonphysicalState(f"non-positive diffuse-wall density during {what}", cell=where, level=level)
    if code == NONPHYSICAL:
        raise NonphysicalState(f"non-positive density or temperature during {what}", cell=where, level=level)
    raise SolverError(f"{what} failed with status {code}" + (f" at {where}" if where is not None else ""))


def field_residual(field: CellField, disc: Discretization, level=None) -> np.ndarray:
    out = np.empty_like(field.coeffs)
    status = np.zeros((field.grid.nx + 1, field.grid.ny + 1), dtype=np.int64)
    residual_kernel(field.coeffs, field.mean, field.spread, *disc.kernel_args(field.grid, field.order), out, status)
    if status.any():
        where = np.argwhere(status)[0]
        raise_status(int(status[tuple(where)]), where, level)
    return out


def residual(field: CellField, walls, model: CollisionModel, gas: GasParams, order: int = 1) -> np.ndarray:
    """Steady residual R_ij of every cell, in that cell's own basis."""
    return field_residual(field, Discretization(walls, model, gas, order))


def reconstruct(field: CellField, order: int = 1) -> FaceStates:
    nx, ny, nc = field.coeffs.shape
    g = field.grid

    def parts(shape):
        return (np.empty(shape + (nc,)), np.empty(shape + (3,)), np.empty(shape))

    xl, xr = parts((nx - 1, ny)), parts((nx - 1, ny))
    yl, yr = parts((nx, ny - 1)), parts((nx, ny - 1))
    flags = np.zeros((2, max(nx, 1), max(ny, 1)), dtype=np.int64)
    reconstruct_kernel(field.coeffs, field.mean, field.spread, g.xc, g.yc, g.dx, g.dy, order, *xl, *xr, *yl, *yr, flags)
    fallback = [("x", int(k) + 1, int(j)) for k, j in np.argwhere(flags[0])]
    fallback += [("y", int(i), int(k) + 1) for i, k in np.argwhere(flags[1])]
    return FaceStates(field.order, xl, xr, yl, yr, fallback)


def numerical_flux(states: InterfaceStates, normal_axis, target: BasisParams) -> np.ndarray:
    """HLL flux between two face states, expressed in the basis ``target``."""
    axis = {"x": 0, "y": 1}.get(normal_axis, normal_axis)
    left, right = states.left, states.right
    tab = index_table(left.order)
    out = np.empty_like(left.coeffs)
    uf = np.empty(3)
    thf = hll_flux(
        left.coeffs, left.params.mean, left.params.spread,
        right.coeffs, right.params.mean, right.params.spread,
        int(axis), max_hermite_root(left.order + 1), tab.packed(), out, uf,
    )
    if not isinstance(target, BasisParams):
        target = BasisParams(*target)
    project_inplace(out, uf, thf, target.mean, target.spread, tab.down)
    return out


def wall_flux(inside: MomentRep, wall: WallSpec, order: int | None = None) -> np.ndarray:
    """Diffuse-wall flux (along the positive axis direction) in ``inside``'s basis."""
    if order is not None and order != inside.order:
        raise ValueError("order mismatch between inside state and requested order")
    out = np.empty_like(inside.coeffs)
    status = wall_flux_kernel(
        inside.coeffs, inside.params.mean, inside.params.spread, wall.axis, wall.outward,
        wall.velocity_vector(), wall.wall_theta, inside.table.packed(), out,
    )
    raise_status(status, what="wall flux")
    return out


__all__ = [
    "CellField",
    "Discretization",
    "FaceStates",
    "Grid2D",
    "InterfaceStates",
    "MacroState",
    "WallSpec",
    "field_residual",
    "numerical_flux",
    "reconstruct",
    "residual",
    "resting_walls",
    "wall_flux",
]
