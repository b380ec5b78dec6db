"""Hermite basis algebra for the Grad moment representation.

A velocity distribution is written as ``f = sum_alpha f_alpha H_alpha[u, theta]``
with the scaled Hermite functions

    H_alpha[u, theta](xi) = (-1)^|alpha| d^alpha/dxi^alpha  G[u, theta](xi),

where ``G`` is the unit-mass Maxwellian of mean ``u`` and temperature ``theta``.
With this normalization ``f_0`` is the density, and derivatives with respect
to the basis parameters are index shifts:

    dH_alpha/du_d = H_{alpha+e_d},      dH_alpha/dtheta = 1/2 sum_d H_{alpha+2e_d}.

The projection between two parameter pairs is the Taylor series of these
relations. Each elementary shift is triangular in the index, so truncating at
order M keeps every raw velocity moment of order <= M unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import GradConstraintError, NonphysicalState

# status codes returned by the compiled kernels
OK = 0
NONPHYSICAL = 1
NON_SPD = 2
BAD_WALL_DENSITY = 3
NOT_NORMALIZED = 4

GRAD_TOL = 1e-12
GRAD_MAX_ITER = 30


def coefficient_count(order: int) -> int:
    return (order + 1) * (order + 2) * (order + 3) // 6


@lru_cache(maxsize=None)
def multi_indices(order: int) -> np.ndarray:
    """All alpha with |alpha| <= order, graded then lexicographically descending."""
    rows = []
    for n in range(order + 1):
        for a1 in range(n, -1, -1):
            for a2 in range(n - a1, -1, -1):
                rows.append((a1, a2, n - a1 - a2))
    out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class IndexTable:
    """Flat-index neighbour tables consumed by the compiled kernels.

    ``down[p, d]`` / ``up[p, d]`` give the position of alpha -/+ e_d, or -1
    when it falls outside the index set. ``special`` holds the positions of
    the low-order coefficients entering the macroscopic quantities:
    rows 0-2 are e_d, 2e_d and 3e_d, rows 3-5 are e_i + e_j and rows 6-8 are
    e_i + 2e_d (row 6 + i, column d).
    """

    order: int
    alpha: np.ndarray
    down: np.ndarray
    up: np.ndarray
    special: np.ndarray
    position: dict = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.alpha.shape[0]

    def packed(self):
        return (self.alpha, self.down, self.up, self.special)

    def index(self, a1: int, a2: int, a3: int) -> int:
        return self.position[(a1, a2, a3)]


@lru_cache(maxsize=None)
def index_table(order: int) -> IndexTable:
    if order < 3:
        raise ValueError(f"moment order must be >= 3, got {order}")
    alpha = np.ascontiguousarray(multi_indices(order))
    position = {tuple(int(x) for x in a): p for p, a in enumerate(alpha)}
    n = alpha.shape[0]
    down = -np.ones((n, 3), dtype=np.int64)
    up = -np.ones((n, 3), dtype=np.int64)
    for p, a in enumerate(alpha):
        for d in range(3):
            b = list(a)
            b[d] -= 1
            down[p, d] = position.get(tuple(b), -1)
            b[d] += 2
            up[p, d] = position.get(tuple(b), -1)
    special = np.zeros((9, 3), dtype=np.int64)
    for d in range(3):
        e = [0, 0, 0]
        e[d] = 1
        special[0, d] = position[tuple(e)]
        special[1, d] = position[tuple(2 * x for x in e)]
        special[2, d] = position[tuple(3 * x for x in e)]
    for i in range(3):
        for j in range(3):
            a = [0, 0, 0]
            a[i] += 1
            a[j] += 1
            special[3 + i, j] = position[tuple(a)]
            a = [0, 0, 0]
            a[i] += 1
            a[j] += 2
            special[6 + i, j] = position[tuple(a)]
    return IndexTable(order, alpha, down, up, special, position)


def hermite_eval(n: int, x: float) -> float:
    """Probabilists' Hermite polynomial He_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    h0, h1 = 1.0, float(x)
    if n == 0:
        return h0
    for k in range(1, n):
        h0, h1 = h1, x * h1 - k * h0
    return h1


@lru_cache(maxsize=None)
def max_hermite_root(degree: int) -> float:
    """Largest root of He_degree (eigenvalues of the Jacobi matrix)."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    off = np.sqrt(np.arange(1, degree, dtype=float))
    jacobi = np.diag(off, 1) + np.diag(off, -1)
    return float(np.linalg.eigvalsh(jacobi)[-1])


# ---------------------------------------------------------------------------
# compiled kernels (in place on flat coefficient vectors)
# ---------------------------------------------------------------------------


@njit(cache=True)
def shift_mean(f, d, c, down):
    # f_alpha <- sum_k c^k/k! f_{alpha - k e_d}; descending p reads untouched entries
    for p in range(f.shape[0] - 1, 0, -1):
        q = down[p, d]
        if q < 0:
            continue
        term = 1.0
        s = f[p]
        k = 0
        while q >= 0:
            k += 1
            term *= c / k
            s += term * f[q]
            q = down[q, d]
        f[p] = s


@njit(cache=True)
def shift_spread(f, d, a, down):
    # f_alpha <- sum_k a^k/k! f_{alpha - 2k e_d}
    for p in range(f.shape[0] - 1, 0, -1):
        q = down[p, d]
        if q < 0:
            continue
        q = down[q, d]
        term = 1.0
        s = f[p]
        k = 0
        while q >= 0:
            k += 1
            term *= a / k
            s += term * f[q]
            q = down[q, d]
            if q < 0:
                break
            q = down[q, d]
        f[p] = s


@njit(cache=True)
def project_inplace(f, u_from, th_from, u_to, th_to, down):
    for d in range(3):
        c = u_from[d] - u_to[d]
        if c != 0.0:
            shift_mean(f, d, c, down)
    a = 0.5 * (th_from - th_to)
    if a != 0.0:
        for d in range(3):
            shift_spread(f, d, a, down)


@njit(cache=True)
def grad_normalize_inplace(f, u, th, special, down, tol, max_iter):
    """Re-expand ``f`` about its own mean velocity and temperature.

    ``u`` is updated in place; returns (theta, status).
    """
    for it in range(max_iter + 1):
        rho = f[0]
        if not rho > 0.0:
            return th, NONPHYSICAL
        m0 = f[special[0, 0]]
        m1 = f[special[0, 1]]
        m2 = f[special[0, 2]]
        tr = f[special[1, 0]] + f[special[1, 1]] + f[special[1, 2]]
        lim = tol * rho * math.sqrt(th)
        if abs(m0) <= lim and abs(m1) <= lim and abs(m2) <= lim and abs(tr) <= lim * math.sqrt(th):
            return th, OK
        if it == max_iter:
            break
        d0 = m0 / rho
        d1 = m1 / rho
        d2 = m2 / rho
        th_new = th + (2.0 * tr - rho * (d0 * d0 + d1 * d1 + d2 * d2)) / (3.0 * rho)
        if not th_new > 0.0:
            return th, NONPHYSICAL
        u_new = np.empty(3)
        u_new[0] = u[0] + d0
        u_new[1] = u[1] + d1
        u_new[2] = u[2] + d2
        project_inplace(f, u, th, u_new, th_new, down)
        u[0] = u_new[0]
        u[1] = u_new[1]
        u[2] = u_new[2]
        th = th_new
    return th, NOT_NORMALIZED


@njit(cache=True)
def macro_from_grad(f, special):
    """(rho, sigma, q) of a Grad-normalized coefficient vector."""
    rho = f[0]
    sigma = np.empty((3, 3))
    q = np.empty(3)
    for i in range(3):
        for j in range(3):
            sigma[i, j] = f[special[3 + i, j]]
        sigma[i, i] *= 2.0
    for i in range(3):
        s = 2.0 * f[special[2, i]]
        for d in range(3):
            s += f[special[6 + i, d]]
        q[i] = s
    return rho, sigma, q


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasisParams:
    """Expansion centre: mean velocity ``mean`` and temperature-like ``spread``."""

    mean: np.ndarray
    spread: float

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(3)
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "spread", float(self.spread))
        if not self.spread > 0.0:
            raise ValueError(f"basis spread must be positive, got {self.spread}")


@dataclass
class MomentRep:
    """Truncated Hermite expansion of one distribution function."""

    order: int
    params: BasisParams
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.array(self.coeffs, dtype=float)
        if self.order < 3:
            raise ValueError("moment order must be >= 3")
        n = coefficient_count(self.order)
        if self.coeffs.shape != (n,):
            raise ValueError(f"expected {n} coefficients for order {self.order}, got {self.coeffs.shape}")

    @property
    def table(self) -> IndexTable:
        return index_table(self.order)

    def coeff(self, a1: int, a2: int, a3: int) -> float:
        return float(self.coeffs[self.table.index(a1, a2, a3)])

    def copy(self) -> "MomentRep":
        return MomentRep(self.order, self.params, self.coeffs.copy())


@dataclass
class MacroState:
    rho: float
    u: np.ndarray
    theta: float
    sigma: np.ndarray
    q: np.ndarray


def grad_residual(rep: MomentRep) -> float:
    """Largest violation of the Grad constraints, relative to rho sqrt(theta) and rho theta."""
    sp = rep.table.special
    f = rep.coeffs
    if f[0] == 0:
        return math.inf
    th = rep.params.spread
    worst = max(abs(f[sp[0, d]]) for d in range(3)) / math.sqrt(th)
    worst = max(worst, abs(f[sp[1, 0]] + f[sp[1, 1]] + f[sp[1, 2]]) / th)
    return worst / abs(f[0])


def extract_macro(rep: MomentRep, tol: float = 1e-9) -> MacroState:
    """Density, velocity, temperature, stress and heat flux of a Grad-normalized rep."""
    violation = grad_residual(rep)
    if violation > tol:
        raise GradConstraintError(f"representation is not Grad-normalized (violation {violation:.3e})")
    rho, sigma, q = macro_from_grad(rep.coeffs, rep.table.special)
    return MacroState(float(rho), rep.params.mean.copy(), rep.params.spread, sigma, q)


def maxwellian_rep(rho: float, u, theta: float, order: int) -> MomentRep:
    if not rho > 0 or not theta > 0:
        raise NonphysicalState(f"Maxwellian needs rho > 0 and theta > 0 (rho={rho}, theta={theta})")
    coeffs = np.zeros(coefficient_count(order))
    coeffs[0] = rho
    return MomentRep(order, BasisParams(u, theta), coeffs)


def project(rep: MomentRep, to: BasisParams) -> MomentRep:
    """Re-expand ``rep`` in the basis ``to`` keeping all raw moments of order <= M."""
    if not isinstance(to, BasisParams):
        to = BasisParams(*to)
    coeffs = rep.coeffs.copy()
    project_inplace(coeffs, rep.params.mean, rep.params.spread, to.mean, to.spread, rep.table.down)
    return MomentRep(rep.order, to, coeffs)


def grad_normalize(rep: MomentRep, tol: float = GRAD_TOL, max_iter: int = GRAD_MAX_ITER) -> MomentRep:
    tab = rep.table
    coeffs = rep.coeffs.copy()
    u = rep.params.mean.copy()
    theta, status = grad_normalize_inplace(coeffs, u, rep.params.spread, tab.special, tab.down, tol, max_iter)
    if status == NONPHYSICAL:
        raise NonphysicalState("non-positive density or temperature while normalizing")
    if status == NOT_NORMALIZED:
        raise GradConstraintError(f"Grad normalization did not converge in {max_iter} iterations")
    return MomentRep(rep.order, BasisParams(u, theta), coeffs)
