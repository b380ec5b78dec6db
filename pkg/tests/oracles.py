"""Independent reference computations.

Everything here evaluates the distribution function pointwise on quadrature
grids and integrates; none of it reuses the solver's recurrences.
"""

from __future__ import annotations

import math
from itertools import product
from types import SimpleNamespace

import numpy as np
from numpy.polynomial.hermite_e import hermegauss, hermeval
from numpy.polynomial.legendre import leggauss

from hermite_nmg.hermite_core import multi_indices

N_GAUSS = 24


def hermite_values(n_max: int, x: np.ndarray) -> np.ndarray:
    """He_0..He_n_max at x via numpy's own HermiteE series evaluation."""
    out = np.empty((n_max + 1,) + np.shape(x))
    for n in range(n_max + 1):
        c = np.zeros(n + 1)
        c[n] = 1.0
        out[n] = hermeval(x, c)
    return out


def density_at(coeffs, order, mean, spread, xi):
    """f(xi) for xi of shape (..., 3), straight from the Hermite-function definition."""
    xi = np.asarray(xi, dtype=float)
    v = (xi - np.asarray(mean)) / math.sqrt(spread)
    he = [hermite_values(order, v[..., d]) for d in range(3)]
    gauss = np.exp(-0.5 * np.sum(v * v, axis=-1)) / (2.0 * math.pi * spread) ** 1.5
    total = np.zeros(xi.shape[:-1])
    for c, (a, b, g) in zip(coeffs, multi_indices(order)):
        if c != 0.0:
            total += c * spread ** (-(a + b + g) / 2.0) * he[0][a] * he[1][b] * he[2][g]
    return total * gauss


def _tensor_nodes(mean, spread, n=N_GAUSS):
    x, w = hermegauss(n)
    s = math.sqrt(spread)
    pts = np.array(list(product(x, x, x)))
    wts = np.array([a * b * c for a, b, c in product(w, w, w)])
    # hermegauss weight is exp(-x^2/2); undo it so plain integrals result
    wts = wts * np.exp(0.5 * np.sum(pts * pts, axis=1)) * s**3
    return np.asarray(mean) + s * pts, wts


def raw_moment(rep, beta, n=N_GAUSS) -> float:
    """int xi^beta f(xi) dxi by tensor Gauss-Hermite quadrature centred on rep's basis."""
    xi, w = _tensor_nodes(rep.params.mean, rep.params.spread, n)
    f = density_at(rep.coeffs, rep.order, rep.params.mean, rep.params.spread, xi)
    return float(np.sum(w * f * np.prod(xi ** np.asarray(beta), axis=1)))


def raw_moments(rep, max_degree=None, n=N_GAUSS) -> dict:
    xi, w = _tensor_nodes(rep.params.mean, rep.params.spread, n)
    f = w * density_at(rep.coeffs, rep.order, rep.params.mean, rep.params.spread, xi)
    deg = rep.order if max_degree is None else max_degree
    return {tuple(int(b) for b in beta): float(np.sum(f * np.prod(xi**beta, axis=1))) for beta in multi_indices(deg)}


def flux_moments(rep, axis, max_degree, n=N_GAUSS) -> dict:
    """int xi^beta xi_axis f dxi."""
    xi, w = _tensor_nodes(rep.params.mean, rep.params.spread, n)
    f = w * density_at(rep.coeffs, rep.order, rep.params.mean, rep.params.spread, xi) * xi[:, axis]
    return {tuple(int(b) for b in beta): float(np.sum(f * np.prod(xi**beta, axis=1))) for beta in multi_indices(max_degree)}


def central_stress_heat(rep_coeffs, order, mean, spread, n=N_GAUSS):
    """Stress (trace-free pressure tensor) and heat flux of an expansion, relative to ``mean``."""
    xi, w = _tensor_nodes(mean, spread, n)
    f = w * density_at(rep_coeffs, order, mean, spread, xi)
    c = xi - np.asarray(mean)
    p = np.einsum("k,ki,kj->ij", f, c, c)
    sigma = p - np.trace(p) / 3.0 * np.eye(3)
    q = 0.5 * np.einsum("k,k,ki->i", f, np.sum(c * c, axis=1), c)
    return sigma, q


def half_space_nodes(mean, spread, axis, positive: bool, n_normal=160, n_tan=N_GAUSS, span=14.0):
    """Nodes/weights on {xi_axis > 0} (or < 0), Gauss-Legendre in the normal direction."""
    s = math.sqrt(spread)
    x, w = hermegauss(n_tan)
    wt = w * np.exp(0.5 * x * x) * s
    un = mean[axis]
    lo, hi = (0.0, max(un, 0.0) + span * s) if positive else (min(un, 0.0) - span * s, 0.0)
    g, gw = leggauss(n_normal)
    xn = 0.5 * (hi - lo) * g + 0.5 * (hi + lo)
    wn = 0.5 * (hi - lo) * gw
    tang = [d for d in range(3) if d != axis]
    a, b, c = np.meshgrid(xn, mean[tang[0]] + s * x, mean[tang[1]] + s * x, indexing="ij")
    pts = np.empty(a.shape + (3,))
    pts[..., axis], pts[..., tang[0]], pts[..., tang[1]] = a, b, c
    wts = wn[:, None, None] * wt[None, :, None] * wt[None, None, :]
    return pts.reshape(-1, 3), wts.ravel()


def diffuse_wall_flux_moments(rep, axis, outward, wall_velocity, wall_theta, max_degree) -> dict:
    """Moments int xi^beta xi_n f_face of the exact diffuse-wall face distribution.

    Molecules with outward * xi_n > 0 come from ``rep``; the others from a wall
    Maxwellian whose density makes the net normal mass flux vanish.
    """
    mean = np.asarray(rep.params.mean, dtype=float)
    xo, wo = half_space_nodes(mean, rep.params.spread, axis, outward > 0)
    fo = wo * density_at(rep.coeffs, rep.order, mean, rep.params.spread, xo) * xo[:, axis]
    uw = np.asarray(wall_velocity, dtype=float)
    xw, ww = half_space_nodes(uw, wall_theta, axis, outward < 0)
    unit_coeffs = np.zeros(len(multi_indices(rep.order)))
    unit_coeffs[0] = 1.0
    fw = ww * density_at(unit_coeffs, rep.order, uw, wall_theta, xw) * xw[:, axis]
    rho_w = -np.sum(fo) / np.sum(fw)
    out = {}
    for beta in multi_indices(max_degree):
        out[tuple(int(b) for b in beta)] = float(
            np.sum(fo * np.prod(xo**beta, axis=1)) + rho_w * np.sum(fw * np.prod(xw**beta, axis=1))
        )
    return out


def expansion_moments(coeffs, order, mean, spread, max_degree) -> dict:
    """Raw moments of an arbitrary (not necessarily normalized) expansion."""
    params = SimpleNamespace(mean=np.asarray(mean, dtype=float), spread=float(spread))
    return raw_moments(SimpleNamespace(coeffs=np.asarray(coeffs), order=order, params=params), max_degree)


def bisect_root(fun, lo, hi, tol=1e-14):
    flo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def relative_error(a: dict, b: dict) -> float:
    scale = max(max(abs(v) for v in b.values()), 1e-300)
    return max(abs(a[k] - b[k]) for k in b) / scale
