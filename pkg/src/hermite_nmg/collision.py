"""BGK-family relaxation operators expressed in the Grad basis.

All three models share ``Q(f) = nu (f_E - f)``; they differ in the equilibrium
``f_E``. In the Grad basis of ``f``:

* BGK: only ``f_E[0] = rho``.
* Shakhov: the cubic correction adds ``(1 - Pr) q_i / 5`` at ``3e_i`` and at
  ``e_i + 2e_d`` (d != i). The linear part cancels exactly.
* ES-BGK: the anisotropic Gaussian with covariance ``theta I + D`` has
  coefficients ``rho p_alpha`` where ``p`` are the Taylor coefficients of
  ``exp(x^T D x / 2)``, generated by the recurrence
  ``alpha_k p_alpha = sum_j D_kj p_{alpha - e_k - e_j}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NonphysicalState, NonSPDError
from .hermite_core import (
    NON_SPD,
    NONPHYSICAL,
    OK,
    BasisParams,
    MacroState,
    MomentRep,
    coefficient_count,
    extract_macro,
    index_table,
    macro_from_grad,
)

BGK, ES_BGK, SHAKHOV = 0, 1, 2
_KINDS = {"bgk": BGK, "es-bgk": ES_BGK, "esbgk": ES_BGK, "es_bgk": ES_BGK, "shakhov": SHAKHOV}
_NAMES = {BGK: "BGK", ES_BGK: "ES-BGK", SHAKHOV: "Shakhov"}

ARGON_MASS = 6.63e-26  # kg
ARGON_PRANDTL = 2.0 / 3.0
VISCOSITY_INDEX = 0.81


@dataclass(frozen=True)
class CollisionModel:
    kind: str = "Shakhov"
    prandtl: float = ARGON_PRANDTL

    def __post_init__(self):
        key = self.kind.lower()
        if key not in _KINDS:
            raise ValueError(f"unknown collision model {self.kind!r}")
        object.__setattr__(self, "kind", _NAMES[_KINDS[key]])
        if not 0.0 < self.prandtl <= 1.5:
            raise ValueError(f"Prandtl number must lie in (0, 1.5], got {self.prandtl}")

    @property
    def code(self) -> int:
        return _KINDS[self.kind.lower()]

    @property
    def beta(self) -> float:
        return self.prandtl if self.code == ES_BGK else 1.0


@dataclass(frozen=True)
class GasParams:
    knudsen: float
    viscosity_index: float = VISCOSITY_INDEX
    molecule_mass: float = ARGON_MASS

    def __post_init__(self):
        if not self.knudsen > 0:
            raise ValueError(f"Knudsen number must be positive, got {self.knudsen}")
        if not self.molecule_mass > 0:
            raise ValueError("molecule mass must be positive")


def model_params(model: CollisionModel, gas: GasParams) -> np.ndarray:
    """Flat parameter vector consumed by the kernels: kind, Pr, beta, Kn, w."""
    return np.array([model.code, model.prandtl, model.beta, gas.knudsen, gas.viscosity_index], dtype=float)


@njit(cache=True)
def nu_kernel(rho, th, cpar):
    return cpar[2] * math.sqrt(0.5 * math.pi) / cpar[3] * rho * th ** (1.0 - cpar[4])


@njit(cache=True)
def equilibrium_kernel(f, th, cpar, tab, out):
    """Grad-basis coefficients of f_E into ``out``; returns a status code."""
    alpha, down, up, special = tab
    rho, sigma, q = macro_from_grad(f, special)
    n = f.shape[0]
    for p in range(n):
        out[p] = 0.0
    out[0] = rho
    kind = int(cpar[0])
    pr = cpar[1]
    if kind == 2:
        c = (1.0 - pr) / 5.0
        for i in range(3):
            out[special[2, i]] += c * q[i]
            for d in range(3):
                if d != i:
                    out[special[6 + i, d]] += c * q[i]
    elif kind == 1:
        dmat = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                dmat[i, j] = (1.0 - 1.0 / pr) * 0.5 * (sigma[i, j] + sigma[j, i]) / rho
        # Sylvester test on Lambda = theta I + D
        l00 = th + dmat[0, 0]
        l11 = th + dmat[1, 1]
        l22 = th + dmat[2, 2]
        m1 = l00
        m2 = l00 * l11 - dmat[0, 1] * dmat[1, 0]
        m3 = (
            l00 * (l11 * l22 - dmat[1, 2] * dmat[2, 1])
            - dmat[0, 1] * (dmat[1, 0] * l22 - dmat[1, 2] * dmat[2, 0])
            + dmat[0, 2] * (dmat[1, 0] * dmat[2, 1] - l11 * dmat[2, 0])
        )
        eps = 1e-12 * th
        if not (m1 > eps and m2 > eps * th and m3 > eps * th * th):
            return NON_SPD
        for p in range(1, n):
            k = 0
            while alpha[p, k] == 0:
                k += 1
            q1 = down[p, k]
            s = 0.0
            for j in range(3):
                q2 = down[q1, j]
                if q2 >= 0:
                    s += dmat[k, j] * out[q2]
            out[p] = s / alpha[p, k]
        # the recurrence was seeded with rho, so out already carries the density
    return OK


@njit(cache=True)
def collision_kernel(f, th, cpar, tab, out):
    """Q_alpha = nu (f_E - f)_alpha in the Grad basis of ``f``."""
    rho = f[0]
    if not (rho > 0.0 and th > 0.0):
        return NONPHYSICAL
    status = equilibrium_kernel(f, th, cpar, tab, out)
    if status != OK:
        return status
    nu = nu_kernel(rho, th, cpar)
    for p in range(f.shape[0]):
        out[p] = nu * (out[p] - f[p])
    # mass and momentum are conserved by construction in the Grad basis
    out[0] = 0.0
    for d in range(3):
        out[tab[3][0, d]] = 0.0
    return OK


def collision_frequency(rho: float, theta: float, gas: GasParams, model: CollisionModel) -> float:
    if not rho > 0 or not theta > 0:
        raise NonphysicalState(f"collision frequency needs rho > 0 and theta > 0 (rho={rho}, theta={theta})")
    return float(nu_kernel(rho, theta, model_params(model, gas)))


def _macro_to_rep(macro: MacroState, order: int) -> MomentRep:
    """Smallest Grad representation carrying the given stress and heat flux."""
    tab = index_table(order)
    f = np.zeros(coefficient_count(order))
    f[0] = macro.rho
    sigma = np.asarray(macro.sigma, dtype=float)
    q = np.asarray(macro.q, dtype=float)
    trace = np.trace(sigma) / 3.0
    for i in range(3):
        for j in range(i, 3):
            val = sigma[i, j] if i != j else 0.5 * (sigma[i, i] - trace)
            f[tab.special[3 + i, j]] = val
    for i in range(3):
        f[tab.special[2, i]] = q[i] / 3.0
    return MomentRep(order, BasisParams(macro.u, macro.theta), f)


def equilibrium_rep(model: CollisionModel, macro: MacroState, order: int) -> MomentRep:
    """Grad-basis coefficients of the model equilibrium for the given macro state.

    Only the trace-free part of ``macro.sigma`` enters (Grad states carry no
    trace).
    """
    if not macro.rho > 0 or not macro.theta > 0:
        raise NonphysicalState("equilibrium needs positive density and temperature")
    rep = _macro_to_rep(macro, order)
    out = np.empty_like(rep.coeffs)
    cpar = model_params(model, GasParams(1.0))
    status = equilibrium_kernel(rep.coeffs, macro.theta, cpar, index_table(order).packed(), out)
    if status == NON_SPD:
        sigma = np.asarray(macro.sigma, dtype=float)
        sigma = sigma - np.trace(sigma) / 3.0 * np.eye(3)
        lam = macro.theta * np.eye(3) + (1.0 - 1.0 / model.prandtl) * 0.5 * (sigma + sigma.T) / macro.rho
        raise NonSPDError("ES-BGK covariance is not positive definite", eigenvalue=float(np.linalg.eigvalsh(lam)[0]))
    return MomentRep(order, rep.params, out)


def collision_coeffs(rep: MomentRep, model: CollisionModel, gas: GasParams) -> np.ndarray:
    """Relaxation coefficients Q_alpha in ``rep``'s own (Grad) basis."""
    macro = extract_macro(rep)
    out = np.empty_like(rep.coeffs)
    status = collision_kernel(rep.coeffs, rep.params.spread, model_params(model, gas), rep.table.packed(), out)
    if status == NON_SPD:
        equilibrium_rep(model, macro, rep.order)  # raises with the offending eigenvalue
    if status != OK:
        raise NonphysicalState("collision term undefined for this state")
    return out
