"""Constitutive data and pointwise constitutive operations.

Isotropic plane-strain elasticity degraded affinely by a scalar damage
variable ``zeta`` (1 = intact, 0 = damaged, with strictly positive residual
stiffness), von Mises plasticity with kinematic hardening ``h * identity``
acting on 2x2 deviators (``dev A = A - (tr A / 2) I``), and the rate-
independent dissipation densities for plastic slip and for damage/healing.

All operations are pure and vectorized: tensor arguments may carry leading
batch dimensions, ``zeta`` broadcasts against them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MaterialParams",
    "lame_from_young_poisson",
    "lame_of_zeta",
    "dev2",
    "tensor_norm",
    "stress",
    "return_map",
    "dissipation_density_plastic",
    "dissipation_density_damage",
    "stored_energy_density",
]


@dataclass(frozen=True)
class MaterialParams:
    """Material data for the damage-degraded elasto-plastic model.

    Attributes
    ----------
    lambda1, mu1 : float
        Intact Lame moduli (Pa).
    lambda0, mu0 : float
        Fully damaged Lame moduli (Pa); ``mu0 > 0`` keeps the damaged
        material coercive (incomplete damage).
    hardening_h : float
        Kinematic hardening modulus (Pa); the hardening tensor is
        ``h * identity`` on deviators.
    sigma_y : float
        Yield stress (Pa), radius of the von Mises set in the Frobenius
        norm of the 2x2 deviator.
    a : float
        Damage activation energy per unit volume (Pa); charged per unit
        decrease of zeta.
    b : float
        Healing threshold energy (Pa); charged per unit increase of zeta.
    kappa2 : float
        Damage gradient coefficient (J/m).
    kappa1 : float
        Plastic-gradient coefficient; fixed to 0 (elementwise plasticity).
    """

    lambda1: float
    mu1: float
    lambda0: float
    mu0: float
    hardening_h: float
    sigma_y: float
    a: float
    b: float
    kappa2: float
    kappa1: float = 0.0

    def __post_init__(self) -> None:
        if not (self.lambda1 >= self.lambda0 >= 0.0):
            raise ValueError(f"need lambda1 >= lambda0 >= 0, got "
                             f"{self.lambda1}, {self.lambda0}")
        if not (self.mu1 >= self.mu0 > 0.0):
            raise ValueError(f"need mu1 >= mu0 > 0, got {self.mu1}, {self.mu0}")
        if not self.sigma_y > 0.0:
            raise ValueError(f"need sigma_y > 0, got {self.sigma_y}")
        if not self.hardening_h > 0.0:
            raise ValueError(f"need hardening_h > 0, got {self.hardening_h}")
        if not self.a > 0.0:
            raise ValueError(f"need a > 0, got {self.a}")
        if not self.b >= self.a:
            raise ValueError(f"need b >= a, got b={self.b}, a={self.a}")
        if not self.kappa2 > 0.0:
            raise ValueError(f"need kappa2 > 0, got {self.kappa2}")
        if self.kappa1 != 0.0:
            raise ValueError("kappa1 must be 0 (plastic gradient term is "
                             "not supported)")


def lame_from_young_poisson(E: float, nu: float) -> tuple[float, float]:
    """Convert Young's modulus and Poisson's ratio to Lame moduli.

    Uses the 3-D/plane-strain convention ``lambda = E nu / ((1+nu)(1-2nu))``,
    ``mu = E / (2 (1+nu))``.
    """
    if not E > 0.0:
        raise ValueError(f"need E > 0, got {E}")
    if not (-1.0 < nu < 0.5):
        raise ValueError(f"need -1 < nu < 0.5, got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


# ---------------------------------------------------------------------------
# Small tensor helpers (2x2, possibly batched)
# ---------------------------------------------------------------------------

def dev2(A: np.ndarray) -> np.ndarray:
    """Deviatoric part in the 2x2 sense, ``A - (tr A / 2) I``."""
    A = np.asarray(A, dtype=np.float64)
    tr_half = 0.5 * (A[..., 0, 0] + A[..., 1, 1])
    out = A.copy()
    out[..., 0, 0] -= tr_half
    out[..., 1, 1] -= tr_half
    return out


def tensor_norm(A: np.ndarray) -> np.ndarray:
    """Frobenius norm over the trailing 2x2 axes."""
    A = np.asarray(A, dtype=np.float64)
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


def lame_of_zeta(zeta, p: MaterialParams):
    """Damage-degraded Lame moduli, affine in zeta."""
    zeta = np.asarray(zeta, dtype=np.float64)
    lam = p.lambda0 + zeta * (p.lambda1 - p.lambda0)
    mu = p.mu0 + zeta * (p.mu1 - p.mu0)
    return lam, mu


def _check_zeta(zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=np.float64)
    if np.any(zeta < 0.0) or np.any(zeta > 1.0):
        raise ValueError("zeta outside [0, 1]")
    return zeta


# ---------------------------------------------------------------------------
# Constitutive operations
# ---------------------------------------------------------------------------

def stress(e_el: np.ndarray, zeta, p: MaterialParams) -> np.ndarray:
    """Elastic stress ``lambda(zeta) tr(e) I + 2 mu(zeta) e``.

    Parameters
    ----------
    e_el : ndarray, shape (..., 2, 2)
        Elastic strain (total strain minus plastic strain).
    zeta : scalar or ndarray broadcastable to the batch shape
        Damage value(s) in [0, 1].
    """
    e_el = np.asarray(e_el, dtype=np.float64)
    zeta = _check_zeta(zeta)
    lam, mu = lame_of_zeta(zeta, p)
    tr = e_el[..., 0, 0] + e_el[..., 1, 1]
    out = 2.0 * mu[..., None, None] * e_el
    diag = lam * tr
    out[..., 0, 0] += diag
    out[..., 1, 1] += diag
    return out


def return_map(e_total: np.ndarray, pi_prev: np.ndarray, zeta,
               p: MaterialParams) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form elementwise plastic update (von Mises, kinematic
    hardening).

    Minimizes ``1/2 C(zeta)(e - pi):(e - pi) + 1/2 h |pi|^2 +
    sigma_y |pi - pi_prev|`` over deviatoric 2x2 matrices ``pi``.

    Parameters
    ----------
    e_total : ndarray, shape (..., 2, 2)
        Total strain.
    pi_prev : ndarray, shape (..., 2, 2)
        Previous plastic strain; must be trace-free within 1e-10.
    zeta : scalar or ndarray
        Frozen damage value(s).

    Returns
    -------
    pi_new : ndarray, shape (..., 2, 2)
        The exact unique minimizer (deviatoric).
    dissipated : ndarray, shape (...)
        Dissipation density ``sigma_y |pi_new - pi_prev|`` (Pa).
    """
    e_total = np.asarray(e_total, dtype=np.float64)
    pi_prev = np.asarray(pi_prev, dtype=np.float64)
    tr_pi = np.abs(pi_prev[..., 0, 0] + pi_prev[..., 1, 1])
    if np.any(tr_pi > 1e-10):
        raise ValueError("pi_prev is not trace-free (|tr| > 1e-10)")
    zeta = _check_zeta(zeta)
    _, mu = lame_of_zeta(zeta, p)
    h = p.hardening_h

    s_trial = 2.0 * mu[..., None, None] * (dev2(e_total) - pi_prev) \
        - h * pi_prev
    norm = tensor_norm(s_trial)
    excess = norm - p.sigma_y
    plastic = excess > 0.0  # tie |s_trial| = sigma_y stays elastic

    gamma = np.where(plastic, excess / (2.0 * mu + h), 0.0)
    safe_norm = np.where(norm > 0.0, norm, 1.0)
    pi_new = pi_prev + (gamma / safe_norm)[..., None, None] * s_trial
    dissipated = p.sigma_y * gamma
    return pi_new, dissipated


def dissipation_density_plastic(delta_pi: np.ndarray, p: MaterialParams):
    """Plastic dissipation density ``sigma_y |delta_pi|`` (Pa)."""
    delta_pi = np.asarray(delta_pi, dtype=np.float64)
    tr = np.abs(delta_pi[..., 0, 0] + delta_pi[..., 1, 1])
    if np.any(tr > 1e-10):
        raise ValueError("delta_pi is not trace-free (|tr| > 1e-10)")
    return p.sigma_y * tensor_norm(delta_pi)


def dissipation_density_damage(delta_zeta, p: MaterialParams):
    """Damage/healing dissipation density ``a (dz)^- + b (dz)^+`` (Pa)."""
    dz = np.asarray(delta_zeta, dtype=np.float64)
    return p.a * np.maximum(-dz, 0.0) + p.b * np.maximum(dz, 0.0)


def stored_energy_density(e_total: np.ndarray, pi: np.ndarray, zeta,
                          grad_zeta: np.ndarray, p: MaterialParams):
    """Stored energy density (Pa = J/m^3 per unit thickness).

    ``1/2 C(zeta)(e - pi):(e - pi) + 1/2 h |pi|^2 + (kappa2/2)|grad zeta|^2``.
    The hardening term is damage-independent.
    """
    e_total = np.asarray(e_total, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    tr_pi = np.abs(pi[..., 0, 0] + pi[..., 1, 1])
    if np.any(tr_pi > 1e-10):
        raise ValueError("pi is not trace-free (|tr| > 1e-10)")
    zeta = _check_zeta(zeta)
    grad_zeta = np.asarray(grad_zeta, dtype=np.float64)

    lam, mu = lame_of_zeta(zeta, p)
    e_el = e_total - pi
    tr_el = e_el[..., 0, 0] + e_el[..., 1, 1]
    elastic = 0.5 * lam * tr_el ** 2 + mu * np.sum(e_el * e_el, axis=(-2, -1))
    hardening = 0.5 * p.hardening_h * np.sum(pi * pi, axis=(-2, -1))
    gradient = 0.5 * p.kappa2 * np.sum(grad_zeta * grad_zeta, axis=-1)
    return elastic + hardening + gradient
