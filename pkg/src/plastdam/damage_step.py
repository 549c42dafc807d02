"""Damage substep: nodal update as a box-constrained QP.

At fixed (u, pi) the damage functional

    F(zeta) = 1/2 zeta' K zeta + g' zeta + sum_i w_i rho(zeta_i - prev_i)

with K the damage-gradient stiffness, g the (nonnegative) elastic driving
vector, w the lumped nodal areas, and rho(s) = a s^- + b s^+, is minimized
over the box [0, 1]^n. Splitting the increment into nonnegative raise/lower
parts ``zeta = prev + up - down`` turns the nonsmooth rho into a linear
cost, giving a convex box-constrained QP in the stacked variable
``(up, down)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from plastdam.fields import LoadProgram
from plastdam.material import MaterialParams
from plastdam.mesh import Mesh, lumped_node_areas, p1_scalar_stiffness, p1_strain
from plastdam.qp_solver import BoxQp, solve_box_qp

__all__ = [
    "DamageQpSolution",
    "DamageQpMap",
    "damage_driving_vector",
    "assemble_damage_qp",
    "solve_damage",
    "extract_constraint_force",
]


@dataclass(frozen=True)
class DamageQpSolution:
    """Result of one damage substep.

    Attributes
    ----------
    zeta : ndarray, shape (n_nodes,)
        Updated damage field in [0, 1].
    zeta_up, zeta_down : ndarray
        Nonnegative raise/lower parts with ``zeta = zeta_prev + zeta_up -
        zeta_down`` exactly and ``zeta_up * zeta_down = 0`` nodewise.
    xi_const : ndarray, shape (n_nodes,)
        Density (Pa) of the box-constraint force: nonnegative where
        zeta = 1, nonpositive where zeta = 0, zero in the interior. Its
        lumped integral enters the maximum-dissipation bookkeeping of the
        following step.
    kkt_residual : float
        Projected-gradient residual reported by the QP solver.
    """

    zeta: np.ndarray
    zeta_up: np.ndarray
    zeta_down: np.ndarray
    xi_const: np.ndarray
    kkt_residual: float


@dataclass(frozen=True)
class DamageQpMap:
    """Affine reconstruction data for the stacked damage QP.

    The QP variable is ``x = (up, down)`` and the damage field is
    ``zeta = zeta_prev + x[:n] - x[n:]``.
    """

    zeta_prev: np.ndarray
    stiffness: object           # K = kappa2 * P1 stiffness (csr)
    driving: np.ndarray         # g, integrated driving vector (J per unit zeta)
    weights: np.ndarray         # lumped nodal areas

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        n = self.zeta_prev.shape[0]
        return self.zeta_prev + x[:n] - x[n:]


def damage_driving_vector(mesh: Mesh, e_el: np.ndarray,
                          params: MaterialParams) -> np.ndarray:
    """Lumped nodal driving vector g_i >= 0 of the damage update.

    The driving density per element is half the elastic energy release on
    full damage, ``1/2 (C1 - C0) e_el : e_el``; it is distributed to the
    element's nodes with weight area/3.
    """
    e_el = np.asarray(e_el, dtype=np.float64)
    dl = params.lambda1 - params.lambda0
    dm = params.mu1 - params.mu0
    tr = e_el[:, 0, 0] + e_el[:, 1, 1]
    dens = 0.5 * dl * tr ** 2 + dm * np.sum(e_el * e_el, axis=(1, 2))
    g = np.zeros(mesh.n_nodes, dtype=np.float64)
    np.add.at(g, mesh.elements.ravel(),
              np.repeat(mesh.element_area / 3.0 * dens, 3))
    return g


def assemble_damage_qp(u_k: np.ndarray, pi_k: np.ndarray,
                       zeta_prev: np.ndarray, t_k: float, mesh: Mesh,
                       params: MaterialParams, load: LoadProgram
                       ) -> tuple[BoxQp, DamageQpMap]:
    """Assemble the stacked box QP of the damage substep.

    With ``zeta = prev + up - down`` and ``c = K prev + g``:

        min 1/2 (up-down)' K (up-down) + c'(up-down) + b w'up + a w'down
        s.t. 0 <= up <= 1 - prev,  0 <= down <= prev.

    ``t_k`` and ``load`` are accepted for interface uniformity; the
    assembly depends on time only through (u_k, pi_k).
    """
    del t_k, load
    zeta_prev = np.asarray(zeta_prev, dtype=np.float64)
    e_el = p1_strain(mesh, np.asarray(u_k, dtype=np.float64)) \
        - np.asarray(pi_k, dtype=np.float64)
    g = damage_driving_vector(mesh, e_el, params)
    K = params.kappa2 * p1_scalar_stiffness(mesh)
    w = lumped_node_areas(mesh)

    c = K @ zeta_prev + g
    n = mesh.n_nodes
    hess = sparse.bmat([[K, -K], [-K, K]], format="csr")
    linear = np.concatenate([c + params.b * w, -c + params.a * w])
    lower = np.zeros(2 * n)
    upper = np.concatenate([1.0 - zeta_prev, zeta_prev])
    qp = BoxQp(hessian=hess, linear=linear, lower=lower, upper=upper)
    return qp, DamageQpMap(zeta_prev=zeta_prev, stiffness=K, driving=g,
                           weights=w)


def extract_constraint_force(zeta: np.ndarray, delta: np.ndarray,
                             qp_map: DamageQpMap,
                             params: MaterialParams) -> np.ndarray:
    """Density of the box-constraint force at the damage minimizer.

    From stationarity ``G + w lam + eta = 0`` with ``G = K zeta + g``,
    ``lam`` a selection from the subdifferential of the dissipation rate
    (per unit volume) and ``eta`` in the normal cone of [0, 1]: eta is zero
    at interior nodes; at the bounds the dissipation multiplier is pinned
    by the increment sign where it moved, otherwise chosen best inside
    [-a, b], and the remainder is clamped into the cone (nonpositive at 0,
    nonnegative at 1).
    """
    G = qp_map.stiffness @ zeta + qp_map.driving
    w = qp_map.weights
    lam_free = np.clip(-G / w, -params.a, params.b)
    lam = np.where(delta < 0.0, -params.a,
                   np.where(delta > 0.0, params.b, lam_free))
    eta = -G - w * lam
    eta = np.where(zeta >= 1.0, np.maximum(eta, 0.0),
                   np.where(zeta <= 0.0, np.minimum(eta, 0.0), 0.0))
    return eta / w


def solve_damage(u_k: np.ndarray, pi_k: np.ndarray, zeta_prev: np.ndarray,
                 t_k: float, mesh: Mesh, params: MaterialParams,
                 load: LoadProgram, tol: float = 1e-9) -> DamageQpSolution:
    """Minimize the damage functional at fixed (u, pi).

    ``tol`` is an absolute projected-gradient target (J); the healing
    threshold makes the QP's linear term large, so the solver's relative
    tolerance is rescaled to reach this absolute residual (it cannot go
    below a few units of roundoff of the gradient evaluation).

    The QP is warm-started at zero increment, so steps below the damage
    activation threshold return the previous field bitwise. The returned
    raise/lower split is post-processed to exact nodewise complementarity
    (removing the common part of the split can only lower the objective).
    """
    qp, qp_map = assemble_damage_qp(u_k, pi_k, zeta_prev, t_k, mesh, params,
                                    load)
    n = mesh.n_nodes
    lin_scale = max(1.0, float(np.max(np.abs(qp.linear))))
    rel_tol = max(tol, 64.0 * np.finfo(np.float64).eps * lin_scale) / lin_scale
    sol = solve_box_qp(qp, x0=np.zeros(2 * n), tol=rel_tol)

    zeta_prev = qp_map.zeta_prev
    raw = zeta_prev + sol.x[:n] - sol.x[n:]
    zeta = np.clip(raw, 0.0, 1.0)
    delta = zeta - zeta_prev
    zeta_up = np.maximum(delta, 0.0)
    zeta_down = np.maximum(-delta, 0.0)

    xi_const = extract_constraint_force(zeta, delta, qp_map, params)
    return DamageQpSolution(zeta=zeta, zeta_up=zeta_up, zeta_down=zeta_down,
                            xi_const=xi_const, kkt_residual=sol.kkt_residual)
