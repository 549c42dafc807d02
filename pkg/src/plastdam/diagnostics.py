"""A-posteriori diagnostics: maximum-dissipation residuum and equilibrium
residual.

The per-step residuum measures how far the computed increment is from
maximizing dissipation: for the internal variables z = (pi, zeta),

    r_k = R(z_k - z_{k-1}) - <xi_{k-1}, z_k - z_{k-1}>,

where R is the one-homogeneous dissipation functional and xi_{k-1} is the
driving force available to the increment, evaluated at the *previous*
step's state (semi-implicit convention; see ``AmdpWindow``). Semistability
of step k-1 makes every step residuum nonnegative up to solver tolerance,
and for vanishing step size the cumulative residuum becomes small relative
to the cumulative dissipation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from plastdam.fields import LoadProgram, State, element_zeta_mean
from plastdam.material import MaterialParams, dev2, lame_of_zeta
from plastdam.mesh import BoundaryTags, Mesh, lumped_node_areas, p1_scalar_stiffness, p1_strain
from plastdam.plastic_step import equilibrium_residual_vector
from plastdam.fields import dirichlet_dofs

__all__ = [
    "AmdpWindow",
    "AmdpRecord",
    "amdp_step_residuum",
    "euler_lagrange_residual",
]


@dataclass(frozen=True)
class AmdpWindow:
    """Three-level history needed for the step-k dissipation residuum.

    Attributes
    ----------
    k : int
        Step index, k >= 1.
    u_prev : ndarray, shape (n_nodes, 2)
        Displacement of step k-1 (with its boundary values).
    pi_prev : ndarray, shape (n_elements, 2, 2)
        Plastic strain of step k-1.
    zeta_prev : ndarray, shape (n_nodes,)
        Damage of step k-1.
    zeta_prevprev : ndarray, shape (n_nodes,)
        Damage of step k-2, the field the step-(k-1) plastic substep was
        frozen at. For k = 1 pass the initial damage field.
    pi_new, zeta_new :
        The step-k internal variables.
    xi_const_prev : ndarray, shape (n_nodes,)
        Box-constraint force density of the step-(k-1) damage substep.
        For k = 1 pass zeros.
    """

    k: int
    u_prev: np.ndarray
    pi_prev: np.ndarray
    zeta_prev: np.ndarray
    zeta_prevprev: np.ndarray
    pi_new: np.ndarray
    zeta_new: np.ndarray
    xi_const_prev: np.ndarray

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"step index must be >= 1, got {self.k}")
        for name in ("u_prev", "pi_prev", "zeta_prev", "zeta_prevprev",
                     "pi_new", "zeta_new", "xi_const_prev"):
            value = getattr(self, name)
            if value is None:
                raise ValueError(f"missing history field {name!r} (steps "
                                 f"k-2..k are required)")
            object.__setattr__(self, name,
                               np.asarray(value, dtype=np.float64))


@dataclass(frozen=True)
class AmdpRecord:
    """Step-k maximum-dissipation residuum and its accumulation.

    Attributes
    ----------
    k : int
    residuum_field : ndarray, shape (n_elements,)
        Residuum density per element (Pa); nodal contributions are
        scattered with lumped weights, so the field integrates exactly to
        ``residuum_integral``.
    residuum_integral : float
        Integral of the step residuum over the body (J).
    cumulative_integral : float
        Sum of step integrals through step k (J).
    dissipation_cum : float
        Cumulative dissipation (plastic + damage) through step k (J), the
        natural normalization of the cumulative residuum.
    """

    k: int
    residuum_field: np.ndarray
    residuum_integral: float
    cumulative_integral: float
    dissipation_cum: float


def amdp_step_residuum(window: AmdpWindow, mesh: Mesh,
                       params: MaterialParams,
                       cumulative_prev: float = 0.0,
                       dissipation_prev: float = 0.0) -> AmdpRecord:
    """Residuum of the approximate maximum-dissipation identity at step k.

    The plastic part is elementwise
    ``sigma_y |dpi| - s_prev : dpi`` with the driving stress of step k-1,
    ``s_prev = 2 mu(zetabar_{k-2}) (dev e(u_prev) - pi_prev) - h pi_prev``.
    The damage part is nodal,
    ``w rho(dz) + (g_prev + K zeta_prev + eta_prev) dz``,
    with the driving vector and gradient stiffness of step k-1 and the box
    force of the step-(k-1) damage update.

    Parameters
    ----------
    window : AmdpWindow
        States of steps k-2, k-1, k (see class docstring for the k = 1
        convention).
    cumulative_prev, dissipation_prev : float
        Accumulators through step k-1.
    """
    if window.u_prev.shape != (mesh.n_nodes, 2):
        raise ValueError("window does not match the mesh (u_prev shape)")

    h = params.hardening_h

    # --- plastic part (per element) ---------------------------------------
    e_prev = p1_strain(mesh, window.u_prev)
    zbar_pp = element_zeta_mean(mesh, window.zeta_prevprev)
    _, mu_pp = lame_of_zeta(zbar_pp, params)
    s_prev = 2.0 * mu_pp[:, None, None] * (dev2(e_prev) - window.pi_prev) \
        - h * window.pi_prev
    dpi = window.pi_new - window.pi_prev
    dpi_norm = np.sqrt(np.sum(dpi * dpi, axis=(1, 2)))
    r_pi = params.sigma_y * dpi_norm - np.sum(s_prev * dpi, axis=(1, 2))
    diss_pi = float(mesh.element_area @ (params.sigma_y * dpi_norm))

    # --- damage part (per node) --------------------------------------------
    from plastdam.damage_step import damage_driving_vector

    e_el_prev = e_prev - window.pi_prev
    g_prev = damage_driving_vector(mesh, e_el_prev, params)
    K = params.kappa2 * p1_scalar_stiffness(mesh)
    w = lumped_node_areas(mesh)
    dz = window.zeta_new - window.zeta_prev
    rho = params.a * np.maximum(-dz, 0.0) + params.b * np.maximum(dz, 0.0)
    eta_prev = window.xi_const_prev * w
    r_z = w * rho + (g_prev + K @ window.zeta_prev + eta_prev) * dz
    diss_z = float(w @ rho)

    integral = float(mesh.element_area @ r_pi) + float(np.sum(r_z))

    # Elementwise density: nodal parts scattered with weight (area/3)/w_i.
    r_z_density = r_z / w
    field = r_pi + r_z_density[mesh.elements].sum(axis=1) / 3.0

    return AmdpRecord(
        k=window.k,
        residuum_field=field,
        residuum_integral=integral,
        cumulative_integral=cumulative_prev + integral,
        dissipation_cum=dissipation_prev + diss_pi + diss_z,
    )


def euler_lagrange_residual(state: State, t: float, mesh: Mesh,
                            tags: BoundaryTags, params: MaterialParams,
                            load: LoadProgram) -> float:
    """Relative out-of-balance force of the displacement equilibrium.

    Assembles the damage-degraded stiffness and the plastic/body forces,
    restricts the residual to the free DOFs, and normalizes by the larger
    of the elastic and applied force scales. Zero state under zero load
    returns exactly 0; a converged displacement solve is at solver
    precision; perturbing any free DOF strictly increases the value.
    """
    r, ku, f = equilibrium_residual_vector(mesh, state.u, state.pi,
                                           state.zeta, params, load)
    cons, _ = dirichlet_dofs(tags, t, load, mesh)
    free = np.setdiff1d(np.arange(2 * mesh.n_nodes), cons)
    res = float(np.linalg.norm(r[free]))
    scale = max(float(np.linalg.norm(ku)), float(np.linalg.norm(f)))
    if scale == 0.0:
        return 0.0 if res == 0.0 else np.inf
    return res / scale
