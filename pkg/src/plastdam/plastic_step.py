"""Displacement/plastic-strain substep at frozen damage.

One time step of the fractional-step scheme first minimizes the stored
energy plus plastic dissipation over the displacement and the elementwise
plastic strain, holding the damage field fixed. The minimization alternates
an exact linear solve in the displacement (the plastic strain acts as a
prestress) with the exact elementwise return map, and is monotone in the
step functional from the first sweep on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from plastdam.fields import (
    LoadProgram,
    State,
    dirichlet_dofs,
    dirichlet_extension,
    element_zeta_mean,
)
from plastdam.material import MaterialParams, lame_of_zeta, return_map
from plastdam.mesh import BoundaryTags, Mesh, lumped_node_areas, p1_strain

__all__ = [
    "PlasticStepReport",
    "PlasticStepError",
    "assemble_elastic_stiffness",
    "internal_force_from_plastic",
    "body_force_vector",
    "equilibrium_residual_vector",
    "solve_plastic",
]

_MAX_SWEEPS = 200
_ENERGY_REL_TOL = 1e-12


@dataclass(frozen=True)
class PlasticStepReport:
    """Convergence record of one displacement/plastic substep.

    Attributes
    ----------
    iterations : int
        Number of alternating sweeps performed.
    energy_final : float
        Stored energy minus body-force work at the accepted (u, pi) and
        the frozen damage field (J).
    energy_start : float
        Same functional at the comparison state: the previous displacement
        advected to the new boundary data, with the previous plastic
        strain (J). The minimizer-comparison inequality reads
        ``energy_final + dissipated_plastic <= energy_start (+ tol)``.
    increment_norm : float
        Euclidean norm of the last displacement update (m).
    dissipated_plastic : float
        Plastic dissipation of the accepted increment (J).
    """

    iterations: int
    energy_final: float
    energy_start: float
    increment_norm: float
    dissipated_plastic: float


class PlasticStepError(RuntimeError):
    """Alternating minimization failed to meet its stopping criteria."""

    def __init__(self, message: str, report: PlasticStepReport | None = None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def _element_dofs(mesh: Mesh) -> np.ndarray:
    """Interleaved DOF indices per element, shape (n_elements, 6)."""
    el = mesh.elements
    dofs = np.empty((mesh.n_elements, 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * el
    dofs[:, 1::2] = 2 * el + 1
    return dofs


def _strain_displacement(mesh: Mesh) -> np.ndarray:
    """Voigt strain-displacement matrices B, shape (n_elements, 3, 6).

    Rows are (e_xx, e_yy, gamma_xy) with engineering shear, columns follow
    the interleaved element DOFs.
    """
    g = mesh.grad_phi
    B = np.zeros((mesh.n_elements, 3, 6), dtype=np.float64)
    for a in range(3):
        B[:, 0, 2 * a] = g[:, a, 0]
        B[:, 1, 2 * a + 1] = g[:, a, 1]
        B[:, 2, 2 * a] = g[:, a, 1]
        B[:, 2, 2 * a + 1] = g[:, a, 0]
    return B


def assemble_elastic_stiffness(mesh: Mesh, zeta: np.ndarray,
                               params: MaterialParams):
    """Sparse stiffness of the damage-degraded elastic energy.

    Parameters
    ----------
    zeta : ndarray, shape (n_nodes,)
        Nodal damage; moduli are evaluated at the elementwise mean.

    Returns
    -------
    scipy.sparse.csr_matrix, shape (2 n_nodes, 2 n_nodes)
    """
    zbar = element_zeta_mean(mesh, zeta)
    lam, mu = lame_of_zeta(zbar, params)
    B = _strain_displacement(mesh)

    D = np.zeros((mesh.n_elements, 3, 3), dtype=np.float64)
    D[:, 0, 0] = lam + 2.0 * mu
    D[:, 1, 1] = lam + 2.0 * mu
    D[:, 0, 1] = lam
    D[:, 1, 0] = lam
    D[:, 2, 2] = mu

    ke = np.einsum("e,eki,ekl,elj->eij", mesh.element_area, B, D, B,
                   optimize=True)
    dofs = _element_dofs(mesh)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * mesh.n_nodes
    return sparse.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def internal_force_from_plastic(mesh: Mesh, pi: np.ndarray,
                                zeta: np.ndarray,
                                params: MaterialParams) -> np.ndarray:
    """Nodal force vector of the plastic prestress, ``int C(zeta) pi : e(v)``.

    Since pi is deviatoric, ``C(zeta) pi = 2 mu(zeta) pi``.
    """
    zbar = element_zeta_mean(mesh, zeta)
    _, mu = lame_of_zeta(zbar, params)
    s = 2.0 * mu[:, None, None] * np.asarray(pi, dtype=np.float64)
    s_voigt = np.stack([s[:, 0, 0], s[:, 1, 1], s[:, 0, 1]], axis=1)
    B = _strain_displacement(mesh)
    fe = np.einsum("e,eki,ek->ei", mesh.element_area, B, s_voigt)
    f = np.zeros(2 * mesh.n_nodes, dtype=np.float64)
    np.add.at(f, _element_dofs(mesh).ravel(), fe.ravel())
    return f


def body_force_vector(mesh: Mesh, load: LoadProgram) -> np.ndarray:
    """Lumped nodal body-force vector."""
    g = np.asarray(load.body_force, dtype=np.float64)
    f = np.zeros(2 * mesh.n_nodes, dtype=np.float64)
    if g.any():
        w = lumped_node_areas(mesh)
        f[0::2] = w * g[0]
        f[1::2] = w * g[1]
    return f


def equilibrium_residual_vector(mesh: Mesh, u: np.ndarray, pi: np.ndarray,
                                zeta: np.ndarray, params: MaterialParams,
                                load: LoadProgram):
    """Out-of-balance force ``K(zeta) u - f_plastic - f_body`` and the two
    force contributions it balances (for normalization)."""
    K = assemble_elastic_stiffness(mesh, zeta, params)
    ku = K @ np.asarray(u, dtype=np.float64).ravel()
    f = internal_force_from_plastic(mesh, pi, zeta, params) \
        + body_force_vector(mesh, load)
    return ku - f, ku, f


# ---------------------------------------------------------------------------
# Energies used inside the sweep loop
# ---------------------------------------------------------------------------

def _bulk_energy(mesh: Mesh, e: np.ndarray, pi: np.ndarray,
                 lam: np.ndarray, mu: np.ndarray, h: float,
                 f_body: np.ndarray, u_flat: np.ndarray) -> float:
    """Elastic + hardening energy minus body-force work (no damage-gradient
    term, which is constant during the substep)."""
    e_el = e - pi
    tr = e_el[:, 0, 0] + e_el[:, 1, 1]
    dens = 0.5 * lam * tr ** 2 + mu * np.sum(e_el * e_el, axis=(1, 2)) \
        + 0.5 * h * np.sum(pi * pi, axis=(1, 2))
    return float(mesh.element_area @ dens) - float(f_body @ u_flat)


# ---------------------------------------------------------------------------
# Alternating minimization
# ---------------------------------------------------------------------------

def solve_plastic(state_prev: State, zeta_frozen: np.ndarray, t_k: float,
                  mesh: Mesh, tags: BoundaryTags, params: MaterialParams,
                  load: LoadProgram, tol: float = 1e-10
                  ) -> tuple[np.ndarray, np.ndarray, PlasticStepReport]:
    """Minimize the step functional over (u, pi) at frozen damage.

    Alternates the exact displacement solve (stiffness factored once per
    call) with the exact elementwise return map against the previous plastic
    strain. Stops when the functional's relative decrease falls below 1e-12
    or the relative displacement increment falls below ``tol``; raises
    PlasticStepError after 200 sweeps. A final displacement solve at the
    converged plastic strain leaves the returned pair in equilibrium at
    factorization precision.

    Returns
    -------
    (u_k, pi_k, report)
        ``u_k`` has shape (n_nodes, 2) and carries the time-t_k boundary
        values; ``pi_k`` is the elementwise plastic strain.
    """
    zeta_frozen = np.asarray(zeta_frozen, dtype=np.float64)
    zbar = element_zeta_mean(mesh, zeta_frozen)
    lam, mu = lame_of_zeta(zbar, params)
    h = params.hardening_h

    K = assemble_elastic_stiffness(mesh, zeta_frozen, params)
    cons, vals = dirichlet_dofs(tags, t_k, load, mesh)
    n_dofs = 2 * mesh.n_nodes
    free = np.setdiff1d(np.arange(n_dofs), cons)
    K_ff = K[free][:, free]
    K_fc = K[free][:, cons]
    if free.size:
        try:
            lu = splu(K_ff.tocsc())
        except RuntimeError as err:
            raise PlasticStepError(
                f"stiffness factorization failed ({err}); the constrained "
                f"system is singular — check the boundary tagging") from err
        diag = np.abs(lu.U.diagonal())
        if diag.min() <= 1e-12 * diag.max():
            raise PlasticStepError(
                "constrained stiffness is numerically singular (unremoved "
                "rigid modes) — check the boundary tagging")
    else:
        lu = None

    f_body = body_force_vector(mesh, load)
    pi_prev = state_prev.pi
    pi = pi_prev

    # Comparison state: previous displacement advected to the new boundary
    # data by the affine ramp increment.
    t_prev = t_k - load.tau
    u_start = state_prev.u + (dirichlet_extension(mesh, t_k, load)
                              - dirichlet_extension(mesh, t_prev, load))
    e_start = p1_strain(mesh, u_start)
    energy_start = _bulk_energy(mesh, e_start, pi_prev, lam, mu, h,
                                f_body, u_start.ravel())

    u_flat = state_prev.u.ravel().copy()
    u_flat[cons] = vals

    energy_prev = np.inf
    increment = np.inf
    diss_total = 0.0
    converged = False

    for sweep in range(1, _MAX_SWEEPS + 1):
        # Displacement solve at the current plastic strain.
        f_pi = internal_force_from_plastic(mesh, pi, zeta_frozen, params)
        rhs = (f_pi + f_body)[free] - K_fc @ vals
        u_new = u_flat.copy()
        if lu is not None:
            u_new[free] = lu.solve(rhs)
        increment = float(np.linalg.norm(u_new - u_flat))
        u_norm = float(np.linalg.norm(u_new))
        u_flat = u_new

        # Exact elementwise plastic update against the *time-step* previous
        # plastic strain.
        u = u_flat.reshape(-1, 2)
        e = p1_strain(mesh, u)
        pi, diss_density = return_map(e, pi_prev, zbar, params)
        diss_total = float(mesh.element_area @ diss_density)

        energy = _bulk_energy(mesh, e, pi, lam, mu, h, f_body, u_flat) \
            + diss_total
        if sweep >= 2:
            rel_drop = (energy_prev - energy) / max(1.0, abs(energy))
            rel_inc = increment / max(u_norm, 1e-300)
            if rel_drop <= _ENERGY_REL_TOL or rel_inc <= tol:
                converged = True
        elif increment == 0.0 and np.array_equal(pi, pi_prev):
            # Exact fixpoint on the first sweep (e.g. unchanged load).
            converged = True
        energy_prev = energy
        if converged:
            break

    # Final displacement solve at the converged plastic strain, so the
    # returned pair satisfies the displacement equilibrium exactly (one
    # back-substitution with the cached factorization).
    if lu is not None:
        f_pi = internal_force_from_plastic(mesh, pi, zeta_frozen, params)
        u_flat[free] = lu.solve((f_pi + f_body)[free] - K_fc @ vals)

    u = u_flat.reshape(-1, 2)
    e = p1_strain(mesh, u)
    energy_final = _bulk_energy(mesh, e, pi, lam, mu, h, f_body, u_flat)
    report = PlasticStepReport(iterations=sweep, energy_final=energy_final,
                               energy_start=energy_start,
                               increment_norm=increment,
                               dissipated_plastic=diss_total)
    if not converged:
        raise PlasticStepError(
            f"alternating minimization did not converge within "
            f"{_MAX_SWEEPS} sweeps (last increment {increment:.3e})",
            report=report)
    return u, pi, report
