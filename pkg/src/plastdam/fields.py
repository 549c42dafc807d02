"""Discrete state, loading program, Dirichlet handling, and total energy.

The state of the evolution is a nodal displacement field, an elementwise
deviatoric plastic strain, and a nodal damage field in [0, 1]. Loading is a
hard device: the left edge is clamped and the horizontal displacement on
(part of) the right edge follows the linear ramp ``w(t) = ramp_rate * t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from plastdam.material import MaterialParams, stored_energy_density
from plastdam.mesh import BoundaryTags, Mesh, VARIANTS, p1_strain

__all__ = [
    "State",
    "LoadProgram",
    "impose_dirichlet",
    "dirichlet_extension",
    "dirichlet_dofs",
    "element_zeta_mean",
    "zeta_gradient",
    "total_energy",
]


@dataclass(frozen=True)
class State:
    """Discrete state (u, pi, zeta) of the coupled evolution.

    Attributes
    ----------
    u : ndarray, shape (n_nodes, 2)
        Nodal displacement (m).
    pi : ndarray, shape (n_elements, 2, 2)
        Elementwise plastic strain, trace-free 2x2.
    zeta : ndarray, shape (n_nodes,)
        Nodal damage in [0, 1]; 1 is intact.
    """

    u: np.ndarray
    pi: np.ndarray
    zeta: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=np.float64)
        pi = np.asarray(self.pi, dtype=np.float64)
        zeta = np.asarray(self.zeta, dtype=np.float64)
        if u.ndim != 2 or u.shape[1] != 2:
            raise ValueError(f"u must have shape (n_nodes, 2), got {u.shape}")
        if pi.ndim != 3 or pi.shape[1:] != (2, 2):
            raise ValueError(f"pi must have shape (n_elements, 2, 2), got {pi.shape}")
        if zeta.ndim != 1:
            raise ValueError(f"zeta must be a nodal vector, got shape {zeta.shape}")
        tr = np.abs(pi[:, 0, 0] + pi[:, 1, 1])
        if tr.size and tr.max() > 1e-10:
            raise ValueError("pi is not trace-free (|tr| > 1e-10)")
        asym = np.abs(pi[:, 0, 1] - pi[:, 1, 0])
        if asym.size and asym.max() > 1e-10:
            raise ValueError("pi is not symmetric")
        if zeta.size and (zeta.min() < 0.0 or zeta.max() > 1.0):
            raise ValueError("zeta outside [0, 1]")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "zeta", zeta)

    @staticmethod
    def initial(mesh: Mesh) -> "State":
        """Virgin state: zero displacement, zero plastic strain, intact."""
        return State(u=np.zeros((mesh.n_nodes, 2)),
                     pi=np.zeros((mesh.n_elements, 2, 2)),
                     zeta=np.ones(mesh.n_nodes))


@dataclass(frozen=True)
class LoadProgram:
    """Hard-device loading program on [0, t_end].

    Attributes
    ----------
    t_end : float
        Final process time (dimensionless process time).
    tau : float
        Uniform time step; t_end / tau must be an integer.
    ramp_rate : float
        Dirichlet ramp slope (m per unit process time); the prescribed
        horizontal displacement on the right edge is ``w(t) = ramp_rate*t``.
    variant : str
        Loading geometry, ``"asymmetric"`` or ``"symmetric"``.
    body_force : tuple of 2 floats
        Constant body force density g (N/m^3).
    """

    t_end: float = 80.0
    tau: float = 1.0
    ramp_rate: float = 1e-3
    variant: str = "asymmetric"
    body_force: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.t_end > 0.0:
            raise ValueError(f"need t_end > 0, got {self.t_end}")
        if not self.tau > 0.0:
            raise ValueError(f"need tau > 0, got {self.tau}")
        steps = self.t_end / self.tau
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(
                f"t_end/tau = {steps} is not an integer number of steps")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.tau))

    def w(self, t: float) -> float:
        """Prescribed horizontal boundary displacement at time t."""
        return self.ramp_rate * t


# ---------------------------------------------------------------------------
# Dirichlet handling
# ---------------------------------------------------------------------------

def dirichlet_dofs(tags: BoundaryTags, t: float, load: LoadProgram,
                   mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Constrained displacement DOFs and their values at time t.

    DOF numbering is interleaved: node i carries DOFs 2i (x) and 2i+1 (y).

    Returns
    -------
    dofs : int ndarray
        Sorted constrained DOF indices.
    values : float ndarray
        Prescribed values, aligned with ``dofs``.
    """
    w = load.w(t)
    dofs_xy_x = 2 * tags.dirichlet_xy
    dofs_xy_y = 2 * tags.dirichlet_xy + 1
    dofs_x = 2 * tags.dirichlet_x
    dofs = np.concatenate([dofs_xy_x, dofs_xy_y, dofs_x])
    values = np.concatenate([
        np.zeros(dofs_xy_x.size),
        np.zeros(dofs_xy_y.size),
        w * mesh.nodes[tags.dirichlet_x, 0],
    ])
    order = np.argsort(dofs)
    return dofs[order], values[order]


def impose_dirichlet(state: State, t: float, tags: BoundaryTags,
                     load: LoadProgram, mesh: Mesh) -> State:
    """Return a copy of the state with boundary values of u set for time t."""
    u = state.u.copy()
    u[tags.dirichlet_xy] = 0.0
    u[tags.dirichlet_x, 0] = load.w(t) * mesh.nodes[tags.dirichlet_x, 0]
    return replace(state, u=u)


def dirichlet_extension(mesh: Mesh, t: float, load: LoadProgram) -> np.ndarray:
    """The affine extension of the boundary data, ``(w(t) * x, 0)``, at
    every node. Used to advect a previous displacement to new boundary
    data and by the diagnostics."""
    w = load.w(t)
    return np.column_stack([w * mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])


# ---------------------------------------------------------------------------
# Interpolation helpers
# ---------------------------------------------------------------------------

def element_zeta_mean(mesh: Mesh, zeta: np.ndarray) -> np.ndarray:
    """Elementwise mean of the three nodal damage values (P0 reduction)."""
    zeta = np.asarray(zeta, dtype=np.float64)
    return zeta[mesh.elements].mean(axis=1)


def zeta_gradient(mesh: Mesh, zeta: np.ndarray) -> np.ndarray:
    """Constant per-element gradient of the P1 damage field.

    Computed from vertex differences so constant fields map to an exact
    zero gradient regardless of rounding in the shape-function gradients.
    """
    zeta = np.asarray(zeta, dtype=np.float64)
    ze = zeta[mesh.elements]
    return np.einsum("ea,eak->ek", ze - ze[:, :1], mesh.grad_phi)


# ---------------------------------------------------------------------------
# Total energy
# ---------------------------------------------------------------------------

def total_energy(state: State, t: float, mesh: Mesh, tags: BoundaryTags,
                 params: MaterialParams, load: LoadProgram) -> float:
    """Total stored energy minus body-force work at the given state (J).

    The elastic/hardening densities are integrated with the elementwise
    damage mean; the damage-gradient term is the exact P1 Dirichlet energy.
    The displacement is used as stored in the state (physical displacement;
    callers are responsible for its boundary values matching time t).
    """
    e = p1_strain(mesh, state.u)
    zbar = element_zeta_mean(mesh, state.zeta)
    gz = zeta_gradient(mesh, state.zeta)
    dens = stored_energy_density(e, state.pi, zbar, gz, params)
    energy = float(mesh.element_area @ dens)

    g = np.asarray(load.body_force, dtype=np.float64)
    if g.any():
        from plastdam.mesh import lumped_node_areas

        w_nodes = lumped_node_areas(mesh)
        energy -= float(w_nodes @ (state.u @ g))
    return energy
