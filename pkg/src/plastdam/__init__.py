"""Quasistatic elasto-plasticity with kinematic hardening coupled to scalar
gradient damage on the unit square.

The package is organized bottom-up:

``mesh``
    Crossed triangulation of the unit square, boundary tags, P1 geometry.
``material``
    Constitutive data and pointwise operations (stress, return map, energy
    and dissipation densities).
``fields``
    Discrete state, load program, Dirichlet handling, total energy.
``qp_solver``
    Dense/sparse box-constrained convex QP solver (projected spectral
    gradient with subspace-Newton acceleration).
``plastic_step``
    Alternating minimization over displacement and plastic strain at frozen
    damage.
``damage_step``
    Nodal damage update as a box-constrained QP in increment variables.
``evolution``
    Semi-implicit fractional-step time loop and recorded time series.
``diagnostics``
    Approximate-maximum-dissipation residuum and equilibrium residual.
``io_cli``
    Run configuration, CSV/VTK/manifest writers, command-line interface.
"""

from plastdam.mesh import Mesh, BoundaryTags, build_crossed_mesh, tag_boundaries, p1_strain
from plastdam.material import (
    MaterialParams,
    lame_from_young_poisson,
    stress,
    return_map,
    dissipation_density_plastic,
    dissipation_density_damage,
    stored_energy_density,
)
from plastdam.fields import State, LoadProgram, total_energy, impose_dirichlet
from plastdam.qp_solver import BoxQp, QpSolution, solve_box_qp
from plastdam.plastic_step import PlasticStepReport, solve_plastic
from plastdam.damage_step import DamageQpSolution, assemble_damage_qp, solve_damage
from plastdam.evolution import TimeSeries, run
from plastdam.diagnostics import AmdpRecord, amdp_step_residuum, euler_lagrange_residual
from plastdam.io_cli import RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "Mesh",
    "BoundaryTags",
    "build_crossed_mesh",
    "tag_boundaries",
    "p1_strain",
    "MaterialParams",
    "lame_from_young_poisson",
    "stress",
    "return_map",
    "dissipation_density_plastic",
    "dissipation_density_damage",
    "stored_energy_density",
    "State",
    "LoadProgram",
    "total_energy",
    "impose_dirichlet",
    "BoxQp",
    "QpSolution",
    "solve_box_qp",
    "PlasticStepReport",
    "solve_plastic",
    "DamageQpSolution",
    "assemble_damage_qp",
    "solve_damage",
    "TimeSeries",
    "run",
    "AmdpRecord",
    "amdp_step_residuum",
    "euler_lagrange_residual",
    "RunConfig",
    "parse_config",
    "__version__",
]
