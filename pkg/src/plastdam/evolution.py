"""Semi-implicit fractional-step time evolution.

Each step k advances the state by two chained minimizations: the
displacement/plastic substep at the damage of step k-1, then the damage
substep at the new (u, pi). The loop records energies, cumulative
dissipations, the averaged von Mises stress, and the per-step
maximum-dissipation residuum. The run is deterministic: identical
configurations produce bitwise-identical series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from plastdam.damage_step import solve_damage
from plastdam.diagnostics import AmdpRecord, AmdpWindow, amdp_step_residuum
from plastdam.fields import LoadProgram, State, element_zeta_mean, total_energy
from plastdam.material import MaterialParams, dev2, stress
from plastdam.mesh import BoundaryTags, Mesh, build_crossed_mesh, lumped_node_areas, p1_strain, tag_boundaries
from plastdam.plastic_step import PlasticStepError, PlasticStepReport, solve_plastic
from plastdam.qp_solver import QpSolverError

__all__ = [
    "TimeSeries",
    "RunResult",
    "EvolutionError",
    "average_von_mises",
    "run",
]


@dataclass(frozen=True)
class TimeSeries:
    """Recorded per-step quantities of one evolution (steps k = 1..N).

    Attributes
    ----------
    t : ndarray, shape (N,)
        Process times k * tau.
    energy : ndarray
        Total stored energy minus body-force work at the end of each step (J).
    diss_plast_cum, diss_dam_cum : ndarray
        Cumulative plastic and damage dissipation (J).
    avg_von_mises : ndarray
        Integral of the deviatoric elastic-stress norm over the body (N).
    amdp_step, amdp_cum : ndarray
        Step and cumulative maximum-dissipation residuum (J).
    damage_kkt : ndarray
        KKT residual reported by each damage QP solve.
    reports : list of PlasticStepReport
    amdp_records : list of AmdpRecord
    """

    t: np.ndarray
    energy: np.ndarray
    diss_plast_cum: np.ndarray
    diss_dam_cum: np.ndarray
    avg_von_mises: np.ndarray
    amdp_step: np.ndarray
    amdp_cum: np.ndarray
    damage_kkt: np.ndarray
    reports: list[PlasticStepReport] = field(repr=False)
    amdp_records: list[AmdpRecord] = field(repr=False)

    @property
    def n_steps(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class RunResult:
    """Outcome of one evolution run."""

    series: TimeSeries
    state: State
    mesh: Mesh
    tags: BoundaryTags
    params: MaterialParams
    load: LoadProgram
    snapshots: list[tuple[int, State, np.ndarray]]


class EvolutionError(RuntimeError):
    """A substep failed; the series recorded so far is preserved.

    Attributes
    ----------
    step : int
        Index of the failing step.
    partial_series : TimeSeries
        Rows of all completed steps.
    """

    def __init__(self, message: str, step: int,
                 partial_series: TimeSeries) -> None:
        super().__init__(message)
        self.step = step
        self.partial_series = partial_series


def average_von_mises(state: State, mesh: Mesh,
                      params: MaterialParams) -> float:
    """Integral over the body of the Frobenius norm of the deviatoric
    elastic stress (N per unit thickness)."""
    e = p1_strain(mesh, state.u)
    zbar = element_zeta_mean(mesh, state.zeta)
    sig = stress(e - state.pi, zbar, params)
    dev = dev2(sig)
    norms = np.sqrt(np.sum(dev * dev, axis=(1, 2)))
    return float(mesh.element_area @ norms)


class _Recorder:
    """Accumulates per-step rows and materializes a TimeSeries."""

    def __init__(self) -> None:
        self.rows: list[tuple] = []
        self.reports: list[PlasticStepReport] = []
        self.records: list[AmdpRecord] = []

    def append(self, t_k, energy, pl_cum, dm_cum, avm, record, kkt, report):
        self.rows.append((t_k, energy, pl_cum, dm_cum, avm,
                          record.residuum_integral,
                          record.cumulative_integral, kkt))
        self.reports.append(report)
        self.records.append(record)

    def series(self) -> TimeSeries:
        if self.rows:
            cols = np.array(self.rows, dtype=np.float64).T
        else:
            cols = np.zeros((8, 0))
        return TimeSeries(t=cols[0], energy=cols[1], diss_plast_cum=cols[2],
                          diss_dam_cum=cols[3], avg_von_mises=cols[4],
                          amdp_step=cols[5], amdp_cum=cols[6],
                          damage_kkt=cols[7], reports=self.reports,
                          amdp_records=self.records)


def run(config, on_step=None) -> RunResult:
    """Run the full evolution described by a RunConfig.

    Parameters
    ----------
    config : RunConfig
        Material, loading, discretization, and tolerance settings.
    on_step : callable, optional
        Called after every completed step as ``on_step(k, t_k, state,
        record)``; used by the CLI to stream snapshots.

    Returns
    -------
    RunResult
        Time series, final state, and (k, state, residuum_field) snapshots
        every ``config.snapshot_every`` steps (if positive).

    Raises
    ------
    EvolutionError
        If a substep fails; carries the partial series.
    """
    params = config.material_params()
    load = config.load_program()
    mesh = build_crossed_mesh(config.n_sub)
    tags = tag_boundaries(mesh, load.variant)
    w_nodes = lumped_node_areas(mesh)

    state = State.initial(mesh)
    zeta_prevprev = state.zeta
    xi_const_prev = np.zeros(mesh.n_nodes)

    rec = _Recorder()
    snapshots: list[tuple[int, State, np.ndarray]] = []
    cum_residuum = 0.0
    cum_dissipation = 0.0
    cum_plastic = 0.0
    cum_damage = 0.0

    for k in range(1, load.n_steps + 1):
        t_k = k * load.tau
        try:
            u_k, pi_k, report = solve_plastic(
                state, state.zeta, t_k, mesh, tags, params, load,
                tol=config.plastic_tol)
            dsol = solve_damage(u_k, pi_k, state.zeta, t_k, mesh, params,
                                load, tol=config.qp_tol)
        except (PlasticStepError, QpSolverError) as exc:
            raise EvolutionError(f"step {k} (t = {t_k}) failed: {exc}",
                                 step=k, partial_series=rec.series()) from exc

        window = AmdpWindow(k=k, u_prev=state.u, pi_prev=state.pi,
                            zeta_prev=state.zeta,
                            zeta_prevprev=zeta_prevprev, pi_new=pi_k,
                            zeta_new=dsol.zeta,
                            xi_const_prev=xi_const_prev)
        record = amdp_step_residuum(window, mesh, params,
                                    cumulative_prev=cum_residuum,
                                    dissipation_prev=cum_dissipation)
        cum_residuum = record.cumulative_integral
        cum_dissipation = record.dissipation_cum

        new_state = State(u=u_k, pi=pi_k, zeta=dsol.zeta)
        cum_plastic += report.dissipated_plastic
        dz = dsol.zeta - state.zeta
        cum_damage += float(w_nodes @ (params.a * np.maximum(-dz, 0.0)
                                       + params.b * np.maximum(dz, 0.0)))

        energy = total_energy(new_state, t_k, mesh, tags, params, load)
        avm = average_von_mises(new_state, mesh, params)
        rec.append(t_k, energy, cum_plastic, cum_damage, avm, record,
                   dsol.kkt_residual, report)

        if on_step is not None:
            on_step(k, t_k, new_state, record)
        if config.snapshot_every > 0 and k % config.snapshot_every == 0:
            snapshots.append((k, new_state, record.residuum_field))

        zeta_prevprev = state.zeta
        xi_const_prev = dsol.xi_const
        state = new_state

    return RunResult(series=rec.series(), state=state, mesh=mesh, tags=tags,
                     params=params, load=load, snapshots=snapshots)
