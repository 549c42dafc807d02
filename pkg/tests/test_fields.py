"""State container, loading program, Dirichlet handling, and total energy."""

import numpy as np
import pytest

from plastdam.fields import (
    LoadProgram,
    State,
    dirichlet_dofs,
    dirichlet_extension,
    impose_dirichlet,
    total_energy,
    element_zeta_mean,
    zeta_gradient,
)
from plastdam.io_cli import RunConfig
from plastdam.material import MaterialParams
from plastdam.mesh import (
    build_crossed_mesh,
    lumped_node_areas,
    reflection_permutation,
    tag_boundaries,
)


def default_params() -> MaterialParams:
    return RunConfig().material_params()


class TestState:
    def test_initial_is_virgin(self):
        mesh = build_crossed_mesh(3)
        state = State.initial(mesh)
        assert state.u.shape == (mesh.n_nodes, 2)
        assert state.pi.shape == (mesh.n_elements, 2, 2)
        assert np.all(state.u == 0.0)
        assert np.all(state.pi == 0.0)
        assert np.all(state.zeta == 1.0)

    def test_rejects_zeta_out_of_range(self):
        mesh = build_crossed_mesh(2)
        zeta = np.ones(mesh.n_nodes)
        zeta[0] = 1.2
        with pytest.raises(ValueError, match="zeta"):
            State(u=np.zeros((mesh.n_nodes, 2)),
                  pi=np.zeros((mesh.n_elements, 2, 2)), zeta=zeta)

    def test_rejects_trace_in_pi(self):
        mesh = build_crossed_mesh(2)
        pi = np.zeros((mesh.n_elements, 2, 2))
        pi[0] = [[1e-6, 0.0], [0.0, 1e-6]]
        with pytest.raises(ValueError, match="trace"):
            State(u=np.zeros((mesh.n_nodes, 2)), pi=pi,
                  zeta=np.ones(mesh.n_nodes))

    def test_rejects_asymmetric_pi(self):
        mesh = build_crossed_mesh(2)
        pi = np.zeros((mesh.n_elements, 2, 2))
        pi[0] = [[1e-6, 2e-6], [0.0, -1e-6]]
        with pytest.raises(ValueError, match="symmetric"):
            State(u=np.zeros((mesh.n_nodes, 2)), pi=pi,
                  zeta=np.ones(mesh.n_nodes))

    def test_rejects_wrong_u_shape(self):
        mesh = build_crossed_mesh(2)
        with pytest.raises(ValueError, match="u must"):
            State(u=np.zeros(mesh.n_nodes), pi=np.zeros((mesh.n_elements, 2, 2)),
                  zeta=np.ones(mesh.n_nodes))


class TestLoadProgram:
    def test_defaults(self):
        load = LoadProgram()
        assert load.t_end == 80.0
        assert load.tau == 1.0
        assert load.ramp_rate == 1e-3
        assert load.variant == "asymmetric"
        assert load.n_steps == 80

    def test_ramp_values(self):
        load = LoadProgram()
        assert load.w(0.0) == 0.0
        # Maximal horizontal shift: 80 time units at 1 mm per unit.
        assert load.w(80.0) == pytest.approx(0.08, rel=0, abs=0)

    def test_fractional_step_count_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            LoadProgram(tau=0.3)

    def test_halved_step_accepted(self):
        assert LoadProgram(tau=0.5).n_steps == 160

    def test_bad_scalars_rejected(self):
        with pytest.raises(ValueError, match="t_end"):
            LoadProgram(t_end=0.0)
        with pytest.raises(ValueError, match="tau"):
            LoadProgram(tau=-1.0)
        with pytest.raises(ValueError, match="variant"):
            LoadProgram(variant="twisted")


class TestDirichlet:
    def test_zero_time_zero_values(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "asymmetric")
        load = LoadProgram()
        state = impose_dirichlet(State.initial(mesh), 0.0, tags, load, mesh)
        assert np.all(state.u == 0.0)
        _, values = dirichlet_dofs(tags, 0.0, load, mesh)
        assert np.all(values == 0.0)

    def test_final_time_right_edge_shift(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "asymmetric")
        load = LoadProgram()
        state = impose_dirichlet(State.initial(mesh), 80.0, tags, load, mesh)
        # Right-edge nodes sit at x = 1.0 exactly, so u_x = w(80) = 80 mm.
        assert np.all(state.u[tags.dirichlet_x, 0] == 0.08)
        assert np.all(state.u[tags.dirichlet_xy] == 0.0)

    def test_interior_untouched(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "symmetric")
        load = LoadProgram(variant="symmetric")
        rng = np.random.default_rng(5)
        u = rng.normal(size=(mesh.n_nodes, 2))
        state = State(u=u, pi=np.zeros((mesh.n_elements, 2, 2)),
                      zeta=np.ones(mesh.n_nodes))
        out = impose_dirichlet(state, 40.0, tags, load, mesh)
        constrained = np.union1d(tags.dirichlet_xy, tags.dirichlet_x)
        interior = np.setdiff1d(np.arange(mesh.n_nodes), constrained)
        assert np.array_equal(out.u[interior], u[interior])
        # The input state is not mutated.
        assert np.array_equal(state.u, u)

    def test_dofs_sorted_and_consistent_with_impose(self):
        mesh = build_crossed_mesh(12)
        tags = tag_boundaries(mesh, "asymmetric")
        load = LoadProgram()
        dofs, values = dirichlet_dofs(tags, 40.0, load, mesh)
        assert np.all(np.diff(dofs) > 0)
        # Asymmetric variant at n=12: 13 clamped nodes (2 dofs each) plus
        # 11 retained right-edge nodes (x only).
        assert dofs.size == 2 * 13 + 11
        state = impose_dirichlet(State.initial(mesh), 40.0, tags, load, mesh)
        assert np.array_equal(state.u.ravel()[dofs], values)

    def test_extension_is_affine_ramp(self):
        mesh = build_crossed_mesh(6)
        load = LoadProgram()
        ext = dirichlet_extension(mesh, 40.0, load)
        # u_D(0.5, y) at t=40 is (20 mm, 0).
        mid = np.flatnonzero(mesh.nodes[:, 0] == 0.5)
        assert mid.size > 0
        assert np.all(ext[mid, 0] == 0.02)
        assert np.all(ext[:, 1] == 0.0)
        assert np.allclose(ext[:, 0], 0.04 * mesh.nodes[:, 0])


class TestInterpolationHelpers:
    def test_zeta_mean_of_linear_field(self):
        mesh = build_crossed_mesh(4)
        zeta = mesh.nodes[:, 0].copy()  # zeta = x is in [0, 1]
        zbar = element_zeta_mean(mesh, zeta)
        centroids = mesh.nodes[mesh.elements].mean(axis=1)
        assert np.allclose(zbar, centroids[:, 0], rtol=0, atol=1e-15)

    def test_zeta_gradient_of_linear_field(self):
        mesh = build_crossed_mesh(4)
        zeta = 0.25 * mesh.nodes[:, 0] + 0.5 * mesh.nodes[:, 1]
        gz = zeta_gradient(mesh, zeta)
        assert np.allclose(gz[:, 0], 0.25, rtol=0, atol=1e-13)
        assert np.allclose(gz[:, 1], 0.5, rtol=0, atol=1e-13)


class TestTotalEnergy:
    def test_zero_state_zero_energy(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "asymmetric")
        load = LoadProgram()
        energy = total_energy(State.initial(mesh), 0.0, mesh, tags,
                              default_params(), load)
        assert energy == 0.0

    def test_uniform_uniaxial_stretch(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "asymmetric")
        load = LoadProgram()
        params = default_params()
        delta = 1e-3
        u = np.column_stack([delta * mesh.nodes[:, 0],
                             np.zeros(mesh.n_nodes)])
        state = State(u=u, pi=np.zeros((mesh.n_elements, 2, 2)),
                      zeta=np.ones(mesh.n_nodes))
        energy = total_energy(state, 0.0, mesh, tags, params, load)
        # Hand evaluation with e = diag(delta, 0) on the unit square:
        # 0.5*lam*tr(e)^2 + mu*|e|^2 = (0.5*lam1 + mu1)*delta^2.
        expected = (0.5 * params.lambda1 + params.mu1) * delta ** 2
        assert energy == pytest.approx(expected, rel=1e-13)

    def test_reflection_invariance(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "symmetric")
        load = LoadProgram(variant="symmetric")
        params = default_params()
        rng = np.random.default_rng(11)
        u = 1e-3 * rng.normal(size=(mesh.n_nodes, 2))
        xy = 1e-4 * rng.normal(size=(mesh.n_elements, 2))
        pi = np.empty((mesh.n_elements, 2, 2))
        pi[:, 0, 0], pi[:, 1, 1] = xy[:, 0], -xy[:, 0]
        pi[:, 0, 1] = pi[:, 1, 0] = xy[:, 1]
        zeta = rng.uniform(0.2, 1.0, size=mesh.n_nodes)
        state = State(u=u, pi=pi, zeta=zeta)

        node_perm, elem_perm = reflection_permutation(mesh)
        u_ref = u[node_perm] * np.array([1.0, -1.0])
        pi_ref = pi[elem_perm].copy()
        pi_ref[:, 0, 1] *= -1.0
        pi_ref[:, 1, 0] *= -1.0
        mirrored = State(u=u_ref, pi=pi_ref, zeta=zeta[node_perm])

        e0 = total_energy(state, 0.0, mesh, tags, params, load)
        e1 = total_energy(mirrored, 0.0, mesh, tags, params, load)
        assert e1 == pytest.approx(e0, rel=1e-12)

    def test_body_force_work_subtracted(self):
        mesh = build_crossed_mesh(6)
        tags = tag_boundaries(mesh, "asymmetric")
        load = LoadProgram(body_force=(2.0, 0.0))
        u = np.tile([0.5, 0.0], (mesh.n_nodes, 1))
        state = State(u=u, pi=np.zeros((mesh.n_elements, 2, 2)),
                      zeta=np.ones(mesh.n_nodes))
        energy = total_energy(state, 0.0, mesh, tags, default_params(), load)
        # Rigid translation stores nothing; work = g . u times unit area.
        assert energy == pytest.approx(-1.0, rel=1e-12)
        assert lumped_node_areas(mesh).sum() == pytest.approx(1.0, rel=1e-14)
