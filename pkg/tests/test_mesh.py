"""Mesh construction, boundary tagging, and P1 interpolation.

Analytical validations:
  - element/node counts follow 4 n^2 and (n+1)^2 + n^2,
  - areas partition the unit square,
  - P1 strains of affine displacement fields are exact,
  - the y-reflection permutation maps the mesh onto itself.
"""

import numpy as np
import pytest

from plastdam.mesh import (
    build_crossed_mesh,
    tag_boundaries,
    p1_strain,
    p1_scalar_stiffness,
    lumped_node_areas,
    reflection_permutation,
)


class TestBuildCrossedMesh:

    def test_paper_scale_counts(self):
        mesh = build_crossed_mesh(24)
        assert mesh.n_elements == 2304
        assert mesh.n_nodes == 1201

    def test_single_cell(self):
        mesh = build_crossed_mesh(1)
        assert mesh.n_elements == 4
        assert mesh.n_nodes == 5
        # Center node last, at the middle of the square.
        np.testing.assert_allclose(mesh.nodes[4], [0.5, 0.5])

    @pytest.mark.parametrize("n", [1, 2, 3, 7, 24, 48])
    def test_count_formulas(self, n):
        mesh = build_crossed_mesh(n)
        assert mesh.n_elements == 4 * n * n
        assert mesh.n_nodes == (n + 1) ** 2 + n * n

    @pytest.mark.parametrize("n", [1, 2, 5, 24])
    def test_areas_partition_unit_square(self, n):
        mesh = build_crossed_mesh(n)
        assert abs(mesh.element_area.sum() - 1.0) <= 1e-12
        # All four triangles of a cell have the same area h^2/4.
        np.testing.assert_allclose(mesh.element_area, 0.25 / n**2, rtol=1e-14)

    @pytest.mark.parametrize("n", [1, 3, 24])
    def test_grad_phi_sums_to_zero(self, n):
        mesh = build_crossed_mesh(n)
        sums = mesh.grad_phi.sum(axis=1)
        assert np.max(np.abs(sums)) <= 1e-12

    def test_counterclockwise_orientation(self):
        mesh = build_crossed_mesh(3)
        p = mesh.nodes[mesh.elements]
        cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                 - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        assert np.all(cross > 0)

    def test_rejects_nonpositive_subdivisions(self):
        with pytest.raises(ValueError):
            build_crossed_mesh(0)

    def test_edge_coordinates_exact(self):
        mesh = build_crossed_mesh(24)
        x = mesh.nodes[:, 0]
        assert np.count_nonzero(x == 0.0) == 25
        assert np.count_nonzero(x == 1.0) == 25


class TestTagBoundaries:

    def test_symmetric_counts(self):
        mesh = build_crossed_mesh(24)
        tags = tag_boundaries(mesh, "symmetric")
        assert len(tags.dirichlet_xy) == 25
        assert len(tags.dirichlet_x) == 25

    def test_asymmetric_counts_and_split(self):
        mesh = build_crossed_mesh(24)
        tags = tag_boundaries(mesh, "asymmetric")
        assert len(tags.dirichlet_xy) == 25
        assert len(tags.dirichlet_x) == 21
        y = mesh.nodes[tags.dirichlet_x, 1]
        np.testing.assert_allclose(np.sort(y), np.arange(4, 25) / 24.0)
        # The node exactly at y = 1/6 is constrained.
        assert np.min(y) == pytest.approx(1.0 / 6.0)

    def test_asymmetric_requires_divisible_by_six(self):
        mesh = build_crossed_mesh(25)
        with pytest.raises(ValueError):
            tag_boundaries(mesh, "asymmetric")

    def test_unknown_variant_rejected(self):
        mesh = build_crossed_mesh(6)
        with pytest.raises(ValueError):
            tag_boundaries(mesh, "diagonal")

    @pytest.mark.parametrize("variant", ["asymmetric", "symmetric"])
    def test_tags_disjoint_and_on_boundary(self, variant):
        mesh = build_crossed_mesh(12)
        tags = tag_boundaries(mesh, variant)
        assert len(np.intersect1d(tags.dirichlet_xy, tags.dirichlet_x)) == 0
        for group in (tags.dirichlet_xy, tags.dirichlet_x, tags.free):
            xy = mesh.nodes[group]
            on_edge = ((xy[:, 0] == 0.0) | (xy[:, 0] == 1.0)
                       | (xy[:, 1] == 0.0) | (xy[:, 1] == 1.0))
            assert np.all(on_edge)

    def test_free_nodes_complete_the_boundary(self):
        mesh = build_crossed_mesh(12)
        tags = tag_boundaries(mesh, "symmetric")
        n_boundary = 4 * 12  # vertices on the boundary of an n x n grid
        assert (len(tags.dirichlet_xy) + len(tags.dirichlet_x)
                + len(tags.free)) == n_boundary


class TestP1Strain:

    def test_zero_field(self):
        mesh = build_crossed_mesh(3)
        e = p1_strain(mesh, np.zeros((mesh.n_nodes, 2)))
        assert np.all(e == 0.0)

    def test_uniaxial_affine(self):
        mesh = build_crossed_mesh(4)
        u = np.column_stack([mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
        e = p1_strain(mesh, u)
        expected = np.array([[1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(e, np.broadcast_to(expected, e.shape),
                                   atol=1e-13)

    def test_pure_shear_affine(self):
        mesh = build_crossed_mesh(4)
        u = np.column_stack([mesh.nodes[:, 1], mesh.nodes[:, 0]])
        e = p1_strain(mesh, u)
        expected = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(e, np.broadcast_to(expected, e.shape),
                                   atol=1e-13)

    def test_general_affine_exactness(self):
        rng = np.random.default_rng(7)
        mesh = build_crossed_mesh(5)
        A = rng.normal(size=(2, 2))
        c = rng.normal(size=2)
        u = mesh.nodes @ A.T + c
        e = p1_strain(mesh, u)
        expected = 0.5 * (A + A.T)
        np.testing.assert_allclose(e, np.broadcast_to(expected, e.shape),
                                   rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        mesh = build_crossed_mesh(2)
        with pytest.raises(ValueError):
            p1_strain(mesh, np.zeros((3, 2)))


class TestScalarStiffnessAndLumping:

    def test_stiffness_annihilates_constants(self):
        mesh = build_crossed_mesh(4)
        K = p1_scalar_stiffness(mesh)
        r = K @ np.ones(mesh.n_nodes)
        assert np.max(np.abs(r)) <= 1e-12

    def test_stiffness_energy_of_linear_field(self):
        # For z(x, y) = x: integral |grad z|^2 = 1 on the unit square.
        mesh = build_crossed_mesh(6)
        K = p1_scalar_stiffness(mesh)
        z = mesh.nodes[:, 0].copy()
        assert z @ (K @ z) == pytest.approx(1.0, rel=1e-12)

    def test_stiffness_symmetric_psd(self):
        mesh = build_crossed_mesh(3)
        K = p1_scalar_stiffness(mesh).toarray()
        np.testing.assert_allclose(K, K.T, atol=1e-14)
        eigs = np.linalg.eigvalsh(K)
        assert eigs.min() >= -1e-12

    def test_lumped_areas_sum_to_domain(self):
        mesh = build_crossed_mesh(5)
        w = lumped_node_areas(mesh)
        assert w.sum() == pytest.approx(1.0, rel=1e-13)
        assert np.all(w > 0)

    def test_lumping_exact_for_p1_integrands(self):
        # sum_i w_i z_i = integral of the P1 interpolant of z.
        mesh = build_crossed_mesh(4)
        w = lumped_node_areas(mesh)
        z = mesh.nodes[:, 0]  # integral of x over unit square = 1/2
        assert w @ z == pytest.approx(0.5, rel=1e-13)


class TestReflectionSymmetry:

    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_node_permutation_mirrors_coordinates(self, n):
        mesh = build_crossed_mesh(n)
        node_perm, _ = reflection_permutation(mesh)
        mirrored = mesh.nodes[node_perm]
        np.testing.assert_allclose(mirrored[:, 0], mesh.nodes[:, 0],
                                   atol=1e-15)
        np.testing.assert_allclose(mirrored[:, 1], 1.0 - mesh.nodes[:, 1],
                                   atol=1e-15)

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_element_permutation_maps_point_sets(self, n):
        mesh = build_crossed_mesh(n)
        node_perm, elem_perm = reflection_permutation(mesh)
        mapped = np.sort(node_perm[mesh.elements], axis=1)
        target = np.sort(mesh.elements[elem_perm], axis=1)
        np.testing.assert_array_equal(mapped, target)

    def test_permutations_are_involutions(self):
        mesh = build_crossed_mesh(4)
        node_perm, elem_perm = reflection_permutation(mesh)
        np.testing.assert_array_equal(node_perm[node_perm],
                                      np.arange(mesh.n_nodes))
        np.testing.assert_array_equal(elem_perm[elem_perm],
                                      np.arange(mesh.n_elements))
