"""Structured crossed triangulation of the unit square with P1/P0 geometry.

Each of the ``n_sub x n_sub`` cells is split into four triangles by its
center node, which makes the mesh symmetric under the reflection
``y -> 1 - y`` and gives ``4 n^2`` elements on ``(n+1)^2 + n^2`` nodes.
Node ordering is deterministic: the row-major vertex grid first, then the
row-major cell centers. Element ordering is row-major by cell, with the
four triangles of a cell stored in the order bottom, right, top, left,
each counter-clockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mesh",
    "BoundaryTags",
    "build_crossed_mesh",
    "tag_boundaries",
    "p1_strain",
    "p1_scalar_stiffness",
    "lumped_node_areas",
    "reflection_permutation",
]


# ---------------------------------------------------------------------------
# Data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mesh:
    """Triangulation of the unit square with precomputed P1 geometry.

    Attributes
    ----------
    nodes : ndarray, shape (n_nodes, 2)
        Node coordinates in meters.
    elements : ndarray, shape (n_elements, 3)
        Counter-clockwise node indices per triangle.
    element_area : ndarray, shape (n_elements,)
        Triangle areas in m^2; they partition the unit square.
    grad_phi : ndarray, shape (n_elements, 3, 2)
        Constant gradient of each of the three P1 basis functions per
        element (1/m). The three vectors of an element sum to zero.
    n_sub : int
        Number of square subdivisions per side.
    """

    nodes: np.ndarray
    elements: np.ndarray
    element_area: np.ndarray
    grad_phi: np.ndarray
    n_sub: int

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True)
class BoundaryTags:
    """Boundary node sets for one loading geometry.

    Attributes
    ----------
    dirichlet_xy : ndarray of node indices
        Both displacement components fixed to zero (left edge).
    dirichlet_x : ndarray of node indices
        Horizontal component prescribed by the ramp, vertical free
        (right edge, possibly excluding a bottom portion).
    free : ndarray of node indices
        Remaining boundary nodes (traction-free).
    variant : str
        ``"asymmetric"`` or ``"symmetric"``.
    """

    dirichlet_xy: np.ndarray
    dirichlet_x: np.ndarray
    free: np.ndarray
    variant: str


VARIANTS = ("asymmetric", "symmetric")


# ---------------------------------------------------------------------------
# Mesh construction
# ---------------------------------------------------------------------------

def build_crossed_mesh(n_sub: int) -> Mesh:
    """Build the crossed triangulation of the unit square.

    Parameters
    ----------
    n_sub : int
        Number of square cells per side, at least 1.

    Returns
    -------
    Mesh
        4*n_sub^2 elements on (n_sub+1)^2 + n_sub^2 nodes.
    """
    n = int(n_sub)
    if n < 1:
        raise ValueError(f"n_sub must be a positive integer, got {n_sub}")

    # Vertex grid, row-major over (iy, ix); coordinates i/n are exact at the
    # edges (0.0 and 1.0) which keeps boundary detection robust.
    idx = np.arange(n + 1, dtype=np.float64)
    xv, yv = np.meshgrid(idx / n, idx / n, indexing="xy")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])

    # Cell centers, row-major over (iy, ix).
    cidx = np.arange(n, dtype=np.float64) + 0.5
    xc, yc = np.meshgrid(cidx / n, cidx / n, indexing="xy")
    centers = np.column_stack([xc.ravel(), yc.ravel()])

    nodes = np.vstack([vertices, centers])

    # Connectivity: per cell (ix, iy), four CCW triangles about the center.
    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ix = ix.ravel()
    iy = iy.ravel()
    v00 = iy * (n + 1) + ix
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    ctr = (n + 1) * (n + 1) + iy * n + ix

    n_cells = n * n
    elements = np.empty((4 * n_cells, 3), dtype=np.int64)
    elements[0::4] = np.column_stack([v00, v10, ctr])  # bottom
    elements[1::4] = np.column_stack([v10, v11, ctr])  # right
    elements[2::4] = np.column_stack([v11, v01, ctr])  # top
    elements[3::4] = np.column_stack([v01, v00, ctr])  # left

    element_area, grad_phi = _p1_geometry(nodes, elements)

    for arr in (nodes, elements, element_area, grad_phi):
        arr.setflags(write=False)
    return Mesh(nodes=nodes, elements=elements, element_area=element_area,
                grad_phi=grad_phi, n_sub=n)


def _p1_geometry(nodes: np.ndarray, elements: np.ndarray):
    """Areas and constant P1 basis gradients for every triangle."""
    p0 = nodes[elements[:, 0]]
    p1 = nodes[elements[:, 1]]
    p2 = nodes[elements[:, 2]]
    d1 = p1 - p0
    d2 = p2 - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(det <= 0.0):
        raise ValueError("degenerate or clockwise triangle in connectivity")
    area = 0.5 * det

    grad = np.empty((elements.shape[0], 3, 2), dtype=np.float64)
    grad[:, 0, 0] = p1[:, 1] - p2[:, 1]
    grad[:, 0, 1] = p2[:, 0] - p1[:, 0]
    grad[:, 1, 0] = p2[:, 1] - p0[:, 1]
    grad[:, 1, 1] = p0[:, 0] - p2[:, 0]
    grad[:, 2, 0] = p0[:, 1] - p1[:, 1]
    grad[:, 2, 1] = p1[:, 0] - p0[:, 0]
    grad /= det[:, None, None]
    return area, grad


# ---------------------------------------------------------------------------
# Boundary tagging
# ---------------------------------------------------------------------------

def tag_boundaries(mesh: Mesh, variant: str) -> BoundaryTags:
    """Tag boundary nodes for one of the two loading geometries.

    The left edge is fully clamped. On the right edge the horizontal
    displacement is prescribed: on the whole edge for ``symmetric``, and
    only for ``y >= 1/6`` for ``asymmetric`` (the node exactly at
    ``y = 1/6`` is constrained). All other boundary nodes are free.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    n = mesh.n_sub
    if variant == "asymmetric" and n % 6 != 0:
        raise ValueError(
            f"asymmetric variant needs n_sub divisible by 6 so the 5/6 split "
            f"lands on a node line; got n_sub={n}")

    j = np.arange(n + 1, dtype=np.int64)
    left = j * (n + 1)
    right_all = j * (n + 1) + n
    if variant == "asymmetric":
        right = right_all[j >= n // 6]
    else:
        right = right_all

    # All boundary vertices (cell centers are interior by construction).
    bottom = np.arange(n + 1, dtype=np.int64)
    top = n * (n + 1) + np.arange(n + 1, dtype=np.int64)
    boundary = np.unique(np.concatenate([bottom, top, left, right_all]))
    tagged = np.union1d(left, right)
    free = np.setdiff1d(boundary, tagged)

    for arr in (left, right, free):
        arr.setflags(write=False)
    return BoundaryTags(dirichlet_xy=left, dirichlet_x=right, free=free,
                        variant=variant)


# ---------------------------------------------------------------------------
# P1/P0 interpolation helpers
# ---------------------------------------------------------------------------

def p1_strain(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Elementwise constant small-strain tensor of a nodal displacement field.

    Parameters
    ----------
    u : ndarray, shape (n_nodes, 2)

    Returns
    -------
    ndarray, shape (n_elements, 2, 2)
        Symmetric strain e = sym(grad u), constant per element.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (mesh.n_nodes, 2):
        raise ValueError(f"displacement shape {u.shape} does not match mesh "
                         f"({mesh.n_nodes} nodes)")
    ue = u[mesh.elements]                      # (n_el, 3, 2)
    # grad u (row i = derivative of component i): sum_a u_a outer grad_phi_a.
    g = np.einsum("eai,eaj->eij", ue, mesh.grad_phi)
    return 0.5 * (g + np.swapaxes(g, 1, 2))


def p1_scalar_stiffness(mesh: Mesh):
    """Sparse P1 stiffness matrix of the scalar Laplacian, integral of
    grad(phi_i) . grad(phi_j).

    Returns
    -------
    scipy.sparse.csr_matrix, shape (n_nodes, n_nodes)
    """
    from scipy import sparse

    ke = np.einsum("e,eak,ebk->eab", mesh.element_area, mesh.grad_phi,
                   mesh.grad_phi)
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    mat = sparse.coo_matrix((ke.ravel(), (rows, cols)),
                            shape=(mesh.n_nodes, mesh.n_nodes))
    return mat.tocsr()


def lumped_node_areas(mesh: Mesh) -> np.ndarray:
    """Lumped nodal weights w_i = sum over adjacent triangles of area/3.

    Exact for integrating P1 functions against the constant 1, and sums to
    the domain area.
    """
    w = np.zeros(mesh.n_nodes, dtype=np.float64)
    np.add.at(w, mesh.elements.ravel(),
              np.repeat(mesh.element_area / 3.0, 3))
    return w


def reflection_permutation(mesh: Mesh):
    """Node and element permutations induced by the reflection y -> 1 - y.

    Returns
    -------
    node_perm : ndarray, shape (n_nodes,)
        ``node_perm[i]`` is the node at the mirrored position of node i.
    elem_perm : ndarray, shape (n_elements,)
        ``elem_perm[e]`` is the element occupying the mirrored position of
        element e (as a point set; vertex order may differ).
    """
    n = mesh.n_sub
    nv = (n + 1) * (n + 1)

    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
    vert_perm = ((n - jj) * (n + 1) + ii).ravel()

    ic, jc = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    cent_perm = nv + ((n - 1 - jc) * n + ic).ravel()

    node_perm = np.concatenate([vert_perm, cent_perm])

    # Cell (ix, iy) maps to cell (ix, n-1-iy); triangle roles swap
    # bottom <-> top, right and left stay.
    cell = np.arange(n * n)
    iy, ix = divmod(cell, n)
    mirrored_cell = (n - 1 - iy) * n + ix
    tri_map = np.array([2, 1, 0, 3])
    elem_perm = np.empty(4 * n * n, dtype=np.int64)
    for t in range(4):
        elem_perm[cell * 4 + t] = mirrored_cell * 4 + tri_map[t]
    return node_perm, elem_perm
