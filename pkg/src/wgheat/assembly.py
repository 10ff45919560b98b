"""Global sparse WG matrices, load vectors and Dirichlet elimination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import BoundaryTag, Mesh
from .weak_gradient import CoefficientField, WeakGradient, rt0_mass
from .wg_space import ScalarField, cell_integrals, edge_means


@dataclass(frozen=True, eq=False)
class DofMap:
    """Triangle DOFs are numbered first, then edge DOFs."""

    mesh: Mesh

    @property
    def size(self) -> int:
        return self.mesh.n_dofs

    def edge_dof(self, edges) -> np.ndarray:
        return self.mesh.n_triangles + np.asarray(edges)

    @property
    def local_to_global(self) -> np.ndarray:
        """(nt, 4) global DOFs for [v0, vb_1, vb_2, vb_3]."""
        m = self.mesh
        return np.column_stack([np.arange(m.n_triangles), m.n_triangles + m.tri_edges])

    @property
    def constrained(self) -> np.ndarray:
        return self.edge_dof(self.mesh.edges_tagged(BoundaryTag.DIRICHLET))

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)


def _scatter(dofmap: DofMap, local: np.ndarray) -> sp.csr_matrix:
    l2g = dofmap.local_to_global
    rows = np.repeat(l2g, 4, axis=1).ravel()
    cols = np.tile(l2g, (1, 4)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(dofmap.size, dofmap.size))


def robin_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Boundary mass sum_e |e| u_b v_b over Robin edges."""
    robin = mesh.edges_tagged(BoundaryTag.ROBIN)
    diag = np.zeros(mesh.n_dofs)
    diag[mesh.n_triangles + robin] = mesh.edge_lengths[robin]
    return sp.diags(diag, format="csr")


def assemble_stiffness(
    mesh: Mesh,
    coeff: CoefficientField | None = None,
    t: float = 0.0,
    robin: bool = False,
    gradient: WeakGradient | None = None,
) -> sp.csr_matrix:
    """Matrix of (a grad_d w, grad_d v), plus the Robin boundary mass if requested."""
    if gradient is None:
        gradient = WeakGradient(mesh)
    mass_a = gradient.mass if coeff is None else rt0_mass(gradient.corners, coeff, t)
    G = gradient.maps
    local = np.einsum("tki,tkl,tlj->tij", G, mass_a, G)
    local = 0.5 * (local + local.transpose(0, 2, 1))
    A = _scatter(DofMap(mesh), local)
    if robin:
        A = A + robin_matrix(mesh)
    return A.tocsr()


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    diag = np.concatenate([mesh.areas, np.zeros(mesh.n_edges)])
    return sp.diags(diag, format="csr")


def assemble_load(mesh: Mesh, f: ScalarField, t: float = 0.0) -> np.ndarray:
    """(f, v0) for every DOF; edge entries are zero."""
    return np.concatenate([cell_integrals(f, mesh, t), np.zeros(mesh.n_edges)])


def robin_load(mesh: Mesh, r: ScalarField, t: float = 0.0) -> np.ndarray:
    """<r, v_b> on Robin edges, for inhomogeneous Robin data a grad u . n + u = r."""
    b = np.zeros(mesh.n_dofs)
    robin = mesh.edges_tagged(BoundaryTag.ROBIN)
    if len(robin):
        b[mesh.n_triangles + robin] = mesh.edge_lengths[robin] * edge_means(r, mesh, t, robin)
    return b


def dirichlet_values(mesh: Mesh, g: ScalarField, t: float = 0.0) -> np.ndarray:
    """Edge means of g on the Dirichlet edges, in DofMap.constrained order."""
    return edge_means(g, mesh, t, mesh.edges_tagged(BoundaryTag.DIRICHLET))


class DirichletReduction:
    """Symmetric elimination of the Dirichlet edge DOFs from a fixed matrix."""

    def __init__(self, matrix: sp.spmatrix, dofmap: DofMap):
        self.dofmap = dofmap
        self.free = dofmap.free
        self.fixed = dofmap.constrained
        A = sp.csr_matrix(matrix)
        self.matrix = A[self.free][:, self.free].tocsr()
        self.coupling = A[self.free][:, self.fixed].tocsr()

    def reduce_rhs(self, rhs: np.ndarray, fixed_values: np.ndarray) -> np.ndarray:
        return rhs[self.free] - self.coupling @ fixed_values

    def expand(self, x_free: np.ndarray, fixed_values: np.ndarray) -> np.ndarray:
        x = np.empty(self.dofmap.size)
        x[self.free] = x_free
        x[self.fixed] = fixed_values
        return x


@dataclass(eq=False)
class SparseSpdSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap


@dataclass(eq=False)
class ConstrainedSystem:
    """Reduced system over free DOFs plus what is needed to rebuild the full vector."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    reduction: DirichletReduction
    fixed_values: np.ndarray

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        return self.reduction.expand(x_free, self.fixed_values)


def apply_dirichlet(system: SparseSpdSystem, g: ScalarField, t: float = 0.0) -> ConstrainedSystem:
    red = DirichletReduction(system.matrix, system.dofmap)
    values = dirichlet_values(system.dofmap.mesh, g, t)
    return ConstrainedSystem(red.matrix, red.reduce_rhs(system.rhs, values), red, values)
