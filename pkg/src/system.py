"""Global assembly, boundary conditions and the bordered sparse solve."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.sparse.linalg import norm as sparse_norm

from .dofmap import DofMap, Formulation
from .exceptions import AssemblyError, InvalidArgumentError, SolverError
from .local_operators import (LocalFunctionals, ProjectionData, SchemeKind, SpaceKind,
                              local_functionals, local_load, local_stiffness_lambda,
                              local_stiffness_mu, project_all)
from .mesh_refine import MeshHierarchy
from .problems import ModelProblem, VectorField
from .quadrature import edge_quadrature, gauss_legendre_unit

logger = logging.getLogger("polyvem.system")

# Dense SVD diagnostics are only attempted below this many unknowns
DENSE_LIMIT = 2000


@dataclass
class GlobalOperators:
    """
    lambda-independent pieces of one discretization.

    constraints holds the columns d1, d2, d3 for every formulation; they only
    border the system under PureTraction.
    """
    space: SpaceKind
    scheme: SchemeKind
    dofmap: DofMap
    A_mu: sp.csr_matrix
    A_lam: sp.csr_matrix
    constraints: np.ndarray
    projections: List[ProjectionData]
    functionals: List[LocalFunctionals]

    def stiffness(self, lam: float, mu: float) -> sp.csr_matrix:
        return (2.0 * mu * self.A_mu + lam * self.A_lam).tocsr()


@dataclass(frozen=True)
class BorderedSystem:
    """Symmetric N x N matrix A, nb border columns and the right-hand side."""
    A: sp.csr_matrix
    borders: np.ndarray
    rhs: np.ndarray
    dirichlet_dofs: np.ndarray
    dirichlet_values: np.ndarray

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def nb(self) -> int:
        return self.borders.shape[1]

    def bordered_matrix(self) -> sp.csc_matrix:
        """[[A, D], [D^T, 0]] (just A when there are no borders)."""
        if self.nb == 0:
            return self.A.tocsc()
        D = sp.csr_matrix(self.borders)
        return sp.bmat([[self.A, D], [D.T, None]], format='csc')

    def full_rhs(self) -> np.ndarray:
        return np.concatenate([self.rhs, np.zeros(self.nb)])


@dataclass(frozen=True)
class SolveResult:
    """Dof values chi, multipliers beta and the relative (backward) residual."""
    chi: np.ndarray
    beta: np.ndarray
    residual: float


def _accumulate(blocks, N: int) -> sp.csr_matrix:
    """COO accumulation of (dofs, dense block) pairs in the given order."""
    rows, cols, vals = [], [], []
    for dofs, block in blocks:
        n = len(dofs)
        rows.append(np.repeat(dofs, n))
        cols.append(np.tile(dofs, n))
        vals.append(block.ravel())
    if not rows:
        return sp.csr_matrix((N, N))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return A.tocsr()


def _boundary_edge_lengths(hierarchy: MeshHierarchy) -> np.ndarray:
    fine = hierarchy.fine
    delta = fine.vertices[fine.edges[:, 1]] - fine.vertices[fine.edges[:, 0]]
    return np.where(fine.boundary, np.hypot(delta[:, 0], delta[:, 1]), 0.0)


def _constraint_columns(hierarchy: MeshHierarchy, dofmap: DofMap,
                        projections: List[ProjectionData],
                        functionals: List[LocalFunctionals]) -> np.ndarray:
    """d1, d2 (boundary or, for enhanced spaces, domain integrals) and d3 (integrated rot)."""
    fine = hierarchy.fine
    space = dofmap.space
    Ns = dofmap.n_sites
    D = np.zeros((dofmap.N, 3))

    if space.is_enhanced:
        # int_E v = int_E Pi v, read off the constant coefficient of the projection
        mean = np.zeros(Ns)
        for k, P in enumerate(projections):
            np.add.at(mean, dofmap.element_sites[k], P.mean_weights())
    else:
        lengths = _boundary_edge_lengths(hierarchy)
        if space.is_conforming:
            mean = np.zeros(Ns)
            np.add.at(mean, fine.edges[:, 0], 0.5 * lengths)
            np.add.at(mean, fine.edges[:, 1], 0.5 * lengths)
        else:
            mean = lengths
    D[:Ns, 0] = mean
    D[Ns:, 1] = mean

    for func in functionals:
        np.add.at(D[:, 2], dofmap.site_dofs(func.sites), func.rot_K)
    return D


def assemble_operators(hierarchy: MeshHierarchy, space, scheme, dofmap: DofMap,
                       projections: Optional[List[ProjectionData]] = None) -> GlobalOperators:
    """
    Assemble A_mu, A_lam and the constraint columns of one discretization.

    Args:
        hierarchy: Mesh hierarchy
        space: SpaceKind
        scheme: SchemeKind
        dofmap: Dof layout (same space)
        projections: Fine-element projections (computed when omitted)

    Returns:
        GlobalOperators
    """
    space = SpaceKind.parse(space)
    scheme = SchemeKind.parse(scheme)
    if dofmap.space != space:
        raise AssemblyError(f"Dof map built for {dofmap.space.value}, assembling {space.value}")
    if projections is None:
        projections = project_all(hierarchy.fine, space)

    functionals = []
    mu_blocks = []
    lam_blocks = []
    for k in range(hierarchy.coarse.n_elements):
        func = local_functionals(k, hierarchy, space)
        dofs = dofmap.site_dofs(func.sites)
        mu_blocks.append((dofs, local_stiffness_mu(k, hierarchy, space, projections, func)))
        lam_blocks.append((dofs, local_stiffness_lambda(func, scheme)))
        functionals.append(func)

    A_mu = _accumulate(mu_blocks, dofmap.N)
    A_lam = _accumulate(lam_blocks, dofmap.N)
    constraints = _constraint_columns(hierarchy, dofmap, projections, functionals)

    logger.debug(f"Assembled operators {space.value}/{scheme.value}: N={dofmap.N}, "
                 f"nnz(A_mu)={A_mu.nnz}, nnz(A_lam)={A_lam.nnz}")
    return GlobalOperators(space=space, scheme=scheme, dofmap=dofmap, A_mu=A_mu, A_lam=A_lam,
                           constraints=constraints, projections=projections, functionals=functionals)


def interpolate_exact(u: VectorField, dofmap: DofMap, hierarchy: MeshHierarchy,
                      sites: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Dof interpolant of a field: edge means by 3-point Gauss (NC) or vertex values.

    Args:
        u: Field u(x, y) -> (q, 2)
        dofmap: Dof layout
        hierarchy: Mesh hierarchy
        sites: Restrict to these sites (returns their x-values then y-values)

    Returns:
        Dof vector
    """
    fine = hierarchy.fine
    if sites is None:
        sites = np.arange(dofmap.n_sites)
    sites = np.asarray(sites, dtype=np.int64)

    if dofmap.space.is_conforming:
        points = fine.vertices[sites]
        values = np.asarray(u(points[:, 0], points[:, 1]), dtype=float).reshape(-1, 2)
    else:
        t, w = gauss_legendre_unit(3)
        a = fine.vertices[fine.edges[sites, 0]]
        b = fine.vertices[fine.edges[sites, 1]]
        points = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
        flat = points.reshape(-1, 2)
        values = np.asarray(u(flat[:, 0], flat[:, 1]), dtype=float).reshape(len(sites), len(t), 2)
        values = np.tensordot(w, values, axes=(0, 1))
    return np.concatenate([values[:, 0], values[:, 1]])


def assemble_load(hierarchy: MeshHierarchy, dofmap: DofMap, problem: ModelProblem) -> np.ndarray:
    """Body-force load plus traction terms on the Neumann edges."""
    fine = hierarchy.fine
    space = dofmap.space
    Ns = dofmap.n_sites
    rhs = np.zeros(dofmap.N)

    for k in range(fine.n_elements):
        np.add.at(rhs, dofmap.element_dofs(k), local_load(fine.geometry(k), problem.body_force, space))

    neumann = dofmap.neumann_edges
    if not neumann.any():
        return rhs

    t, _ = gauss_legendre_unit(3)
    for e in np.nonzero(neumann)[0]:
        k = int(fine.edge_elements[e, 0])
        local = int(np.nonzero(fine.element_edges[k] == e)[0][0])
        geom = fine.geometry(k)
        a = geom.vertices[local]
        b = geom.vertices[(local + 1) % geom.n_edges]
        points, weights = edge_quadrature(a, b, 3)
        g = np.asarray(problem.traction(points[:, 0], points[:, 1], geom.normals[local]), dtype=float)
        if space.is_conforming:
            cycle = fine.elements[k]
            va, vb = cycle[local], cycle[(local + 1) % len(cycle)]
            for site, hat in ((va, 1.0 - t), (vb, t)):
                load = (weights * hat) @ g
                rhs[site] += load[0]
                rhs[Ns + site] += load[1]
        else:
            load = weights @ g
            rhs[e] += load[0]
            rhs[Ns + e] += load[1]
    return rhs


def _eliminate_dirichlet(operators: GlobalOperators, lam: float, mu: float, rhs: np.ndarray,
                         dofs: np.ndarray, values: np.ndarray):
    """
    Symmetric elimination: identity rows/columns on Dirichlet dofs, rhs corrected.

    The lift 2 mu A_mu g + lam A_lam g is formed from the two operators apart.
    """
    A = operators.stiffness(lam, mu)
    N = A.shape[0]
    g = np.zeros(N)
    g[dofs] = values
    lift = 2.0 * mu * (operators.A_mu @ g) + lam * (operators.A_lam @ g)
    rhs = rhs - lift
    rhs[dofs] = values
    keep = np.ones(N)
    keep[dofs] = 0.0
    K = sp.diags(keep)
    A = (K @ A @ K + sp.diags(1.0 - keep)).tocsr()
    return A, rhs


def assemble(hierarchy: MeshHierarchy, model: ModelProblem, space, scheme, dofmap: DofMap,
             operators: Optional[GlobalOperators] = None) -> BorderedSystem:
    """
    Assemble the global system for one problem.

    A = 2 mu A_mu + lam A_lam; Dirichlet dofs are eliminated symmetrically and
    PureTraction borders the matrix with the three constraint columns.

    Args:
        hierarchy: Mesh hierarchy
        model: ModelProblem
        space: SpaceKind
        scheme: SchemeKind
        dofmap: Dof layout
        operators: Precomputed GlobalOperators (reused across lambda)

    Returns:
        BorderedSystem
    """
    if operators is None:
        operators = assemble_operators(hierarchy, space, scheme, dofmap)
    if model.formulation != dofmap.formulation:
        raise AssemblyError(f"Problem formulation {model.formulation.value} differs from dof map "
                            f"{dofmap.formulation.value}")

    rhs = assemble_load(hierarchy, dofmap, model)

    dirichlet_dofs = dofmap.dirichlet_dofs
    dirichlet_values = np.zeros(0)
    if len(dirichlet_dofs):
        dirichlet_values = interpolate_exact(model.displacement, dofmap, hierarchy, dofmap.dirichlet_sites)
        A, rhs = _eliminate_dirichlet(operators, model.lam, model.mu, rhs, dirichlet_dofs, dirichlet_values)
    else:
        A = operators.stiffness(model.lam, model.mu)

    if dofmap.formulation == Formulation.PURE_TRACTION:
        borders = operators.constraints.copy()
    else:
        borders = np.zeros((dofmap.N, 0))

    return BorderedSystem(A=A, borders=borders, rhs=rhs,
                          dirichlet_dofs=dirichlet_dofs, dirichlet_values=dirichlet_values)


def bordered_min_singular_value(system: BorderedSystem, relative: bool = False,
                                limit: int = DENSE_LIMIT) -> float:
    """
    Smallest singular value of the dense bordered matrix.

    Args:
        system: Assembled system
        relative: Divide by the largest singular value
        limit: Maximum size for the dense decomposition

    Returns:
        sigma_min (or sigma_min / sigma_max)
    """
    size = system.N + system.nb
    if size > limit:
        raise InvalidArgumentError(f"Dense singular values need <= {limit} unknowns, system has {size}")
    s = np.linalg.svd(system.bordered_matrix().toarray(), compute_uv=False)
    return float(s[-1] / s[0]) if relative else float(s[-1])


def constraint_residuals(system: BorderedSystem, chi: np.ndarray) -> np.ndarray:
    """|d_k . chi| / (||d_k|| ||chi||) for each border column."""
    chi_norm = np.linalg.norm(chi)
    out = np.zeros(system.nb)
    for j in range(system.nb):
        d = system.borders[:, j]
        scale = np.linalg.norm(d) * chi_norm
        out[j] = abs(d @ chi) / scale if scale > 0.0 else 0.0
    return out


def _pivot_diagnostic(K: sp.csc_matrix) -> str:
    if K.shape[0] > DENSE_LIMIT:
        return f"size {K.shape[0]} too large for a dense diagnostic"
    s = np.linalg.svd(K.toarray(), compute_uv=False)
    rank = int((s > s[0] * 1e-12).sum())
    return f"dense sigma_min/sigma_max={s[-1] / s[0]:.3e}, numerical rank {rank} of {K.shape[0]}"


def solve(system: BorderedSystem, tol: float = 1e-10) -> SolveResult:
    """
    Direct sparse LU solve with one step of iterative refinement.

    The residual reported is ||r|| / (||K|| ||x|| + ||b||) in the max norm.

    Args:
        system: Assembled system
        tol: Maximum accepted relative residual

    Returns:
        SolveResult

    Raises:
        SolverError: If the factorization fails or the residual exceeds tol
    """
    K = system.bordered_matrix()
    b = system.full_rhs()
    try:
        lu = splu(K)
    except RuntimeError as e:
        raise SolverError(f"LU factorization failed: {e} ({_pivot_diagnostic(K)})") from e

    x = lu.solve(b)
    x = x + lu.solve(b - K @ x)
    if not np.all(np.isfinite(x)):
        raise SolverError(f"Solution is not finite ({_pivot_diagnostic(K)})")

    r = b - K @ x
    denom = sparse_norm(K, np.inf) * np.abs(x).max() + np.abs(b).max()
    residual = float(np.abs(r).max() / denom) if denom > 0.0 else 0.0
    if residual > tol:
        raise SolverError(f"Relative residual {residual:.3e} exceeds {tol:.1e} ({_pivot_diagnostic(K)})")

    logger.debug(f"Solved N={system.N} nb={system.nb}: residual {residual:.3e}")
    return SolveResult(chi=x[:system.N], beta=x[system.N:], residual=residual)
