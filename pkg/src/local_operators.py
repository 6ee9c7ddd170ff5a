"""Per-element virtual element projections, functionals and local matrices."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from .exceptions import AssemblyError, InvalidArgumentError, ProjectionError
from .mesh import ElementGeometry, PolygonalMesh
from .mesh_refine import MeshHierarchy
from .quadrature import integrate_polygon, polygon_quadrature

logger = logging.getLogger("polyvem.local_operators")

# G = B D is 3x3 on scaled monomials; anything worse than this is a degenerate element
G_CONDITION_LIMIT = 1e12


class SpaceKind(Enum):
    """Lowest-order local space: edge-mean dofs (NC) or vertex dofs (conforming)."""
    NC_ORIGINAL = "NCOriginal"
    NC_ENHANCED = "NCEnhanced"
    CONFORMING = "Conforming"
    CONFORMING_ENHANCED = "ConformingEnhanced"

    @property
    def is_conforming(self) -> bool:
        return self in (SpaceKind.CONFORMING, SpaceKind.CONFORMING_ENHANCED)

    @property
    def is_enhanced(self) -> bool:
        return self in (SpaceKind.NC_ENHANCED, SpaceKind.CONFORMING_ENHANCED)

    @classmethod
    def parse(cls, value) -> 'SpaceKind':
        if isinstance(value, SpaceKind):
            return value
        for kind in cls:
            if str(value).lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise InvalidArgumentError(f"Unknown space '{value}' (expected one of {[k.value for k in cls]})")


class SchemeKind(Enum):
    """Where the div term is projected: per fine E (ReducedRot) or per coarse K (UnifiedReduced)."""
    REDUCED_ROT = "ReducedRot"
    UNIFIED_REDUCED = "UnifiedReduced"

    @classmethod
    def parse(cls, value) -> 'SchemeKind':
        if isinstance(value, SchemeKind):
            return value
        for kind in cls:
            if str(value).lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise InvalidArgumentError(f"Unknown scheme '{value}' (expected one of {[k.value for k in cls]})")


@dataclass(frozen=True)
class ProjectionData:
    """
    Elliptic projection onto scaled linear monomials for one element and one component.

    Monomials are m = {1, (x - xE)/hE, (y - yE)/hE}. pi_coeff[:, i] holds the
    monomial coefficients of the projection of basis function i.
    """
    D: np.ndarray
    B: np.ndarray
    G: np.ndarray
    pi_coeff: np.ndarray
    pi_dof: np.ndarray
    centroid: np.ndarray
    diameter: float
    area: float

    @property
    def n_dof(self) -> int:
        return self.D.shape[0]

    def consistency_matrix(self) -> np.ndarray:
        """Scalar (grad Pi v, grad Pi w)_E in dof coordinates."""
        scale = self.area / self.diameter ** 2
        grads = self.pi_coeff[1:, :]
        return scale * grads.T @ grads

    def coefficients(self, chi: np.ndarray) -> np.ndarray:
        """Monomial coefficients (3,) or (3, k) of Pi applied to dof values."""
        return self.pi_coeff @ chi

    def evaluate(self, coeff: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Values of the linear polynomial with the given monomial coefficients."""
        xi = (points - self.centroid) / self.diameter
        return coeff[0] + xi @ coeff[1:]

    def gradient(self, coeff: np.ndarray) -> np.ndarray:
        return coeff[1:] / self.diameter

    def mean_weights(self) -> np.ndarray:
        """Row w with w . chi = integral over E of Pi chi (monomials 2, 3 have zero mean)."""
        return self.area * self.pi_coeff[0, :]


@dataclass
class LocalFunctionals:
    """
    Boundary-computed div/rot functionals of the children of one coarse element.

    Dof vectors are laid out as all x-component dofs then all y-component dofs.
    Child vectors use the child's local sites; coarse vectors use `sites`
    (the sorted union of the children's sites).
    """
    element: int
    sites: np.ndarray
    children: np.ndarray
    child_index: List[np.ndarray]
    div_E: List[np.ndarray]
    rot_E: List[np.ndarray]
    div_K: np.ndarray
    rot_K: np.ndarray
    child_areas: np.ndarray
    area: float

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def child_dofs(self, c: int) -> np.ndarray:
        """Coarse-local dof positions of child c's local dofs."""
        idx = self.child_index[c]
        return np.concatenate([idx, idx + self.n_sites])


def element_sites(mesh: PolygonalMesh, k: int, space: SpaceKind) -> np.ndarray:
    """Global scalar sites of element k: its edges (NC) or vertices (conforming), in cycle order."""
    if space.is_conforming:
        return np.asarray(mesh.elements[k], dtype=np.int64)
    return mesh.element_edges[k]


def boundary_weights(geom: ElementGeometry, space: SpaceKind) -> np.ndarray:
    """Weights w with w . chi = boundary mean of v; they sum to 1."""
    lengths = geom.edge_lengths
    if space.is_conforming:
        return 0.5 * (lengths + np.roll(lengths, 1)) / geom.perimeter
    return lengths / geom.perimeter


def _edge_moments(geom: ElementGeometry, vectors: np.ndarray, space: SpaceKind) -> np.ndarray:
    """
    Per-site coefficients of v -> sum_e int_e v . vectors_e for piecewise traces.

    NC sites take |e| vectors_e; conforming sites take half of each incident edge.
    Returns (2, n): row c multiplies the component-c dofs.
    """
    weighted = geom.edge_lengths[:, None] * vectors
    if space.is_conforming:
        weighted = 0.5 * (weighted + np.roll(weighted, 1, axis=0))
    return weighted.T


def elliptic_projection(geom: ElementGeometry, space: SpaceKind) -> ProjectionData:
    """
    Build the D, B, G matrices and the projection of one element.

    Args:
        geom: Element geometry
        space: Local space (decides the dof functionals)

    Returns:
        ProjectionData

    Raises:
        ProjectionError: If G is singular or badly conditioned
    """
    space = SpaceKind.parse(space)
    h = geom.diameter
    c = geom.centroid
    sites = geom.vertices if space.is_conforming else geom.edge_midpoints
    n = len(sites)

    D = np.empty((n, 3))
    D[:, 0] = 1.0
    D[:, 1:] = (sites - c) / h

    B = np.empty((3, n))
    B[0, :] = boundary_weights(geom, space)
    B[1:, :] = _edge_moments(geom, geom.normals, space) / h

    G = B @ D
    try:
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond > G_CONDITION_LIMIT:
            raise ProjectionError(f"Projection matrix G is singular (cond={cond:.3e}, area={geom.area:.3e})")
        pi_coeff = np.linalg.solve(G, B)
    except np.linalg.LinAlgError as e:
        raise ProjectionError(f"Projection matrix G is singular: {e}") from e

    return ProjectionData(D=D, B=B, G=G, pi_coeff=pi_coeff, pi_dof=D @ pi_coeff,
                          centroid=c, diameter=h, area=geom.area)


def project_all(mesh: PolygonalMesh, space: SpaceKind) -> List[ProjectionData]:
    """ProjectionData of every element of a mesh."""
    space = SpaceKind.parse(space)
    return [elliptic_projection(mesh.geometry(k), space) for k in range(mesh.n_elements)]


def stab_matrix(projection: ProjectionData) -> np.ndarray:
    """
    Dof-space stabilization (I - Pi)^T (I - Pi), block-diagonal over the two components.

    Args:
        projection: ProjectionData of the element

    Returns:
        Symmetric PSD (2n, 2n) matrix
    """
    residual = np.eye(projection.n_dof) - projection.pi_dof
    block = residual.T @ residual
    return np.kron(np.eye(2), block)


def _children_sites(hierarchy: MeshHierarchy, k: int, space: SpaceKind):
    children = hierarchy.children_of(k)
    child_sites = [element_sites(hierarchy.fine, int(E), space) for E in children]
    sites = np.unique(np.concatenate(child_sites))
    child_index = [np.searchsorted(sites, s) for s in child_sites]
    return children, sites, child_index


def _scatter(values: np.ndarray, idx: np.ndarray, m: int) -> np.ndarray:
    """Add a (2, n) per-site coefficient array into a coarse dof vector of length 2m."""
    out = np.zeros(2 * m)
    np.add.at(out, idx, values[0])
    np.add.at(out, idx + m, values[1])
    return out


def local_functionals(k: int, hierarchy: MeshHierarchy, space: SpaceKind,
                      tol: float = 1e-13) -> LocalFunctionals:
    """
    div/rot functionals of the children of coarse element k and their sums over k.

    The coarse sums include interior-edge contributions that cancel pairwise; the
    result is checked against the sum over the fine edges on the coarse boundary.

    Args:
        k: Coarse element index
        hierarchy: Mesh hierarchy
        space: Local space
        tol: Cancellation tolerance relative to the coarse perimeter

    Returns:
        LocalFunctionals

    Raises:
        AssemblyError: If interior contributions do not cancel
    """
    space = SpaceKind.parse(space)
    fine = hierarchy.fine
    children, sites, child_index = _children_sites(hierarchy, k, space)
    m = len(sites)

    div_E, rot_E = [], []
    div_K = np.zeros(2 * m)
    rot_K = np.zeros(2 * m)
    direct_div = np.zeros(2 * m)
    direct_rot = np.zeros(2 * m)

    # Fine edges used by exactly one child lie on the coarse boundary
    edge_ids = np.concatenate([fine.element_edges[int(E)] for E in children])
    uniq, counts = np.unique(edge_ids, return_counts=True)
    outer = set(uniq[counts == 1].tolist())

    for E, idx in zip(children, child_index):
        geom = fine.geometry(int(E))
        div_local = _edge_moments(geom, geom.normals, space)
        rot_local = _edge_moments(geom, geom.tangents, space)
        div_E.append(div_local.reshape(-1))
        rot_E.append(rot_local.reshape(-1))
        div_K += _scatter(div_local, idx, m)
        rot_K += _scatter(rot_local, idx, m)

        on_boundary = np.array([int(e) in outer for e in fine.element_edges[int(E)]])
        mask = on_boundary[:, None].astype(float)
        direct_div += _scatter(_edge_moments(geom, geom.normals * mask, space), idx, m)
        direct_rot += _scatter(_edge_moments(geom, geom.tangents * mask, space), idx, m)

    perimeter = hierarchy.coarse.geometry(k).perimeter
    residual = max(np.abs(rot_K - direct_rot).max(), np.abs(div_K - direct_div).max())
    if residual > tol * perimeter:
        raise AssemblyError(f"Interior edge terms of coarse element {k} do not cancel "
                            f"(residual {residual:.3e}, perimeter {perimeter:.3e})")

    child_areas = np.array([fine.geometry(int(E)).area for E in children])
    return LocalFunctionals(element=k, sites=sites, children=children, child_index=child_index,
                            div_E=div_E, rot_E=rot_E, div_K=div_K, rot_K=rot_K,
                            child_areas=child_areas, area=hierarchy.coarse.geometry(k).area)


def local_stiffness_mu(k: int, hierarchy: MeshHierarchy, space: SpaceKind,
                       projections: Optional[Sequence[ProjectionData]] = None,
                       functionals: Optional[LocalFunctionals] = None) -> np.ndarray:
    """
    Matrix of the mu-form on coarse element k in its local dof layout.

    Sum over children of consistency plus stabilization, minus the reduced
    rotation term rot_K rot_K^T / (2|K|).

    Args:
        k: Coarse element index
        hierarchy: Mesh hierarchy
        space: Local space
        projections: Fine-element projections (computed when omitted)
        functionals: LocalFunctionals of k (computed when omitted)

    Returns:
        Symmetric PSD (2m, 2m) matrix, m = number of coarse-local sites
    """
    space = SpaceKind.parse(space)
    if functionals is None:
        functionals = local_functionals(k, hierarchy, space)
    m = functionals.n_sites
    A = np.zeros((2 * m, 2 * m))

    for c, E in enumerate(functionals.children):
        P = projections[int(E)] if projections is not None else \
            elliptic_projection(hierarchy.fine.geometry(int(E)), space)
        block = np.kron(np.eye(2), P.consistency_matrix()) + stab_matrix(P)
        dofs = functionals.child_dofs(c)
        if block.shape[0] != len(dofs):
            raise AssemblyError(f"Child {int(E)} of element {k} has {block.shape[0]} dofs, "
                                f"site map gives {len(dofs)}")
        A[np.ix_(dofs, dofs)] += block

    rot = functionals.rot_K
    A -= np.outer(rot, rot) / (2.0 * functionals.area)
    return 0.5 * (A + A.T)


def eps_star_quadratic(k: int, hierarchy: MeshHierarchy, space: SpaceKind, chi: np.ndarray,
                       grad_u: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None) -> float:
    """
    ||grad_h v||^2_K - 1/2 |K| (mean rot v)^2 for coarse-local dof values chi.

    Args:
        k: Coarse element index
        hierarchy: Mesh hierarchy
        space: Local space
        chi: Coarse-local dof vector (2m,)
        grad_u: Exact gradient g(x, y) -> (q, 2, 2) with g[:, c, d] = d u_c / d x_d;
                the projected gradients are used when omitted

    Returns:
        Value of the quadratic form
    """
    space = SpaceKind.parse(space)
    functionals = local_functionals(k, hierarchy, space)
    chi = np.asarray(chi, dtype=float)
    grad_norm = 0.0
    for c, E in enumerate(functionals.children):
        geom = hierarchy.fine.geometry(int(E))
        if grad_u is not None:
            points, weights = polygon_quadrature(geom.vertices, geom.centroid)
            g = np.asarray(grad_u(points[:, 0], points[:, 1]), dtype=float)
            grad_norm += float(weights @ (g ** 2).sum(axis=(1, 2)))
        else:
            P = elliptic_projection(geom, space)
            local = chi[functionals.child_dofs(c)].reshape(2, -1)
            grads = np.array([P.gradient(P.coefficients(local[comp])) for comp in range(2)])
            grad_norm += geom.area * float((grads ** 2).sum())
    rot = float(functionals.rot_K @ chi)
    return grad_norm - rot ** 2 / (2.0 * functionals.area)


def local_stiffness_lambda(functionals: LocalFunctionals, scheme: SchemeKind) -> np.ndarray:
    """
    Matrix of the reduced div-form on a coarse element in its local dof layout.

    ReducedRot sums div_E div_E^T / |E| over the children; UnifiedReduced uses
    div_K div_K^T / |K|.
    """
    scheme = SchemeKind.parse(scheme)
    m = functionals.n_sites
    if scheme == SchemeKind.UNIFIED_REDUCED:
        return np.outer(functionals.div_K, functionals.div_K) / functionals.area

    A = np.zeros((2 * m, 2 * m))
    for c, div in enumerate(functionals.div_E):
        dofs = functionals.child_dofs(c)
        A[np.ix_(dofs, dofs)] += np.outer(div, div) / functionals.child_areas[c]
    return A


def local_load(geom: ElementGeometry, f: Callable[[np.ndarray, np.ndarray], np.ndarray],
               space: SpaceKind) -> np.ndarray:
    """
    Load vector (f, P v)_E with P v the boundary mean of v.

    Args:
        geom: Element geometry
        f: Body force f(x, y) -> (q, 2)
        space: Local space

    Returns:
        (2n,) vector, x-component entries first
    """
    F = integrate_polygon(f, geom.vertices, geom.centroid)
    w = boundary_weights(geom, SpaceKind.parse(space))
    return np.concatenate([w * F[0], w * F[1]])
