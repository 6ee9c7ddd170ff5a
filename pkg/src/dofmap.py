"""Global numbering of the scalar dof sites and the Dirichlet/Neumann split."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from .exceptions import InvalidArgumentError
from .local_operators import SpaceKind, element_sites
from .mesh_refine import MeshHierarchy

logger = logging.getLogger("polyvem.dofmap")

SIDES = ('bottom', 'right', 'top', 'left')


class Formulation(Enum):
    """Boundary condition setting of the elasticity problem."""
    PURE_TRACTION = "PureTraction"
    PURE_DISPLACEMENT = "PureDisplacement"
    MIXED = "Mixed"

    @property
    def n_borders(self) -> int:
        return 3 if self == Formulation.PURE_TRACTION else 0

    @classmethod
    def parse(cls, value) -> 'Formulation':
        if isinstance(value, Formulation):
            return value
        for kind in cls:
            if str(value).lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise InvalidArgumentError(f"Unknown formulation '{value}' (expected one of {[k.value for k in cls]})")


# midpoint (2,) -> True when the boundary edge carries Dirichlet data
BoundarySelector = Callable[[np.ndarray], bool]


def sides_selector(sides: Sequence[str], tol: float = 1e-12) -> BoundarySelector:
    """
    Selector for boundary edges lying on named sides of the unit square.

    Args:
        sides: Subset of 'bottom', 'right', 'top', 'left'
        tol: Coordinate tolerance

    Returns:
        Selector returning True for edges on one of the sides
    """
    unknown = [s for s in sides if s not in SIDES]
    if unknown:
        raise InvalidArgumentError(f"Unknown boundary sides {unknown} (expected a subset of {list(SIDES)})")
    chosen = set(sides)

    def select(midpoint: np.ndarray) -> bool:
        x, y = midpoint
        return (('bottom' in chosen and abs(y) < tol) or ('top' in chosen and abs(y - 1.0) < tol)
                or ('left' in chosen and abs(x) < tol) or ('right' in chosen and abs(x - 1.0) < tol))

    return select


@dataclass
class DofMap:
    """
    Global dof layout: x-dof of site s is s, y-dof is n_sites + s.

    Sites are fine edges (NC spaces) or fine vertices (conforming spaces).
    """
    space: SpaceKind
    formulation: Formulation
    n_sites: int
    site_points: np.ndarray
    element_sites: List[np.ndarray]
    dirichlet_edges: np.ndarray
    neumann_edges: np.ndarray
    dirichlet_sites: np.ndarray

    @property
    def N(self) -> int:
        return 2 * self.n_sites

    @property
    def n_borders(self) -> int:
        return self.formulation.n_borders

    def element_dofs(self, k: int) -> np.ndarray:
        """Global dofs of fine element k in local order (x-dofs then y-dofs)."""
        s = self.element_sites[k]
        return np.concatenate([s, s + self.n_sites])

    def site_dofs(self, sites: np.ndarray) -> np.ndarray:
        sites = np.asarray(sites, dtype=np.int64)
        return np.concatenate([sites, sites + self.n_sites])

    @property
    def dirichlet_dofs(self) -> np.ndarray:
        return self.site_dofs(self.dirichlet_sites)


def build_dof_map(hierarchy: MeshHierarchy, space, formulation,
                  boundary_selector: Optional[BoundarySelector] = None) -> DofMap:
    """
    Number the dofs of the fine mesh and classify boundary edges.

    Args:
        hierarchy: Mesh hierarchy (dofs live on the fine mesh)
        space: SpaceKind
        formulation: Formulation
        boundary_selector: Dirichlet edge selector, required for Mixed

    Returns:
        DofMap

    Raises:
        InvalidArgumentError: Mixed without a selector, or with an empty Dirichlet or traction part
    """
    space = SpaceKind.parse(space)
    formulation = Formulation.parse(formulation)
    fine = hierarchy.fine

    boundary = fine.boundary
    midpoints = 0.5 * (fine.vertices[fine.edges[:, 0]] + fine.vertices[fine.edges[:, 1]])

    if formulation == Formulation.PURE_TRACTION:
        dirichlet = np.zeros(fine.n_edges, dtype=bool)
    elif formulation == Formulation.PURE_DISPLACEMENT:
        dirichlet = boundary.copy()
    else:
        if boundary_selector is None:
            raise InvalidArgumentError("Mixed formulation needs a boundary selector")
        dirichlet = np.array([bool(b) and bool(boundary_selector(midpoints[e]))
                              for e, b in enumerate(boundary)], dtype=bool)
        if not dirichlet.any():
            raise InvalidArgumentError("Mixed formulation with an empty Dirichlet part; "
                                       "request PureTraction instead")
        if not (boundary & ~dirichlet).any():
            raise InvalidArgumentError("Mixed formulation with an empty traction part; "
                                       "request PureDisplacement instead")
    neumann = boundary & ~dirichlet

    if space.is_conforming:
        n_sites = fine.n_vertices
        site_points = fine.vertices
        dirichlet_sites = np.unique(fine.edges[dirichlet].ravel())
    else:
        n_sites = fine.n_edges
        site_points = midpoints
        dirichlet_sites = np.nonzero(dirichlet)[0]

    sites = [element_sites(fine, k, space) for k in range(fine.n_elements)]
    dofmap = DofMap(space=space, formulation=formulation, n_sites=n_sites, site_points=site_points,
                    element_sites=sites, dirichlet_edges=dirichlet, neumann_edges=neumann,
                    dirichlet_sites=dirichlet_sites.astype(np.int64))

    logger.debug(f"Dof map {space.value}/{formulation.value}: {n_sites} sites, N={dofmap.N}, "
                 f"{len(dirichlet_sites)} Dirichlet sites, {int(neumann.sum())} traction edges")
    return dofmap
