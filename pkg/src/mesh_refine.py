"""Two-level mesh hierarchies: coarse mesh, refined mesh and parent map."""

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List

import numpy as np

from .exceptions import InvalidArgumentError, RefinementError, TopologyError
from .mesh import PolygonalMesh

logger = logging.getLogger("polyvem.mesh_refine")


class RefineType(IntEnum):
    """Refinement of a coarse element K into fine elements E."""
    TYPE1 = 1  # centroid joined to edge midpoints: n quadrilaterals
    TYPE2 = 2  # quads: bimedians, 4 quadrilaterals; other polygons: n corner triangles plus the midpoint polygon
    TYPE3 = 3  # midpoints inserted on every edge, region unchanged

    @classmethod
    def parse(cls, value) -> 'RefineType':
        if isinstance(value, RefineType):
            return value
        text = str(value).strip().lower().replace('type', '')
        try:
            return cls(int(text))
        except ValueError:
            raise InvalidArgumentError(f"Unknown refine type '{value}' (expected 1, 2 or 3)")


@dataclass
class MeshHierarchy:
    """Coarse mesh, fine mesh and the fine-to-coarse element map."""
    coarse: PolygonalMesh
    fine: PolygonalMesh
    parent_of: np.ndarray
    refine_type: RefineType
    coarse_edge_children: np.ndarray
    children: List[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.parent_of = np.asarray(self.parent_of, dtype=np.int64)
        order = np.argsort(self.parent_of, kind='stable')
        counts = np.bincount(self.parent_of, minlength=self.coarse.n_elements)
        self.children = np.split(order, np.cumsum(counts)[:-1])

    def children_of(self, k: int) -> np.ndarray:
        return self.children[k]

    def validate(self, rtol: float = 1e-12):
        """
        Check the parent map and area conservation.

        Raises:
            TopologyError: If a parent is not tiled by its children
        """
        if len(self.parent_of) != self.fine.n_elements:
            raise TopologyError("Parent map length differs from fine element count")
        fine_areas = self.fine.areas()
        for k in range(self.coarse.n_elements):
            kids = self.children[k]
            if len(kids) == 0:
                raise TopologyError(f"Coarse element {k} has no children")
            parent_area = self.coarse.geometry(k).area
            child_area = fine_areas[kids].sum()
            if abs(child_area - parent_area) > rtol * parent_area:
                raise TopologyError(f"Children of element {k} cover {child_area:.15g}, "
                                    f"parent area {parent_area:.15g}")
        if self.refine_type == RefineType.TYPE3 and \
                not np.array_equal(np.sort(self.parent_of), np.arange(self.coarse.n_elements)):
            raise TopologyError("Type3 parent map is not a bijection")

    @property
    def h(self) -> float:
        """Maximum fine-element diameter."""
        return self.fine.max_diameter()


def _check_centroid_in_kernel(mesh: PolygonalMesh, k: int):
    geom = mesh.geometry(k)
    pts = geom.vertices
    nxt = np.roll(pts, -1, axis=0)
    c = geom.centroid
    cross = (nxt[:, 0] - pts[:, 0]) * (c[1] - pts[:, 1]) - (nxt[:, 1] - pts[:, 1]) * (c[0] - pts[:, 0])
    if np.any(cross <= 1e-14 * geom.diameter ** 2):
        raise RefinementError(f"Centroid of element {k} is outside its star kernel; "
                              f"Type1 refinement is not possible")


def _check_convex(mesh: PolygonalMesh, k: int):
    geom = mesh.geometry(k)
    pts = geom.vertices
    before = pts - np.roll(pts, 1, axis=0)
    after = np.roll(pts, -1, axis=0) - pts
    turn = before[:, 0] * after[:, 1] - before[:, 1] * after[:, 0]
    if np.any(turn <= 1e-14 * geom.diameter ** 2):
        raise InvalidArgumentError(f"Type2 refinement needs strictly convex elements; element {k} is not")


def refine(mesh: PolygonalMesh, refine_type) -> MeshHierarchy:
    """
    Refine every element of a mesh.

    Fine vertices are the coarse vertices, then one midpoint per coarse edge
    (index nv + edge), then one centroid per coarse element (Type1) or one
    vertex-mean center per coarse quadrilateral (Type2).

    Args:
        mesh: Coarse mesh
        refine_type: RefineType or 1/2/3

    Returns:
        MeshHierarchy with coarse_edge_children[e] = the two fine halves of edge e

    Raises:
        InvalidArgumentError: Type2 on a non-convex element
        RefinementError: Type1 with a centroid outside the star kernel
    """
    refine_type = RefineType.parse(refine_type)
    nv, ne = mesh.n_vertices, mesh.n_edges

    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = [mesh.vertices, midpoints]
    elements = []
    parent_of = []

    if refine_type == RefineType.TYPE1:
        centroids = np.empty((mesh.n_elements, 2))
        for k, cycle in enumerate(mesh.elements):
            _check_centroid_in_kernel(mesh, k)
            centroids[k] = mesh.geometry(k).centroid
            c = nv + ne + k
            mids = [nv + e for e in mesh.element_edges[k]]
            n = len(cycle)
            for i in range(n):
                elements.append((c, mids[i - 1], cycle[i], mids[i]))
                parent_of.append(k)
        vertices.append(centroids)

    elif refine_type == RefineType.TYPE2:
        centers = []
        for k, cycle in enumerate(mesh.elements):
            _check_convex(mesh, k)
            mids = [nv + e for e in mesh.element_edges[k]]
            n = len(cycle)
            if n == 4:
                # Bimedians of a quadrilateral cross at its vertex mean
                c = nv + ne + len(centers)
                centers.append(mesh.element_points(k).mean(axis=0))
                for i in range(n):
                    elements.append((cycle[i], mids[i], c, mids[i - 1]))
                parent_of.extend([k] * n)
                continue
            for i in range(n):
                elements.append((cycle[i], mids[i], mids[i - 1]))
            elements.append(tuple(mids))
            parent_of.extend([k] * (n + 1))
        if centers:
            vertices.append(np.array(centers))

    else:
        for k, cycle in enumerate(mesh.elements):
            fine_cycle = []
            for v, e in zip(cycle, mesh.element_edges[k]):
                fine_cycle.extend([v, nv + e])
            elements.append(tuple(fine_cycle))
            parent_of.append(k)

    fine = PolygonalMesh(np.vstack(vertices), elements)

    children = np.empty((ne, 2), dtype=np.int64)
    for e, (a, b) in enumerate(mesh.edges):
        children[e, 0] = fine.edge_id(int(a), nv + e)
        children[e, 1] = fine.edge_id(nv + e, int(b))

    hierarchy = MeshHierarchy(coarse=mesh, fine=fine, parent_of=np.array(parent_of),
                              refine_type=refine_type, coarse_edge_children=children)
    hierarchy.validate()
    logger.debug(f"Refined {mesh} with {refine_type.name}: fine {fine}")
    return hierarchy
