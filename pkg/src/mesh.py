"""Polygonal meshes: data structure, per-element geometry and generators."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import (DistortionError, InvalidArgumentError, MeshGenerationError,
                         TopologyError)

logger = logging.getLogger("polyvem.mesh")

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@dataclass(frozen=True)
class ElementGeometry:
    """Geometry of one polygon; edge k joins vertex k to vertex k+1."""
    vertices: np.ndarray
    centroid: np.ndarray
    area: float
    diameter: float
    edge_lengths: np.ndarray
    edge_midpoints: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.edge_lengths)

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())


def polygon_signed_area(points: np.ndarray) -> float:
    """Shoelace signed area (positive for ccw), on coordinates relative to the vertex mean."""
    shifted = points - points.mean(axis=0)
    x, y = shifted[:, 0], shifted[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(points: np.ndarray) -> np.ndarray:
    """Centroid by the polygon moment formula."""
    origin = points.mean(axis=0)
    shifted = points - origin
    x, y = shifted[:, 0], shifted[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    return origin + np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)


def compute_geometry(points: np.ndarray) -> ElementGeometry:
    """Build the ElementGeometry of a ccw polygon given by its vertex coordinates."""
    points = np.asarray(points, dtype=float)
    nxt = np.roll(points, -1, axis=0)
    delta = nxt - points
    lengths = np.hypot(delta[:, 0], delta[:, 1])
    tangents = delta / lengths[:, None]
    # Outward normal of a ccw polygon; tangent = 90 deg ccw rotation of it
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])

    diff = points[:, None, :] - points[None, :, :]
    diameter = float(np.sqrt((diff ** 2).sum(axis=2)).max())

    return ElementGeometry(
        vertices=points,
        centroid=polygon_centroid(points),
        area=polygon_signed_area(points),
        diameter=diameter,
        edge_lengths=lengths,
        edge_midpoints=0.5 * (points + nxt),
        normals=normals,
        tangents=tangents,
    )


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersect(p1, p2, q1, q2, tol: float) -> bool:
    """Closed-segment intersection test with a small collinearity tolerance."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and \
            ((d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)):
        return True

    def on_segment(a, b, c, d):
        return abs(d) <= tol and min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol \
            and min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol

    return (on_segment(q1, q2, p1, d1) or on_segment(q1, q2, p2, d2)
            or on_segment(p1, p2, q1, d3) or on_segment(p1, p2, q2, d4))


class PolygonalMesh:
    """
    Immutable polygonal mesh.

    Elements are ccw vertex-index cycles. Edges are unique undirected vertex
    pairs, numbered in order of first appearance while walking the elements;
    edge k of element i joins its local vertices k and k+1.
    """

    def __init__(self, vertices: np.ndarray, elements: Sequence[Sequence[int]], validate: bool = True):
        """
        Initialize mesh and derive the edge structure.

        Args:
            vertices: (nv, 2) coordinates
            elements: Vertex-index cycles
            validate: Run the topology checks

        Raises:
            TopologyError: If an invariant fails (with validate=True)
        """
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        self.vertices.setflags(write=False)
        self.elements: List[Tuple[int, ...]] = [tuple(int(v) for v in cycle) for cycle in elements]

        self._check_cycles()
        self._build_edges()
        self._geometry: List[Optional[ElementGeometry]] = [None] * len(self.elements)

        if validate:
            self.validate()

    # ------------------------------------------------------------------ build

    def _check_cycles(self):
        nv = len(self.vertices)
        for k, cycle in enumerate(self.elements):
            if len(cycle) < 3:
                raise TopologyError(f"Element {k} has fewer than 3 vertices")
            if len(set(cycle)) != len(cycle):
                raise TopologyError(f"Element {k} repeats a vertex index: {cycle}")
            if min(cycle) < 0 or max(cycle) >= nv:
                raise TopologyError(f"Element {k} references a vertex outside 0..{nv - 1}")

    def _build_edges(self):
        edge_index: Dict[Tuple[int, int], int] = {}
        edges: List[Tuple[int, int]] = []
        adjacency: List[List[int]] = []
        directions: List[List[int]] = []
        self.element_edges: List[np.ndarray] = []

        for k, cycle in enumerate(self.elements):
            n = len(cycle)
            local = np.empty(n, dtype=np.int64)
            for i in range(n):
                a, b = cycle[i], cycle[(i + 1) % n]
                key = (a, b) if a < b else (b, a)
                idx = edge_index.get(key)
                if idx is None:
                    idx = len(edges)
                    edge_index[key] = idx
                    edges.append(key)
                    adjacency.append([])
                    directions.append([])
                adjacency[idx].append(k)
                directions[idx].append(1 if a < b else -1)
                local[i] = idx
            self.element_edges.append(local)

        for idx, adj in enumerate(adjacency):
            if len(adj) > 2:
                raise TopologyError(f"Edge {edges[idx]} is shared by {len(adj)} elements")
            if len(adj) == 2 and directions[idx][0] == directions[idx][1]:
                raise TopologyError(f"Edge {edges[idx]} is traversed in the same direction by "
                                    f"elements {adj[0]} and {adj[1]}")

        self.edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_elements = np.full((len(edges), 2), -1, dtype=np.int64)
        for idx, adj in enumerate(adjacency):
            self.edge_elements[idx, :len(adj)] = adj
        self.boundary = self.edge_elements[:, 1] < 0
        self._edge_index = edge_index

    # ---------------------------------------------------------------- queries

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_id(self, a: int, b: int) -> int:
        """Index of the edge joining vertices a and b."""
        key = (a, b) if a < b else (b, a)
        if key not in self._edge_index:
            raise KeyError(f"No edge between vertices {a} and {b}")
        return self._edge_index[key]

    def element_points(self, k: int) -> np.ndarray:
        return self.vertices[list(self.elements[k])]

    def geometry(self, k: int) -> ElementGeometry:
        """Cached ElementGeometry of element k."""
        geom = self._geometry[k]
        if geom is None:
            geom = compute_geometry(self.element_points(k))
            self._geometry[k] = geom
        return geom

    def areas(self) -> np.ndarray:
        return np.array([self.geometry(k).area for k in range(self.n_elements)])

    def total_area(self) -> float:
        return float(self.areas().sum())

    def max_diameter(self) -> float:
        return max(self.geometry(k).diameter for k in range(self.n_elements))

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.edges[self.boundary].ravel())

    def bounding_box(self) -> Tuple[float, float, float, float]:
        x0, y0 = self.vertices.min(axis=0)
        x1, y1 = self.vertices.max(axis=0)
        return float(x0), float(x1), float(y0), float(y1)

    def same_connectivity(self, other: 'PolygonalMesh') -> bool:
        return self.n_vertices == other.n_vertices and self.elements == other.elements

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolygonalMesh):
            return NotImplemented
        return self.same_connectivity(other) and np.array_equal(self.vertices, other.vertices)

    def __repr__(self) -> str:
        return f"PolygonalMesh(nv={self.n_vertices}, ne={self.n_elements}, edges={self.n_edges})"

    # ------------------------------------------------------------- invariants

    def validate(self):
        """
        Check orientation and simplicity of every element.

        Raises:
            TopologyError: If an element is clockwise, degenerate or self-intersecting
        """
        for k in range(self.n_elements):
            pts = self.element_points(k)
            area = polygon_signed_area(pts)
            if not area > 0.0:
                raise TopologyError(f"Element {k} has non-positive signed area {area:.3e} (not ccw)")

            n = len(pts)
            if n <= 3:
                continue
            tol = 1e-14 * max(1.0, float(np.abs(pts).max())) ** 2
            for i in range(n):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    if _segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n], tol):
                        raise TopologyError(f"Element {k} is not simple (edges {i} and {j} intersect)")

    def check_tiling(self, domain_area: float = 1.0, rtol: float = 1e-10):
        """
        Check that the elements cover a domain of the given area.

        Raises:
            TopologyError: If the total area differs by more than rtol (relative)
        """
        total = self.total_area()
        if abs(total - domain_area) > rtol * domain_area:
            raise TopologyError(f"Total element area {total:.15g} differs from domain area {domain_area:.15g}")


def element_geometry(mesh: PolygonalMesh, element_index: int) -> ElementGeometry:
    """
    Per-element geometry (centroid, area, diameter, edge data).

    Args:
        mesh: Mesh
        element_index: Element number

    Returns:
        ElementGeometry of the element
    """
    if not 0 <= element_index < mesh.n_elements:
        raise InvalidArgumentError(f"Element index {element_index} out of range 0..{mesh.n_elements - 1}")
    return mesh.geometry(element_index)


# ------------------------------------------------------------------ generators


def _lattice(n: int) -> np.ndarray:
    t = np.arange(n + 1) / n
    X, Y = np.meshgrid(t, t, indexing='xy')
    return np.column_stack([X.ravel(), Y.ravel()])


def generate_uniform_triangulation(n: int) -> PolygonalMesh:
    """
    Uniform right-triangle mesh of the unit square.

    Each of the n x n cells is split along its (i, j)-(i+1, j+1) diagonal.

    Args:
        n: Subdivisions per side

    Returns:
        Mesh with 2n^2 triangles
    """
    if n < 1:
        raise InvalidArgumentError(f"Subdivisions must be >= 1, got {n}")

    def vid(i, j):
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            elements.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            elements.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))

    mesh = PolygonalMesh(_lattice(n), elements)
    mesh.check_tiling(1.0)
    logger.debug(f"Generated uniform triangulation n={n}: {mesh}")
    return mesh


def generate_structured_quads(n: int) -> PolygonalMesh:
    """
    Structured mesh of n x n axis-aligned squares on the unit square.

    Args:
        n: Subdivisions per side

    Returns:
        Mesh with n^2 squares
    """
    if n < 1:
        raise InvalidArgumentError(f"Subdivisions must be >= 1, got {n}")

    def vid(i, j):
        return j * (n + 1) + i

    elements = [(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
                for j in range(n) for i in range(n)]

    mesh = PolygonalMesh(_lattice(n), elements)
    mesh.check_tiling(1.0)
    logger.debug(f"Generated structured quads n={n}: {mesh}")
    return mesh


def _clip_half_plane(poly: np.ndarray, normal: np.ndarray, offset: float, eps: float) -> np.ndarray:
    """Sutherland-Hodgman clip keeping {x : normal . x <= offset}."""
    d = poly @ normal - offset
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        dp, dq = d[i], d[j]
        if dp <= eps:
            out.append(poly[i])
        if (dp < -eps and dq > eps) or (dp > eps and dq < -eps):
            t = dp / (dp - dq)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out).reshape(-1, 2)


def _voronoi_cells(seeds: np.ndarray, tree: cKDTree) -> List[np.ndarray]:
    """Voronoi cells of the seeds clipped to the unit square."""
    n = len(seeds)
    k_near = min(n, 24)
    cells = []
    for i in range(n):
        cell = UNIT_SQUARE.copy()
        si = seeds[i]
        k = k_near
        done = False
        start = 1
        while not done:
            dist, idx = tree.query(si, k=k)
            dist = np.atleast_1d(dist)
            idx = np.atleast_1d(idx)
            for d, j in zip(dist[start:], idx[start:]):
                if j == i:
                    continue
                # Security radius: the bisector cannot cut the cell any more
                radius = np.sqrt(((cell - si) ** 2).sum(axis=1)).max()
                if d > 2.0 * radius:
                    done = True
                    break
                normal = seeds[j] - si
                cell = _clip_half_plane(cell, normal, float(normal @ (0.5 * (si + seeds[j]))), 1e-14)
            if k >= n:
                done = True
            start = k
            k = min(n, 2 * k)
        cells.append(cell)
    return cells


def _check_seed_separation(seeds: np.ndarray, tol: float = 1e-12):
    tree = cKDTree(seeds)
    dist, idx = tree.query(seeds, k=2)
    bad = np.nonzero(dist[:, 1] < tol)[0]
    if len(bad):
        i = int(bad[0])
        raise MeshGenerationError(f"Seeds {i} and {int(idx[i, 1])} collide "
                                  f"(distance {dist[i, 1]:.3e}) at {seeds[i].tolist()}")
    return tree


def _merge_cells(cells: List[np.ndarray], tol: float) -> Tuple[np.ndarray, List[List[int]]]:
    """Merge coincident cell vertices into one shared vertex list."""
    points = np.vstack(cells)
    owner = np.arange(len(points))

    def find(a):
        while owner[a] != a:
            owner[a] = owner[owner[a]]
            a = owner[a]
        return a

    for a, b in sorted(cKDTree(points).query_pairs(tol)):
        ra, rb = find(a), find(b)
        if ra != rb:
            owner[max(ra, rb)] = min(ra, rb)

    new_index: Dict[int, int] = {}
    vertices = []
    elements = []
    offset = 0
    for cell in cells:
        cycle = []
        for local in range(len(cell)):
            root = find(offset + local)
            if root not in new_index:
                new_index[root] = len(vertices)
                vertices.append(points[root])
            vid = new_index[root]
            if not cycle or cycle[-1] != vid:
                cycle.append(vid)
        while len(cycle) > 1 and cycle[0] == cycle[-1]:
            cycle.pop()
        elements.append(cycle)
        offset += len(cell)
    return np.array(vertices), elements


def generate_voronoi(n_seeds: int, lloyd_iters: int = 100, rng_seed: int = 0,
                     seeds: Optional[np.ndarray] = None) -> PolygonalMesh:
    """
    Centroidal Voronoi mesh of the unit square by Lloyd relaxation.

    Args:
        n_seeds: Number of cells
        lloyd_iters: Lloyd iterations (seeds moved to cell centroids)
        rng_seed: Seed of the uniform random initial seeds
        seeds: Explicit initial seeds, overriding the random draw

    Returns:
        Mesh with n_seeds convex polygons, element k belonging to seed k

    Raises:
        InvalidArgumentError: If n_seeds < 2
        MeshGenerationError: If seeds collide or a cell degenerates
    """
    if n_seeds < 2:
        raise InvalidArgumentError(f"Voronoi mesh needs at least 2 seeds, got {n_seeds}")
    if seeds is None:
        seeds = np.random.default_rng(rng_seed).random((n_seeds, 2))
    else:
        seeds = np.array(seeds, dtype=float).reshape(-1, 2)
        if len(seeds) != n_seeds:
            raise InvalidArgumentError(f"Expected {n_seeds} seeds, got {len(seeds)}")

    tree = _check_seed_separation(seeds)
    cells = _voronoi_cells(seeds, tree)
    for it in range(lloyd_iters):
        seeds = np.array([polygon_centroid(cell) for cell in cells])
        tree = _check_seed_separation(seeds)
        cells = _voronoi_cells(seeds, tree)

    for i, cell in enumerate(cells):
        if len(cell) < 3 or polygon_signed_area(cell) <= 0.0:
            raise MeshGenerationError(f"Voronoi cell {i} degenerated (seed {seeds[i].tolist()})")

    vertices, elements = _merge_cells(cells, tol=1e-10)
    for i, cycle in enumerate(elements):
        if len(cycle) < 3:
            raise MeshGenerationError(f"Voronoi cell {i} collapsed after vertex merging")

    try:
        mesh = PolygonalMesh(vertices, elements)
        mesh.check_tiling(1.0)
    except Exception as e:
        raise MeshGenerationError(f"Voronoi mesh with {n_seeds} seeds is invalid: {e}") from e

    logger.debug(f"Generated Voronoi mesh: n_seeds={n_seeds}, lloyd_iters={lloyd_iters}, "
                 f"rng_seed={rng_seed}: {mesh}")
    return mesh


def distort(mesh: PolygonalMesh, t_c: float) -> PolygonalMesh:
    """
    Sinusoidal vertex distortion of a unit-square mesh.

    (xi, eta) -> (xi + t_c sin(2 pi xi) sin(2 pi eta), eta + t_c sin(2 pi xi) sin(2 pi eta))

    Args:
        mesh: Mesh of the unit square
        t_c: Distortion parameter

    Returns:
        Mesh with moved vertices and identical connectivity

    Raises:
        DistortionError: If an element inverts
    """
    xi, eta = mesh.vertices[:, 0], mesh.vertices[:, 1]
    shift = t_c * np.sin(2.0 * np.pi * xi) * np.sin(2.0 * np.pi * eta)
    # sin(2 pi) is not exactly zero in floating point; keep the square's sides fixed
    on_side = (np.isclose(xi, 0.0, atol=1e-14) | np.isclose(xi, 1.0, atol=1e-14)
               | np.isclose(eta, 0.0, atol=1e-14) | np.isclose(eta, 1.0, atol=1e-14))
    shift = np.where(on_side, 0.0, shift)
    vertices = np.column_stack([xi + shift, eta + shift])

    for k, cycle in enumerate(mesh.elements):
        area = polygon_signed_area(vertices[list(cycle)])
        if area <= 0.0:
            raise DistortionError(f"Element {k} inverted by distortion t_c={t_c} (area {area:.3e})")

    try:
        return PolygonalMesh(vertices, mesh.elements)
    except TopologyError as e:
        raise DistortionError(f"Distortion t_c={t_c} produced an invalid mesh: {e}") from e
