"""Quadrature rules on edges, polygons and rectangles."""

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

# Degree-4 symmetric six-point rule on the reference triangle (barycentric, weights sum to 1)
_TRI_A1, _TRI_B1 = 0.108103018168070, 0.445948490915965
_TRI_A2, _TRI_B2 = 0.816847572980459, 0.091576213509771
_TRI_W1, _TRI_W2 = 0.223381589678011, 0.109951743655322

TRIANGLE_BARY = np.array([
    [_TRI_A1, _TRI_B1, _TRI_B1],
    [_TRI_B1, _TRI_A1, _TRI_B1],
    [_TRI_B1, _TRI_B1, _TRI_A1],
    [_TRI_A2, _TRI_B2, _TRI_B2],
    [_TRI_B2, _TRI_A2, _TRI_B2],
    [_TRI_B2, _TRI_B2, _TRI_A2],
])
TRIANGLE_WEIGHTS = np.array([_TRI_W1] * 3 + [_TRI_W2] * 3)


@lru_cache(maxsize=16)
def gauss_legendre_unit(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule mapped to [0, 1].

    Args:
        n: Number of points (exact for degree 2n-1)

    Returns:
        Tuple of (nodes, weights); weights sum to 1
    """
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def edge_quadrature(a: np.ndarray, b: np.ndarray, n: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss points and length-scaled weights on the segment a-b."""
    t, w = gauss_legendre_unit(n)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    points = a[None, :] + t[:, None] * (b - a)[None, :]
    return points, w * np.linalg.norm(b - a)


def polygon_quadrature(vertices: np.ndarray, center: np.ndarray = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Degree-4 quadrature on a polygon by fan triangulation about a center point.

    The center must lie in the star kernel of the polygon (the centroid does for
    convex and C0-regular elements).

    Args:
        vertices: (n, 2) ccw vertex coordinates
        center: Fan apex, defaults to the vertex mean

    Returns:
        Tuple of (points (6n, 2), weights (6n,))
    """
    vertices = np.asarray(vertices, dtype=float)
    if center is None:
        center = vertices.mean(axis=0)
    nxt = np.roll(vertices, -1, axis=0)

    # Signed areas of the fan triangles (center, v_k, v_{k+1})
    areas = 0.5 * ((vertices[:, 0] - center[0]) * (nxt[:, 1] - center[1])
                   - (nxt[:, 0] - center[0]) * (vertices[:, 1] - center[1]))

    # points[k, q] = b0 * center + b1 * v_k + b2 * v_{k+1}
    b = TRIANGLE_BARY
    points = (b[None, :, 0, None] * center[None, None, :]
              + b[None, :, 1, None] * vertices[:, None, :]
              + b[None, :, 2, None] * nxt[:, None, :])
    weights = areas[:, None] * TRIANGLE_WEIGHTS[None, :]
    return points.reshape(-1, 2), weights.reshape(-1)


def integrate_polygon(func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      vertices: np.ndarray, center: np.ndarray = None) -> np.ndarray:
    """
    Integrate a vectorised field over a polygon.

    Args:
        func: f(x, y) returning (m,) or (m, k) values at m points
        vertices: (n, 2) ccw vertex coordinates
        center: Fan apex (see polygon_quadrature)

    Returns:
        Scalar or (k,) integral
    """
    points, weights = polygon_quadrature(vertices, center)
    values = np.asarray(func(points[:, 0], points[:, 1]), dtype=float)
    return np.tensordot(weights, values, axes=(0, 0))


def rectangle_quadrature(x0: float, x1: float, y0: float, y1: float,
                         panels: int = 16, order: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite tensor-product Gauss rule on a rectangle.

    Args:
        x0, x1, y0, y1: Rectangle bounds
        panels: Panels per direction
        order: Gauss points per panel and direction (degree 2*order-1)

    Returns:
        Tuple of (points, weights)
    """
    t, w = gauss_legendre_unit(order)
    edges_x = np.linspace(x0, x1, panels + 1)
    edges_y = np.linspace(y0, y1, panels + 1)
    hx = np.diff(edges_x)
    hy = np.diff(edges_y)

    xs = (edges_x[:-1, None] + t[None, :] * hx[:, None]).ravel()
    wx = (w[None, :] * hx[:, None]).ravel()
    ys = (edges_y[:-1, None] + t[None, :] * hy[:, None]).ravel()
    wy = (w[None, :] * hy[:, None]).ravel()

    X, Y = np.meshgrid(xs, ys, indexing='ij')
    W = np.outer(wx, wy)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def integrate_segment(func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      a: np.ndarray, b: np.ndarray, n: int = 3, panels: int = 1) -> np.ndarray:
    """Composite Gauss integral of a vectorised field along the segment a-b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = 0.0
    for k in range(panels):
        pa = a + (b - a) * (k / panels)
        pb = a + (b - a) * ((k + 1) / panels)
        points, weights = edge_quadrature(pa, pb, n)
        values = np.asarray(func(points[:, 0], points[:, 1]), dtype=float)
        total = total + np.tensordot(weights, values, axes=(0, 0))
    return total
