"""Mesh regularity audit against the star-shapedness / vertex-distance assumption."""

import logging
from dataclasses import dataclass

import numpy as np

from .mesh import PolygonalMesh

logger = logging.getLogger("polyvem.mesh_quality")


@dataclass(frozen=True)
class QualityReport:
    """Per-element regularity ratios and the pass/fail verdict."""
    star_ratios: np.ndarray
    vertex_ratios: np.ndarray
    gamma1: float
    gamma2: float

    @property
    def min_star_ratio(self) -> float:
        return float(self.star_ratios.min())

    @property
    def min_vertex_ratio(self) -> float:
        return float(self.vertex_ratios.min())

    @property
    def passed(self) -> bool:
        return self.min_star_ratio > self.gamma1 and self.min_vertex_ratio > self.gamma2

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        worst_star = int(np.argmin(self.star_ratios))
        worst_vertex = int(np.argmin(self.vertex_ratios))
        return (f"{verdict} min rho/h={self.min_star_ratio:.6g} (element {worst_star}, gamma1={self.gamma1}) "
                f"min vertex distance/h={self.min_vertex_ratio:.6g} (element {worst_vertex}, gamma2={self.gamma2})")


def star_radius(points: np.ndarray, center: np.ndarray) -> float:
    """
    Radius of the largest disc about center contained in the polygon's kernel.

    Zero when the center is outside the kernel.
    """
    nxt = np.roll(points, -1, axis=0)
    delta = nxt - points
    lengths = np.hypot(delta[:, 0], delta[:, 1])
    # Signed distance of the center to each edge line, positive on the inner side
    dist = (delta[:, 0] * (center[1] - points[:, 1]) - delta[:, 1] * (center[0] - points[:, 0])) / lengths
    return max(0.0, float(dist.min()))


def check_c0(mesh: PolygonalMesh, gamma1: float, gamma2: float) -> QualityReport:
    """
    Audit every element for star-shapedness and vertex separation.

    The star radius is a lower bound: the disc is centred at the centroid
    rather than at the Chebyshev center of the kernel.

    Args:
        mesh: Mesh to audit
        gamma1: Threshold for rho_K / h_K
        gamma2: Threshold for min vertex distance / h_K

    Returns:
        QualityReport
    """
    star = np.empty(mesh.n_elements)
    vertex = np.empty(mesh.n_elements)
    for k in range(mesh.n_elements):
        geom = mesh.geometry(k)
        pts = geom.vertices
        star[k] = star_radius(pts, geom.centroid) / geom.diameter
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff ** 2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        vertex[k] = dist.min() / geom.diameter

    report = QualityReport(star_ratios=star, vertex_ratios=vertex, gamma1=gamma1, gamma2=gamma2)
    logger.info(f"Mesh quality: {report.summary()}")
    return report
