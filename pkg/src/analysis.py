"""Discrete error norms, convergence-rate fitting and convergence tables."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .dofmap import DofMap
from .exceptions import InvalidArgumentError
from .local_operators import ProjectionData, project_all
from .mesh_refine import MeshHierarchy
from .problems import ModelProblem
from .quadrature import polygon_quadrature
from .system import SolveResult

logger = logging.getLogger("polyvem.analysis")

CSV_COLUMNS = ['example', 'formulation', 'space', 'scheme', 'refine_type', 'lambda',
               'n', 'h', 'ndof', 'errL2', 'errH1', 'rateL2', 'rateH1']


@dataclass(frozen=True)
class ErrorReport:
    """Errors of Pi u_h against the (adjusted) exact solution."""
    h: float
    ndof: int
    err_l2: float
    err_h1: Optional[float]

    @property
    def has_h1(self) -> bool:
        return self.err_h1 is not None


def _element_projection(P: ProjectionData, chi: np.ndarray, dofs: np.ndarray) -> np.ndarray:
    """(3, 2) monomial coefficients of Pi u_h on one element, one column per component."""
    return P.pi_coeff @ chi[dofs].reshape(2, -1).T


def compute_errors(hierarchy: MeshHierarchy, dofmap: DofMap, result: SolveResult,
                   problem: ModelProblem,
                   projections: Optional[List[ProjectionData]] = None) -> ErrorReport:
    """
    L2 and broken H1 errors of the elementwise projection of u_h.

    Args:
        hierarchy: Mesh hierarchy
        dofmap: Dof layout
        result: Solve result
        problem: Problem with an exact solution
        projections: Fine-element projections (computed when omitted)

    Returns:
        ErrorReport (err_h1 is None without an exact gradient)
    """
    if not problem.has_exact:
        raise InvalidArgumentError(f"Problem '{problem.name}' has no exact solution; errors unavailable")
    fine = hierarchy.fine
    if projections is None:
        projections = project_all(fine, dofmap.space)
    with_h1 = problem.exact_gradient is not None
    if not with_h1:
        logger.warning(f"Problem '{problem.name}' has no exact gradient; ErrH1 unavailable")

    l2 = 0.0
    h1 = 0.0
    for k in range(fine.n_elements):
        geom = fine.geometry(k)
        P = projections[k]
        coeff = _element_projection(P, result.chi, dofmap.element_dofs(k))
        points, weights = polygon_quadrature(geom.vertices, geom.centroid)
        x, y = points[:, 0], points[:, 1]

        diff = problem.reference_solution(x, y) - P.evaluate(coeff, points)
        l2 += float(weights @ (diff ** 2).sum(axis=1))
        if with_h1:
            grad_h = P.gradient(coeff).T
            gdiff = problem.reference_gradient(x, y) - grad_h[None, :, :]
            h1 += float(weights @ (gdiff ** 2).sum(axis=(1, 2)))

    return ErrorReport(h=hierarchy.h, ndof=dofmap.N, err_l2=float(np.sqrt(l2)),
                       err_h1=float(np.sqrt(h1)) if with_h1 else None)


def projected_nodal_values(hierarchy: MeshHierarchy, dofmap: DofMap, chi: np.ndarray,
                           projections: Optional[List[ProjectionData]] = None) -> pd.DataFrame:
    """Values of Pi u_h at the vertices of every fine element."""
    fine = hierarchy.fine
    if projections is None:
        projections = project_all(fine, dofmap.space)
    frames = []
    for k in range(fine.n_elements):
        P = projections[k]
        pts = fine.element_points(k)
        values = P.evaluate(_element_projection(P, chi, dofmap.element_dofs(k)), pts)
        frames.append(pd.DataFrame({
            'element': k,
            'vertex': list(fine.elements[k]),
            'x': pts[:, 0],
            'y': pts[:, 1],
            'u1': values[:, 0],
            'u2': values[:, 1],
        }))
    return pd.concat(frames, ignore_index=True)


def fit_rate(series: Sequence[Tuple[float, float]]) -> float:
    """
    Least-squares exponent alpha of err = c h^alpha.

    Args:
        series: (h, err) pairs

    Returns:
        Fitted alpha

    Raises:
        InvalidArgumentError: Fewer than two points or a nonpositive entry
    """
    data = np.asarray(series, dtype=float).reshape(-1, 2)
    if len(data) < 2:
        raise InvalidArgumentError(f"Rate fit needs at least 2 points, got {len(data)}")
    if np.any(~np.isfinite(data)) or np.any(data <= 0.0):
        raise InvalidArgumentError(f"Rate fit needs positive h and errors, got {data.tolist()}")
    if np.ptp(np.log(data[:, 0])) == 0.0:
        raise InvalidArgumentError("Rate fit needs at least two distinct mesh sizes")
    slope, _ = np.polyfit(np.log(data[:, 0]), np.log(data[:, 1]), 1)
    return float(slope)


@dataclass
class ConvergenceTable:
    """
    Rows of a convergence study and the per-lambda fitted rates.

    Each row is a dict carrying the CSV columns plus 'h_fit' (the size used
    for rate fitting), 'status' and solver diagnostics.
    """
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, row: Dict[str, Any]):
        self.rows.append(row)

    def lambdas(self) -> List[float]:
        seen = []
        for row in self.rows:
            if row['lambda'] not in seen:
                seen.append(row['lambda'])
        return seen

    def series(self, lam: float, column: str) -> List[Tuple[float, float]]:
        return [(row['h_fit'], row[column]) for row in self.rows
                if row['lambda'] == lam and row.get('status') == 'ok'
                and row.get(column) is not None and np.isfinite(row[column])]

    def rates(self) -> Dict[float, Dict[str, Optional[float]]]:
        """alpha_L2 and alpha_H1 per lambda (None when fewer than two successful rows)."""
        out = {}
        for lam in self.lambdas():
            out[lam] = {}
            for column, key in (('errL2', 'rateL2'), ('errH1', 'rateH1')):
                series = self.series(lam, column)
                try:
                    out[lam][key] = fit_rate(series) if len(series) >= 2 else None
                except InvalidArgumentError as e:
                    logger.warning(f"No {key} for lambda={lam:g}: {e}")
                    out[lam][key] = None
        return out

    @property
    def failed(self) -> List[Dict[str, Any]]:
        return [row for row in self.rows if row.get('status') != 'ok']

    def to_frame(self) -> pd.DataFrame:
        """Table in the CSV schema; rates repeated on every row of a lambda-series."""
        rates = self.rates()
        records = []
        for row in self.rows:
            record = {col: row.get(col) for col in CSV_COLUMNS}
            record.update(rates.get(row['lambda'], {}))
            records.append(record)
        frame = pd.DataFrame(records, columns=CSV_COLUMNS)
        return frame

    def diagnostics_frame(self) -> pd.DataFrame:
        columns = ['lambda', 'n', 'ndof', 'status', 'residual', 'korn_min_sv', 'constraint_residual']
        return pd.DataFrame([{col: row.get(col) for col in columns} for row in self.rows], columns=columns)

    def lambda_spread(self, column: str = 'errL2', lambdas: Optional[Sequence[float]] = None) -> float:
        """Largest relative spread (max - min) / min of a column across lambda, over mesh sizes."""
        chosen = set(lambdas) if lambdas is not None else set(self.lambdas())
        spread = 0.0
        for n in sorted({row['n'] for row in self.rows}):
            values = [row[column] for row in self.rows
                      if row['n'] == n and row['lambda'] in chosen and row.get('status') == 'ok']
            if len(values) >= 2:
                spread = max(spread, (max(values) - min(values)) / min(values))
        return spread
