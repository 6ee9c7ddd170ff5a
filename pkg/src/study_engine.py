"""Convergence study engine - builds meshes, solves a lambda-series per mesh, collects errors."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .analysis import ConvergenceTable, compute_errors
from .dofmap import DofMap, Formulation, build_dof_map, sides_selector
from .exceptions import InvalidArgumentError, PolyVemError
from .local_operators import ProjectionData, SpaceKind, project_all
from .mesh import (PolygonalMesh, distort, generate_structured_quads,
                   generate_uniform_triangulation, generate_voronoi)
from .mesh_quality import check_c0
from .mesh_refine import MeshHierarchy, refine
from .problems import DEFAULT_FORMULATION, BuiltinExample, ModelProblem, builtin_problem
from .study_config import StudyConfig
from .system import (GlobalOperators, assemble, assemble_operators, bordered_min_singular_value,
                     constraint_residuals, solve)
from .utils import get_thread_count

logger = logging.getLogger("polyvem.study_engine")


class ConvergenceStudy:
    """Runs one StudyConfig: every (lambda, mesh size) pair becomes a table row."""

    def __init__(self, config: StudyConfig, threads: Optional[int] = None):
        """
        Initialize study.

        Args:
            config: Validated study settings
            threads: Worker threads (POLYVEM_THREADS when omitted or 0)
        """
        self.config = config
        self.threads = threads if threads else get_thread_count()
        self.example = BuiltinExample.parse(config.example)
        self.space = SpaceKind.parse(config.space)
        self.formulation = (Formulation.parse(config.formulation) if config.formulation
                            else DEFAULT_FORMULATION[self.example])
        self.gamma1 = config.extra.get('gamma1', 0.0)
        self.gamma2 = config.extra.get('gamma2', 0.0)

    def build_mesh(self, size: int) -> PolygonalMesh:
        """Coarse mesh of the configured family (distorted when t_c != 0)."""
        family = self.config.mesh_family
        if family == 'tri':
            mesh = generate_uniform_triangulation(size)
        elif family == 'quad':
            mesh = generate_structured_quads(size)
        else:
            mesh = generate_voronoi(size, lloyd_iters=self.config.lloyd_iters, rng_seed=self.config.rng_seed)
        if self.config.t_c:
            mesh = distort(mesh, self.config.t_c)
        return mesh

    def build_hierarchy(self, size: int) -> MeshHierarchy:
        mesh = self.build_mesh(size)
        report = check_c0(mesh, self.gamma1, self.gamma2)
        if not report.passed:
            logger.warning(f"Mesh size {size} fails the regularity check: {report.summary()}")
        return refine(mesh, self.config.refine_type)

    def discretize(self, hierarchy: MeshHierarchy) -> Tuple[DofMap, List[ProjectionData], GlobalOperators]:
        """Dof map, fine projections and lambda-independent operators of one hierarchy."""
        selector = None
        if self.formulation == Formulation.MIXED:
            selector = sides_selector(self.config.dirichlet_sides or ('bottom',))
        dofmap = build_dof_map(hierarchy, self.space, self.formulation, selector)
        projections = project_all(hierarchy.fine, self.space)
        operators = assemble_operators(hierarchy, self.space, self.config.scheme, dofmap, projections)
        return dofmap, projections, operators

    def problem(self, lam: float) -> ModelProblem:
        return builtin_problem(self.example, lam, self.config.mu, self.formulation,
                               self.config.dirichlet_sides, self.space)

    def _base_row(self, size: int, lam: float) -> Dict[str, Any]:
        cfg = self.config
        return {
            'example': self.example.value,
            'formulation': self.formulation.value,
            'space': self.space.value,
            'scheme': cfg.scheme,
            'refine_type': cfg.refine_type,
            'lambda': lam,
            'n': size,
            'h': np.nan,
            'ndof': 0,
            'errL2': np.nan,
            'errH1': np.nan,
            'h_fit': cfg.nominal_h(size),
            'status': 'pending',
            'residual': np.nan,
            'korn_min_sv': np.nan,
            'constraint_residual': np.nan,
        }

    def run_mesh(self, size: int) -> List[Dict[str, Any]]:
        """
        All lambda rows of one mesh size; operators are assembled once and reused.

        A failing stage marks the affected rows failed and the study continues.
        """
        rows = [self._base_row(size, lam) for lam in self.config.lambdas]
        start = time.time()
        try:
            hierarchy = self.build_hierarchy(size)
            dofmap, projections, operators = self.discretize(hierarchy)
        except (PolyVemError, np.linalg.LinAlgError) as e:
            logger.error(f"Mesh size {size}: setup failed: {e}", exc_info=True)
            for row in rows:
                row['status'] = f"failed: {e}"
            return rows

        for row in rows:
            lam = row['lambda']
            row['h'] = hierarchy.h
            row['ndof'] = dofmap.N
            if self.config.rate_h == 'diameter':
                row['h_fit'] = hierarchy.h
            try:
                problem = self.problem(lam)
                system = assemble(hierarchy, problem, self.space, self.config.scheme, dofmap, operators)
                result = solve(system)
                errors = compute_errors(hierarchy, dofmap, result, problem, projections)
            except (PolyVemError, np.linalg.LinAlgError) as e:
                logger.warning(f"Row n={size} lambda={lam:g} failed: {e}")
                row['status'] = f"failed: {e}"
                continue

            row['errL2'] = errors.err_l2
            row['errH1'] = errors.err_h1 if errors.has_h1 else np.nan
            row['residual'] = result.residual
            row['status'] = 'ok'

            if system.nb:
                row['constraint_residual'] = float(constraint_residuals(system, result.chi).max())
                if system.N + system.nb <= self.config.korn_check_max_dofs:
                    try:
                        row['korn_min_sv'] = bordered_min_singular_value(system, relative=True,
                                                                         limit=self.config.korn_check_max_dofs)
                    except InvalidArgumentError as e:
                        logger.debug(f"Korn diagnostic skipped: {e}")

            logger.info(f"n={size} lambda={lam:g}: ndof={dofmap.N} errL2={errors.err_l2:.4e} "
                        f"errH1={row['errH1']:.4e} residual={result.residual:.1e}")

        logger.info(f"Mesh size {size} done in {time.time() - start:.1f}s")
        return rows

    def run(self) -> ConvergenceTable:
        """
        Run all rows; the table is ordered lambda-major, then by mesh size, as configured.

        Returns:
            ConvergenceTable
        """
        cfg = self.config
        logger.info(f"Study '{cfg.name}': {self.example.value} {self.formulation.value} {self.space.value} "
                    f"{cfg.scheme} type{cfg.refine_type} {cfg.mesh_family} sizes={list(cfg.sizes)} "
                    f"lambdas={list(cfg.lambdas)} threads={self.threads}")

        workers = max(1, min(self.threads, len(cfg.sizes)))
        if workers == 1:
            per_mesh = [self.run_mesh(size) for size in cfg.sizes]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_mesh = list(pool.map(self.run_mesh, cfg.sizes))

        table = ConvergenceTable()
        for i in range(len(cfg.lambdas)):
            for rows in per_mesh:
                table.add(rows[i])

        for lam, rates in table.rates().items():
            l2 = rates['rateL2']
            h1 = rates['rateH1']
            logger.info(f"lambda={lam:g}: rateL2={'n/a' if l2 is None else f'{l2:.2f}'} "
                        f"rateH1={'n/a' if h1 is None else f'{h1:.2f}'}")
        if table.failed:
            logger.warning(f"{len(table.failed)} of {len(table.rows)} rows failed")
        return table
