"""Single-solve CLI runner - one mesh, one lambda, solution and error files."""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .analysis import compute_errors, projected_nodal_values
from .exceptions import EXIT_INVALID_ARGUMENT, ConfigError, PolyVemError, exit_code_for
from .mesh_io import load_mesh
from .mesh_refine import refine
from .study_config import StudyConfig
from .study_engine import ConvergenceStudy
from .system import assemble, constraint_residuals, solve
from .utils import ensure_dir, get_study_config, load_config, setup_logging


def parse_args(argv: Optional[List[str]] = None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog='polyvem solve',
        description='Solve one elasticity problem and write the solution, projections and errors'
    )
    parser.add_argument('--config', type=str, default='config.yaml',
                        help='Path to config file (default: config.yaml)')
    parser.add_argument('--study', type=str, default=None,
                        help='Preset to take settings from (default: default_study from config)')
    parser.add_argument('--size', type=int, default=None,
                        help='Mesh size (default: size, else first of sizes)')
    parser.add_argument('--lambda', dest='lam', type=float, default=None,
                        help='Lame lambda (default: lambda, else first of lambdas)')
    parser.add_argument('--mesh', type=str, default=None,
                        help='Coarse .vmesh file instead of a generated mesh')
    parser.add_argument('--out', type=str, default=None,
                        help='Output directory (default: <output_dir>/solve)')
    return parser.parse_args(argv)


def _first(config: Dict[str, Any], single: str, plural: str):
    if config.get(single) is not None:
        return config[single]
    values = config.get(plural)
    if values:
        return values[0]
    raise ConfigError(f"Missing required config key '{single}' (or '{plural}')", key=single)


def run_solve(config: Dict[str, Any], mesh_file: Optional[str] = None,
              output_dir: Optional[str] = None) -> Dict[str, Any]:
    """
    Solve one problem described by a merged config dict.

    Args:
        config: Settings (example, space, scheme, refine_type, mesh_family, size/lambda ...)
        mesh_file: Coarse mesh file overriding the generated mesh
        output_dir: Where to write the output files

    Returns:
        Dict with 'result', 'errors' (or None), 'system', 'files'
    """
    settings = dict(config)
    lam = float(_first(settings, 'lambda', 'lambdas'))
    settings['lambdas'] = [lam]
    if mesh_file is None:
        settings['sizes'] = [int(_first(settings, 'size', 'sizes'))]
    else:
        settings.setdefault('mesh_family', 'tri')
        settings['sizes'] = [1]
    study_config = StudyConfig.from_dict(settings)
    study = ConvergenceStudy(study_config, threads=1)

    if mesh_file is not None:
        hierarchy = refine(load_mesh(mesh_file), study_config.refine_type)
    else:
        hierarchy = study.build_hierarchy(study_config.sizes[0])

    dofmap, projections, operators = study.discretize(hierarchy)
    problem = study.problem(lam)
    system = assemble(hierarchy, problem, study.space, study_config.scheme, dofmap, operators)
    result = solve(system)
    errors = compute_errors(hierarchy, dofmap, result, problem, projections) if problem.has_exact else None

    out = ensure_dir(output_dir or str(Path(study_config.output_dir) / 'solve'))
    files = {}

    sites = np.arange(dofmap.N) % dofmap.n_sites
    components = np.arange(dofmap.N) // dofmap.n_sites + 1
    files['solution'] = out / 'solution.csv'
    pd.DataFrame({'dof': np.arange(dofmap.N), 'site': sites, 'component': components,
                  'value': result.chi}).to_csv(files['solution'], index=False, float_format='%.17g')

    files['multipliers'] = out / 'multipliers.csv'
    pd.DataFrame({'index': np.arange(1, len(result.beta) + 1), 'beta': result.beta}) \
        .to_csv(files['multipliers'], index=False, float_format='%.17g')

    files['nodal'] = out / 'nodal.csv'
    projected_nodal_values(hierarchy, dofmap, result.chi, projections) \
        .to_csv(files['nodal'], index=False, float_format='%.9g')

    if errors is not None:
        files['errors'] = out / 'errors.csv'
        pd.DataFrame([{
            'example': problem.name, 'formulation': problem.formulation.value,
            'space': study.space.value, 'scheme': study_config.scheme,
            'refine_type': study_config.refine_type, 'lambda': lam,
            'n': study_config.sizes[0], 'h': errors.h, 'ndof': errors.ndof,
            'errL2': errors.err_l2, 'errH1': errors.err_h1,
            'residual': result.residual,
            'constraint_residual': float(constraint_residuals(system, result.chi).max()) if system.nb else 0.0,
        }]).to_csv(files['errors'], index=False, float_format='%.9g')

    return {'result': result, 'errors': errors, 'system': system, 'files': files}


def main(argv: Optional[List[str]] = None) -> int:
    """Main solve entry point."""
    args = parse_args(argv)

    try:
        base_config = load_config(args.config)
        config = get_study_config(base_config, args.study)
        if args.size is not None:
            config['size'] = args.size
        if args.lam is not None:
            config['lambda'] = args.lam
    except (PolyVemError, OSError) as e:
        print(f"Error loading config: {e}", file=sys.stderr)
        return EXIT_INVALID_ARGUMENT

    logger = setup_logging(config.get('log_level', 'INFO'))

    try:
        outcome = run_solve(config, args.mesh, args.out)
    except ConfigError as e:
        logger.error(f"Config error (key '{e.key}'): {e}")
        return EXIT_INVALID_ARGUMENT
    except (PolyVemError, OSError) as e:
        logger.error(f"Solve failed: {e}", exc_info=True)
        return exit_code_for(e) if isinstance(e, PolyVemError) else EXIT_INVALID_ARGUMENT

    result = outcome['result']
    errors = outcome['errors']
    print(f"Solved: ndof={len(result.chi)}, residual={result.residual:.3e}")
    if errors is not None:
        h1 = 'n/a' if errors.err_h1 is None else f"{errors.err_h1:.6e}"
        print(f"ErrL2 = {errors.err_l2:.6e}")
        print(f"ErrH1 = {h1}")
    for name, path in outcome['files'].items():
        print(f"Saved {name} to {path}")
    return 0


if __name__ == '__main__':
    sys.exit(main())
