"""Convergence study CLI runner."""

import argparse
import sys
from typing import List, Optional

from .exceptions import EXIT_INVALID_ARGUMENT, EXIT_STUDY_ROW, ConfigError, PolyVemError
from .study_config import StudyConfig
from .study_engine import ConvergenceStudy
from .study_reports import StudyReporter
from .utils import get_study_config, list_available_studies, load_config, setup_logging


def parse_args(argv: Optional[List[str]] = None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog='polyvem study',
        description='Run a convergence study and write table.csv / table.gp'
    )
    parser.add_argument('--config', type=str, default='config.yaml',
                        help='Path to config file (default: config.yaml)')
    parser.add_argument('--study', type=str, default=None,
                        help='Study preset (e.g., ex1_tri_type2, ex2_voronoi_divfree). If not specified, uses default_study')
    parser.add_argument('--lambdas', type=float, nargs='+', default=None,
                        help='Override the lambda list')
    parser.add_argument('--sizes', type=int, nargs='+', default=None,
                        help='Override the mesh size list')
    parser.add_argument('--threads', type=int, default=None,
                        help='Worker threads (default: POLYVEM_THREADS, 0 = auto)')
    parser.add_argument('--out', type=str, default=None,
                        help='Output directory (default: <output_dir>/<study>)')
    parser.add_argument('--list', action='store_true',
                        help='List available study presets and exit')
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """Main study entry point."""
    args = parse_args(argv)

    try:
        base_config = load_config(args.config)
        if args.list:
            for name in list_available_studies(base_config):
                marker = ' (default)' if name == base_config.get('default_study') else ''
                print(f"{name}{marker}")
            return 0

        config = get_study_config(base_config, args.study)
        if args.lambdas is not None:
            config['lambdas'] = args.lambdas
        if args.sizes is not None:
            config['sizes'] = args.sizes
        study_config = StudyConfig.from_dict(config)
    except ConfigError as e:
        print(f"Error in config (key '{e.key}'): {e}", file=sys.stderr)
        return EXIT_INVALID_ARGUMENT
    except (PolyVemError, OSError) as e:
        print(f"Error loading config: {e}", file=sys.stderr)
        return EXIT_INVALID_ARGUMENT

    logger = setup_logging(config.get('log_level', 'INFO'))
    output_dir = args.out or f"{study_config.output_dir}/{study_config.name}"
    logger.info(f"Output directory: {output_dir}")

    study = ConvergenceStudy(study_config, threads=args.threads)
    table = study.run()

    # Partial tables are still written when rows fail
    reporter = StudyReporter(output_dir)
    reporter.generate_reports(table, study_config.name)

    if table.failed:
        logger.error(f"{len(table.failed)} study rows failed")
        return EXIT_STUDY_ROW
    return 0


if __name__ == '__main__':
    sys.exit(main())
