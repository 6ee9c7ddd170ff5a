#!/usr/bin/env python3
"""
Scheme Comparison Script: ReducedRot vs UnifiedReduced

Runs the same convergence study with both treatments of the lambda term
(div per fine element vs div per coarse element) on identical meshes,
then displays a side-by-side comparison of errors and fitted rates.

Usage:
    python3 compare_schemes.py --study ex1_voronoi_unified
    python3 compare_schemes.py --study ex1_tri_type2 --lambdas 1 1e8
    python3 compare_schemes.py --study ex1_voronoi_unified --sizes 32 64 128 --output compare.txt
"""

import argparse
import sys

import numpy as np

from src.exceptions import PolyVemError
from src.local_operators import SchemeKind
from src.study_config import StudyConfig
from src.study_engine import ConvergenceStudy
from src.utils import get_study_config, load_config, setup_logging


def run_single_study(study_config, scheme, threads=None):
    """
    Run one study with the given scheme.

    Args:
        study_config: Base StudyConfig
        scheme: SchemeKind to use
        threads: Worker threads

    Returns:
        ConvergenceTable
    """
    config = study_config.with_overrides(scheme=scheme.value)
    return ConvergenceStudy(config, threads=threads).run()


def format_error(value):
    if value is None or not np.isfinite(value):
        return "failed".rjust(14)
    return f"{value:.4e}".rjust(14)


def format_ratio(val1, val2):
    """val2 / val1, the error growth of the second scheme relative to the first."""
    if val1 is None or val2 is None or not np.isfinite(val1) or not np.isfinite(val2) or val1 == 0:
        return "N/A".rjust(12)
    return f"{val2 / val1:.3f}x".rjust(12)


def format_rate(value):
    return "n/a".rjust(14) if value is None else f"{value:.2f}".rjust(14)


def print_comparison(reduced, unified, output_file=None):
    """
    Print side-by-side errors and rates of two tables of the same study.

    Args:
        reduced: ConvergenceTable for ReducedRot
        unified: ConvergenceTable for UnifiedReduced
        output_file: Optional file path to save output
    """
    lines = []

    def add_line(text):
        lines.append(text)
        print(text)

    add_line("=" * 90)
    add_line("SCHEME COMPARISON: ReducedRot vs UnifiedReduced")
    add_line("=" * 90)
    add_line("")

    unified_rows = {(row['lambda'], row['n']): row for row in unified.rows}
    reduced_rates = reduced.rates()
    unified_rates = unified.rates()

    for lam in reduced.lambdas():
        add_line(f"lambda = {lam:g}")
        add_line(f"{'n':>6} {'ndof':>8} {'ErrL2 Reduced':>14} {'ErrL2 Unified':>14} {'Ratio':>12} "
                 f"{'ErrH1 Reduced':>14} {'ErrH1 Unified':>14}")
        add_line("-" * 90)
        for row in reduced.rows:
            if row['lambda'] != lam:
                continue
            other = unified_rows.get((lam, row['n']), {})
            add_line(f"{row['n']:>6} {row['ndof']:>8} {format_error(row.get('errL2'))} "
                     f"{format_error(other.get('errL2'))} {format_ratio(row.get('errL2'), other.get('errL2'))} "
                     f"{format_error(row.get('errH1'))} {format_error(other.get('errH1'))}")
        r1 = reduced_rates.get(lam, {})
        r2 = unified_rates.get(lam, {})
        add_line(f"{'rate':>6} {'':>8} {format_rate(r1.get('rateL2'))} {format_rate(r2.get('rateL2'))} "
                 f"{'':>12} {format_rate(r1.get('rateH1'))} {format_rate(r2.get('rateH1'))}")
        add_line("")

    add_line("=" * 90)
    add_line("")
    add_line("ANALYSIS:")
    add_line("-" * 90)
    for name, table in (("ReducedRot", reduced), ("UnifiedReduced", unified)):
        spread = table.lambda_spread('errL2')
        verdict = "locking-free" if spread < 0.05 else "lambda-dependent"
        add_line(f"{name:<16} max relative ErrL2 spread across lambda: {spread:.3e} ({verdict})")
    if reduced.failed or unified.failed:
        add_line(f"⚠️  Failed rows: ReducedRot {len(reduced.failed)}, UnifiedReduced {len(unified.failed)}")
    add_line("")
    add_line("=" * 90)

    if output_file:
        with open(output_file, 'w') as f:
            f.write('\n'.join(lines))
        print(f"\n✅ Comparison saved to: {output_file}")


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description='Compare the ReducedRot and UnifiedReduced schemes on one study'
    )
    parser.add_argument('--study', type=str, default=None,
                        help='Study preset (default: default_study from config)')
    parser.add_argument('--config', type=str, default='config.yaml',
                        help='Path to config file (default: config.yaml)')
    parser.add_argument('--lambdas', type=float, nargs='+', default=None,
                        help='Override the lambda list')
    parser.add_argument('--sizes', type=int, nargs='+', default=None,
                        help='Override the mesh size list')
    parser.add_argument('--threads', type=int, default=None,
                        help='Worker threads (default: POLYVEM_THREADS)')
    parser.add_argument('--output', type=str, default=None,
                        help='Optional output file to save comparison report')
    args = parser.parse_args()

    print(f"\n🔍 Loading configuration from {args.config}...")
    try:
        base_config = load_config(args.config)
        config = get_study_config(base_config, args.study)
        if args.lambdas is not None:
            config['lambdas'] = args.lambdas
        if args.sizes is not None:
            config['sizes'] = args.sizes
        study_config = StudyConfig.from_dict(config)
    except (PolyVemError, OSError) as e:
        print(f"❌ Error loading config: {e}")
        sys.exit(2)

    setup_logging(config.get('log_level', 'WARNING'))
    print(f"✅ Configuration loaded")
    print(f"   Study: {study_config.name} ({study_config.example}, {study_config.space})")
    print(f"   Meshes: {study_config.mesh_family} {list(study_config.sizes)}, type {study_config.refine_type}")
    print(f"   Lambdas: {list(study_config.lambdas)}")
    print()

    print("📊 Running study with ReducedRot...")
    reduced = run_single_study(study_config, SchemeKind.REDUCED_ROT, args.threads)
    print(f"✅ ReducedRot complete: {len(reduced.rows)} rows, {len(reduced.failed)} failed")
    print()

    print("📊 Running study with UnifiedReduced...")
    unified = run_single_study(study_config, SchemeKind.UNIFIED_REDUCED, args.threads)
    print(f"✅ UnifiedReduced complete: {len(unified.rows)} rows, {len(unified.failed)} failed")
    print()

    print_comparison(reduced, unified, args.output)


if __name__ == '__main__':
    main()
