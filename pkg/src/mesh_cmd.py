"""Mesh CLI runner - generate, refine, distort and check .vmesh files."""

import argparse
import sys
from typing import List, Optional

from .exceptions import EXIT_INVALID_ARGUMENT, PolyVemError, exit_code_for
from .mesh import (PolygonalMesh, distort, generate_structured_quads,
                   generate_uniform_triangulation, generate_voronoi)
from .mesh_io import load_mesh, save_mesh, save_parents
from .mesh_quality import check_c0
from .mesh_refine import refine
from .utils import setup_logging


def parse_args(argv: Optional[List[str]] = None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog='polyvem mesh',
        description='Generate, refine, distort and check polygonal meshes of the unit square'
    )
    parser.add_argument('--log-level', type=str, default='WARNING', help='Logging level (default: WARNING)')
    sub = parser.add_subparsers(dest='action', required=True)

    p = sub.add_parser('gen-tri', help='Uniform triangulation (2 n^2 triangles)')
    p.add_argument('--n', type=int, required=True, help='Subdivisions per side')
    p.add_argument('-o', '--output', type=str, required=True, help='Output .vmesh file')

    p = sub.add_parser('gen-quad', help='Structured squares (n^2 quadrilaterals)')
    p.add_argument('--n', type=int, required=True, help='Subdivisions per side')
    p.add_argument('-o', '--output', type=str, required=True, help='Output .vmesh file')

    p = sub.add_parser('gen-voronoi', help='Centroidal Voronoi mesh by Lloyd relaxation')
    p.add_argument('--n', '--n-seeds', dest='n', type=int, required=True, help='Number of cells')
    p.add_argument('--lloyd-iters', type=int, default=100, help='Lloyd iterations (default: 100)')
    p.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    p.add_argument('-o', '--output', type=str, required=True, help='Output .vmesh file')

    p = sub.add_parser('refine', help='Refine every element (writes fine mesh and parent map)')
    p.add_argument('--type', type=str, required=True, help='Refinement type 1, 2 or 3')
    p.add_argument('-i', '--input', type=str, required=True, help='Coarse .vmesh file')
    p.add_argument('-o', '--output', type=str, required=True, help='Fine .vmesh file')
    p.add_argument('--parents', type=str, default=None, help='Parent map file (default: output with .par)')

    p = sub.add_parser('distort', help='Sinusoidal vertex distortion')
    p.add_argument('--tc', type=float, default=0.1, help='Distortion parameter t_c (default: 0.1)')
    p.add_argument('-i', '--input', type=str, required=True, help='Input .vmesh file')
    p.add_argument('-o', '--output', type=str, required=True, help='Output .vmesh file')

    p = sub.add_parser('check', help='Star-shapedness / vertex-distance audit')
    p.add_argument('--gamma1', type=float, default=0.05, help='Threshold for rho/h (default: 0.05)')
    p.add_argument('--gamma2', type=float, default=0.05, help='Threshold for vertex distance/h (default: 0.05)')
    p.add_argument('-i', '--input', type=str, required=True, help='Input .vmesh file')

    return parser.parse_args(argv)


def _print_counts(mesh: PolygonalMesh, path: str):
    print(f"Wrote {path}: {mesh.n_vertices} vertices, {mesh.n_edges} edges, {mesh.n_elements} elements, "
          f"h={mesh.max_diameter():.6g}")


def run(args) -> int:
    """Execute one mesh action; returns the exit code."""
    action = args.action
    if action in ('gen-tri', 'gen-quad', 'gen-voronoi'):
        if action == 'gen-tri':
            mesh = generate_uniform_triangulation(args.n)
        elif action == 'gen-quad':
            mesh = generate_structured_quads(args.n)
        else:
            mesh = generate_voronoi(args.n, lloyd_iters=args.lloyd_iters, rng_seed=args.seed)
        save_mesh(mesh, args.output)
        _print_counts(mesh, args.output)
        print(check_c0(mesh, 0.0, 0.0).summary())

    elif action == 'refine':
        hierarchy = refine(load_mesh(args.input), args.type)
        parents = args.parents or str(args.output).rsplit('.', 1)[0] + '.par'
        save_mesh(hierarchy.fine, args.output)
        save_parents(hierarchy.parent_of, hierarchy.refine_type, parents)
        _print_counts(hierarchy.fine, args.output)
        print(f"Wrote {parents}: {len(hierarchy.parent_of)} parents ({hierarchy.refine_type.name})")

    elif action == 'distort':
        mesh = distort(load_mesh(args.input), args.tc)
        save_mesh(mesh, args.output)
        _print_counts(mesh, args.output)

    else:
        mesh = load_mesh(args.input)
        report = check_c0(mesh, args.gamma1, args.gamma2)
        print(report.summary())
        print(f"Elements: {mesh.n_elements}, min rho/h={report.min_star_ratio:.6g}, "
              f"min vertex distance/h={report.min_vertex_ratio:.6g}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main mesh entry point."""
    args = parse_args(argv)
    setup_logging(args.log_level)
    try:
        return run(args)
    except (PolyVemError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return exit_code_for(e) if isinstance(e, PolyVemError) else EXIT_INVALID_ARGUMENT


if __name__ == '__main__':
    sys.exit(main())
