"""Command-line entry point: python -m src.main {mesh,solve,study} ..."""

import argparse
import sys
from typing import List, Optional

from . import mesh_cmd, solve, study

COMMANDS = {
    'mesh': mesh_cmd.main,
    'solve': solve.main,
    'study': study.main,
}


def parse_args(argv: Optional[List[str]] = None):
    """Parse the command name; everything after it goes to the command."""
    parser = argparse.ArgumentParser(
        prog='polyvem',
        description='Locking-free polygonal virtual element solver for 2-D linear elasticity',
        epilog='Run "<command> --help" for the options of each command. '
               'Exit codes: 2 invalid arguments/config, 3 mesh failure, 4 solver failure, 5 study row failed.'
    )
    parser.add_argument('command', choices=sorted(COMMANDS), help='mesh, solve or study')
    parser.add_argument('args', nargs=argparse.REMAINDER, help='Command arguments')
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """Dispatch to the command runner and return its exit code."""
    args = parse_args(argv)
    return COMMANDS[args.command](args.args)


if __name__ == '__main__':
    sys.exit(main())
