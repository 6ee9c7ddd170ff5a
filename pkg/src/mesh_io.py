"""Reading and writing .vmesh mesh files and .par parent-map files."""

import logging
from pathlib import Path
from typing import Iterator, List, Tuple

import numpy as np

from .exceptions import MeshParseError, TopologyError
from .mesh import PolygonalMesh
from .mesh_refine import RefineType

logger = logging.getLogger("polyvem.mesh_io")

MESH_MAGIC = "vmesh"
PARENTS_MAGIC = "vpar"
FORMAT_VERSION = 1


def _content_lines(path: Path) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line_number, tokens) for non-empty lines with comments stripped."""
    with open(path, 'r') as f:
        for number, raw in enumerate(f, start=1):
            text = raw.split('#', 1)[0].strip()
            if text:
                yield number, text.split()


def _atomic_write(path: Path, text: str):
    """Write via a temp file and rename, so a crash never leaves a truncated file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + '.tmp')
    try:
        with open(temp_file, 'w') as f:
            f.write(text)
        temp_file.replace(path)
    except Exception:
        if temp_file.exists():
            temp_file.unlink()
        raise


def _read_header(lines: Iterator[Tuple[int, List[str]]], magic: str) -> Tuple[int, List[str]]:
    try:
        number, tokens = next(lines)
    except StopIteration:
        raise MeshParseError("empty file", 1)
    if len(tokens) != 2 or tokens[0] != magic or tokens[1] != str(FORMAT_VERSION):
        raise MeshParseError(f"expected header '{magic} {FORMAT_VERSION}'", number)
    try:
        return next(lines)
    except StopIteration:
        raise MeshParseError("missing size line", number + 1)


def _parse_int(token: str, number: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise MeshParseError(f"expected integer, got '{token}'", number)


def load_mesh(path: str) -> PolygonalMesh:
    """
    Load a .vmesh file.

    Args:
        path: File path

    Returns:
        Validated PolygonalMesh

    Raises:
        MeshParseError: Malformed content (with line number)
        TopologyError: Mesh invariants violated
    """
    path = Path(path)
    lines = _content_lines(path)
    number, tokens = _read_header(lines, MESH_MAGIC)
    if len(tokens) != 2:
        raise MeshParseError("expected '<nv> <ne>'", number)
    nv, ne = _parse_int(tokens[0], number), _parse_int(tokens[1], number)
    if nv < 3 or ne < 1:
        raise MeshParseError(f"invalid sizes nv={nv}, ne={ne}", number)

    vertices = np.empty((nv, 2))
    for i in range(nv):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise MeshParseError(f"file ends after {i} of {nv} vertices", number + 1)
        if len(tokens) != 2:
            raise MeshParseError("expected 'x y'", number)
        try:
            vertices[i] = [float(tokens[0]), float(tokens[1])]
        except ValueError:
            raise MeshParseError(f"invalid coordinate in '{' '.join(tokens)}'", number)

    elements = []
    for i in range(ne):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise MeshParseError(f"file ends after {i} of {ne} elements", number + 1)
        values = [_parse_int(t, number) for t in tokens]
        if len(values) < 4 or values[0] != len(values) - 1:
            raise MeshParseError("expected 'k i1 ... ik' with k >= 3", number)
        elements.append(values[1:])

    for number, _ in lines:
        raise MeshParseError("unexpected content after last element", number)

    try:
        mesh = PolygonalMesh(vertices, elements)
    except TopologyError as e:
        raise TopologyError(f"{path}: {e}") from e

    logger.info(f"Loaded {mesh} from {path}")
    return mesh


def save_mesh(mesh: PolygonalMesh, path: str):
    """
    Write a .vmesh file with 17 significant digits (exact double round trip).

    Args:
        mesh: Mesh to write
        path: Destination
    """
    out = [f"{MESH_MAGIC} {FORMAT_VERSION}", f"{mesh.n_vertices} {mesh.n_elements}"]
    out.extend(f"{x:.17g} {y:.17g}" for x, y in mesh.vertices)
    out.extend(f"{len(cycle)} " + " ".join(str(v) for v in cycle) for cycle in mesh.elements)
    _atomic_write(Path(path), "\n".join(out) + "\n")
    logger.info(f"Saved {mesh} to {path}")


def save_parents(parent_of: np.ndarray, refine_type: RefineType, path: str):
    """Write the fine-to-coarse element map of a refinement."""
    out = [f"{PARENTS_MAGIC} {FORMAT_VERSION}", f"{len(parent_of)} {int(refine_type)}"]
    out.extend(str(int(p)) for p in parent_of)
    _atomic_write(Path(path), "\n".join(out) + "\n")


def load_parents(path: str) -> Tuple[np.ndarray, RefineType]:
    """
    Read a .par parent-map file.

    Returns:
        Tuple of (parent_of, refine_type)
    """
    lines = _content_lines(Path(path))
    number, tokens = _read_header(lines, PARENTS_MAGIC)
    if len(tokens) != 2:
        raise MeshParseError("expected '<n_fine> <refine_type>'", number)
    n_fine = _parse_int(tokens[0], number)
    refine_type = RefineType.parse(tokens[1])
    parents = []
    for number, tokens in lines:
        if len(tokens) != 1:
            raise MeshParseError("expected one parent index per line", number)
        parents.append(_parse_int(tokens[0], number))
    if len(parents) != n_fine:
        raise MeshParseError(f"expected {n_fine} parent indices, found {len(parents)}", number)
    return np.array(parents, dtype=np.int64), refine_type
