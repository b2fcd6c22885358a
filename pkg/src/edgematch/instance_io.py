"""Instance generation with a planted solution, and the text file formats.

Instance file::

    n L_inner L_border
    top right bottom left        # n*n tile lines, tile id = line order
    ...
    SOLUTION                     # optional
    tileId alpha                 # n*n lines, row-major
    ...

Solution file: a first line ``n`` followed by the ``n*n`` ``tileId alpha``
lines; ``0 0`` marks a hole.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GREY, Board, Instance, is_border_cell


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based (0 when not attributable)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class HeaderError(ParseError):
    pass


class TileCountError(ParseError):
    pass


class TileLineError(ParseError):
    pass


class ColorRangeError(ParseError):
    pass


class SolutionError(ParseError):
    pass


def default_palette(n: int) -> tuple[int, int]:
    """Inner/border palette sizes scaled from the 16x16 values (17, 5)."""
    return max(2, round(17 * n / 16)), max(2, round(5 * n / 16))


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    inner_colors: Optional[int] = None
    border_colors: Optional[int] = None
    seed: int = 0

    def resolved(self) -> "GeneratorParams":
        di, db = default_palette(self.n)
        return GeneratorParams(self.n,
                               di if self.inner_colors is None else self.inner_colors,
                               db if self.border_colors is None else self.border_colors,
                               self.seed)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.inner_colors is not None and self.inner_colors < 1:
            raise ValueError("inner_colors must be >= 1")
        if self.border_colors is not None and self.border_colors < 1:
            raise ValueError("border_colors must be >= 1")


def generate(params: GeneratorParams) -> Instance:
    """Cut a random fully matched board into shuffled, randomly rotated tiles."""
    p = params.resolved()
    n, li, lb = p.n, p.inner_colors, p.border_colors
    rng = np.random.default_rng(p.seed)

    # h[r, c]: edge between (r, c) and (r, c+1); v[r, c]: between (r, c) and (r+1, c)
    h = np.zeros((n, n - 1), dtype=np.int32)
    v = np.zeros((n - 1, n), dtype=np.int32)
    for r in range(n):
        for c in range(n - 1):
            ring = is_border_cell(n, r, c) and is_border_cell(n, r, c + 1)
            h[r, c] = li + rng.integers(1, lb + 1) if ring else rng.integers(1, li + 1)
    for r in range(n - 1):
        for c in range(n):
            ring = is_border_cell(n, r, c) and is_border_cell(n, r + 1, c)
            v[r, c] = li + rng.integers(1, lb + 1) if ring else rng.integers(1, li + 1)

    cut = np.full((n, n, 4), GREY, dtype=np.int32)
    cut[1:, :, 0] = v
    cut[:-1, :, 2] = v
    cut[:, :-1, 1] = h
    cut[:, 1:, 3] = h

    order = rng.permutation(n * n)  # order[k] = position (row-major) of tile id k+1
    beta = rng.integers(0, 4, size=n * n)
    colors = np.zeros((n * n, 4), dtype=np.int32)
    tiles = np.zeros((n, n), dtype=np.int32)
    rots = np.zeros((n, n), dtype=np.int32)
    for k in range(n * n):
        r, c = divmod(int(order[k]), n)
        b = int(beta[k])
        # stored colours are the cut colours turned back by b quarter-turns
        colors[k] = cut[r, c][(np.arange(4) + b) % 4]
        tiles[r, c] = k + 1
        rots[r, c] = b
    name = f"gen-n{n}-i{li}-b{lb}-s{p.seed}"
    return Instance(n, colors, li, lb, planted=Board(n, tiles, rots), name=name)


def _is_path(source) -> bool:
    return isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source)


def _open_read(source):
    """Text of ``source``: a path, literal file content, or a readable object."""
    if _is_path(source):
        with open(source) as f:
            return f.read()
    if isinstance(source, str):
        return source
    return source.read()


def write_instance(instance: Instance, sink) -> None:
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as f:
            write_instance(instance, f)
        return
    sink.write(f"{instance.n} {instance.n_inner} {instance.n_border}\n")
    for row in instance.colors:
        sink.write(" ".join(str(int(x)) for x in row) + "\n")
    if instance.planted is not None:
        sink.write("SOLUTION\n")
        _write_rows(instance.planted, sink)


def instance_to_text(instance: Instance) -> str:
    buf = io.StringIO()
    write_instance(instance, buf)
    return buf.getvalue()


def _ints(line: str, lineno: int, exc=TileLineError) -> list[int]:
    try:
        return [int(x) for x in line.split()]
    except ValueError:
        raise exc(f"expected integers, got {line.strip()!r}", lineno) from None


def read_instance(source, name: str = "") -> Instance:
    """Parse the instance text format from a path, a string or a file object."""
    if not name and _is_path(source):
        name = os.path.splitext(os.path.basename(source))[0]
    lines = _open_read(source).splitlines()
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise HeaderError("empty file", 1)
    hline, header = numbered[0]
    hv = _ints(header, hline, HeaderError)
    if len(hv) != 3 or hv[0] < 2 or hv[1] < 0 or hv[2] < 0:
        raise HeaderError(f"malformed header {header.strip()!r}, expected 'n L_inner L_border'", hline)
    n, li, lb = hv
    L = li + lb
    body = numbered[1:]
    sol_at = next((k for k, (_, ln) in enumerate(body) if ln.strip().upper() == "SOLUTION"), None)
    tile_lines = body if sol_at is None else body[:sol_at]
    if len(tile_lines) != n * n:
        where = tile_lines[-1][0] if tile_lines else hline
        raise TileCountError(f"expected {n * n} tiles, found {len(tile_lines)}", where)
    colors = np.zeros((n * n, 4), dtype=np.int32)
    for k, (lineno, ln) in enumerate(tile_lines):
        vals = _ints(ln, lineno)
        if len(vals) != 4:
            raise TileLineError(f"expected 4 colours, got {len(vals)}", lineno)
        for x in vals:
            if not 0 <= x <= L:
                raise ColorRangeError(f"colour {x} out of range 0..{L}", lineno)
        colors[k] = vals
    planted = None
    if sol_at is not None:
        planted = _parse_rows(body[sol_at + 1:], n, n * n, body[sol_at][0])
    inst = Instance(n, colors, li, lb, planted=planted, name=name)
    if planted is not None:
        planted.validate(inst)
    return inst


def load_instance(path) -> Instance:
    return read_instance(os.fspath(path))


def _write_rows(board: Board, sink) -> None:
    n = board.n
    for r in range(n):
        for c in range(n):
            sink.write(f"{int(board.tiles[r, c])} {int(board.rotations[r, c])}\n")


def _parse_rows(rows, n: int, n_tiles: int, anchor_line: int) -> Board:
    if len(rows) != n * n:
        where = rows[-1][0] if rows else anchor_line
        raise SolutionError(f"wrong dimensions: expected {n * n} placements, found {len(rows)}", where)
    tiles = np.zeros((n, n), dtype=np.int32)
    rots = np.zeros((n, n), dtype=np.int32)
    seen: dict[int, int] = {}
    for k, (lineno, ln) in enumerate(rows):
        vals = _ints(ln, lineno, SolutionError)
        if len(vals) != 2:
            raise SolutionError("expected 'tileId alpha'", lineno)
        t, a = vals
        if t < 0 or t > n_tiles:
            raise SolutionError(f"unknown tile {t}", lineno)
        if not 0 <= a <= 3:
            raise SolutionError(f"rotation {a} out of range 0..3", lineno)
        if t:
            if t in seen:
                raise SolutionError(f"duplicate tile {t}", lineno)
            seen[t] = lineno
        tiles[k // n, k % n] = t
        rots[k // n, k % n] = a
    return Board(n, tiles, rots)


def write_solution(board: Board, sink) -> None:
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as f:
            write_solution(board, f)
        return
    sink.write(f"{board.n}\n")
    _write_rows(board, sink)


def solution_to_text(board: Board) -> str:
    buf = io.StringIO()
    write_solution(board, buf)
    return buf.getvalue()


def read_solution(source, instance: Instance) -> Board:
    lines = _open_read(source).splitlines()
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise SolutionError("empty solution file", 1)
    hline, header = numbered[0]
    hv = _ints(header, hline, SolutionError)
    if len(hv) != 1:
        raise SolutionError(f"malformed header {header.strip()!r}, expected 'n'", hline)
    if hv[0] != instance.n:
        raise SolutionError(f"wrong dimensions: solution is {hv[0]}x{hv[0]}, "
                            f"instance is {instance.n}x{instance.n}", hline)
    return _parse_rows(numbered[1:], instance.n, instance.n_tiles, hline)
