"""Puzzle data model: tiles, rotations, boards and scoring.

Sides are indexed ``0=top, 1=right, 2=bottom, 3=left``.  A rotation ``alpha``
is a number of clockwise quarter-turns, so after rotating, the colour shown on
side ``s`` is the one stored at ``(s - alpha) mod 4``.  Colour 0 is the grey
frame colour.  Positions are 0-based ``(row, col)`` everywhere in the library;
only file formats and LP variable names use 1-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional

import numpy as np

TOP, RIGHT, BOTTOM, LEFT = 0, 1, 2, 3
GREY = 0
SIDE_NAMES = ("top", "right", "bottom", "left")
# (dr, dc) of the neighbour across each side
OFFSETS = ((-1, 0), (0, 1), (1, 0), (0, -1))

CORNER, EDGE, INNER = 2, 1, 0  # tile class == number of grey edges


def opposite(side: int) -> int:
    return (side + 2) % 4


@dataclass(frozen=True)
class Tile:
    id: int
    colors: tuple[int, int, int, int]

    def __post_init__(self):
        if len(self.colors) != 4:
            raise ValueError(f"tile {self.id}: expected 4 colours, got {len(self.colors)}")

    @property
    def grey_count(self) -> int:
        return sum(1 for col in self.colors if col == GREY)


@dataclass(frozen=True)
class Placement:
    tile: int
    rotation: int

    def __post_init__(self):
        if not 0 <= self.rotation <= 3:
            raise ValueError(f"rotation must be in 0..3, got {self.rotation}")


def color_at(tile: Tile, rotation: int, side: int) -> int:
    """Colour shown on ``side`` of ``tile`` after ``rotation`` clockwise quarter-turns."""
    return tile.colors[(side - rotation) % 4]


def rotated_colors(colors) -> np.ndarray:
    """Table ``out[t, a, s]`` of the colour on side ``s`` of tile row ``t`` at rotation ``a``."""
    colors = np.asarray(colors)
    idx = (np.arange(4)[None, :] - np.arange(4)[:, None]) % 4  # idx[a, s]
    return colors[:, idx]


class Instance:
    """An ``n x n`` puzzle.  Tile ids run from 1 to n²; row ``id-1`` of
    :attr:`colors` holds that tile's colours in side order."""

    def __init__(self, n: int, colors, n_inner: int, n_border: int = 0,
                 planted: Optional["Board"] = None, name: str = ""):
        colors = np.asarray(colors, dtype=np.int32)
        if colors.shape != (n * n, 4):
            raise ValueError(f"expected {n * n} tiles with 4 colours, got shape {colors.shape}")
        L = n_inner + n_border
        if colors.min(initial=0) < 0 or colors.max(initial=0) > L:
            raise ValueError(f"colour out of range 0..{L}")
        self.n = n
        self.colors = colors
        self.colors.setflags(write=False)
        self.n_inner = n_inner
        self.n_border = n_border
        self.planted = planted
        self.name = name

    @property
    def L(self) -> int:
        return self.n_inner + self.n_border

    @property
    def n_tiles(self) -> int:
        return self.n * self.n

    @property
    def optimum(self) -> int:
        """Number of inner edges, i.e. the best reachable matched count."""
        return 2 * self.n * (self.n - 1)

    def tile(self, tile_id: int) -> Tile:
        return Tile(tile_id, tuple(int(x) for x in self.colors[tile_id - 1]))

    def tiles(self) -> list[Tile]:
        return [self.tile(t) for t in range(1, self.n_tiles + 1)]

    @cached_property
    def rot_colors(self) -> np.ndarray:
        """``rc[t, a, s]`` for tile id ``t`` (row 0 is a dummy for holes, all -1)."""
        rc = np.full((self.n_tiles + 1, 4, 4), -1, dtype=np.int32)
        rc[1:] = rotated_colors(self.colors)
        rc.setflags(write=False)
        return rc

    @cached_property
    def tile_class(self) -> np.ndarray:
        """Grey-edge count per tile id (index 0 unused)."""
        cls = np.zeros(self.n_tiles + 1, dtype=np.int32)
        cls[1:] = (self.colors == GREY).sum(axis=1)
        return cls

    def border_pool(self) -> np.ndarray:
        """Ids of tiles with at least one grey edge."""
        ids = np.arange(1, self.n_tiles + 1)
        return ids[self.tile_class[1:] >= 1]

    def inner_pool(self) -> np.ndarray:
        ids = np.arange(1, self.n_tiles + 1)
        return ids[self.tile_class[1:] == 0]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.n == other.n and self.n_inner == other.n_inner
                and self.n_border == other.n_border
                and np.array_equal(self.colors, other.colors)
                and self.planted == other.planted)

    __hash__ = None

    def __repr__(self):
        return f"Instance(n={self.n}, inner={self.n_inner}, border={self.n_border}, name={self.name!r})"


class Board:
    """Grid of placements.  ``tiles[r, c] == 0`` marks a hole.

    The same type serves complete boards and partial ones; see
    :attr:`is_complete`.
    """

    def __init__(self, n: int, tiles=None, rotations=None):
        self.n = n
        if tiles is None:
            tiles = np.zeros((n, n), dtype=np.int32)
        if rotations is None:
            rotations = np.zeros((n, n), dtype=np.int32)
        self.tiles = np.array(tiles, dtype=np.int32).reshape(n, n)
        self.rotations = np.array(rotations, dtype=np.int32).reshape(n, n) % 4
        self.rotations[self.tiles == 0] = 0
        self.tiles.setflags(write=False)
        self.rotations.setflags(write=False)

    @classmethod
    def empty(cls, n: int) -> "Board":
        return cls(n)

    @classmethod
    def from_placements(cls, n: int, placements: dict) -> "Board":
        tiles = np.zeros((n, n), dtype=np.int32)
        rots = np.zeros((n, n), dtype=np.int32)
        for (r, c), p in placements.items():
            tiles[r, c] = p.tile
            rots[r, c] = p.rotation
        return cls(n, tiles, rots)

    def __getitem__(self, pos) -> Optional[Placement]:
        r, c = pos
        t = int(self.tiles[r, c])
        return Placement(t, int(self.rotations[r, c])) if t else None

    def placements(self) -> Iterator[tuple[tuple[int, int], Placement]]:
        for r, c in zip(*np.nonzero(self.tiles)):
            yield (int(r), int(c)), Placement(int(self.tiles[r, c]), int(self.rotations[r, c]))

    def with_placements(self, placements: dict) -> "Board":
        tiles = self.tiles.copy()
        rots = self.rotations.copy()
        for (r, c), p in placements.items():
            if p is None:
                tiles[r, c] = 0
                rots[r, c] = 0
            else:
                tiles[r, c] = p.tile
                rots[r, c] = p.rotation
        return Board(self.n, tiles, rots)

    def without(self, positions) -> "Board":
        return self.with_placements({pos: None for pos in positions})

    @property
    def is_complete(self) -> bool:
        return bool((self.tiles > 0).all())

    @property
    def n_placed(self) -> int:
        return int((self.tiles > 0).sum())

    def used_tiles(self) -> set[int]:
        return set(int(t) for t in self.tiles[self.tiles > 0])

    def validate(self, instance: Instance) -> None:
        """Raise ``ValueError`` on unknown or repeated tile ids."""
        if self.n != instance.n:
            raise ValueError(f"board is {self.n}x{self.n}, instance is {instance.n}x{instance.n}")
        placed = self.tiles[self.tiles > 0]
        if placed.size and (placed.max() > instance.n_tiles or placed.min() < 1):
            bad = int(placed[(placed > instance.n_tiles) | (placed < 1)][0])
            raise ValueError(f"unknown tile {bad}")
        ids, counts = np.unique(placed, return_counts=True)
        if (counts > 1).any():
            raise ValueError(f"duplicate tile {int(ids[counts > 1][0])}")

    def __eq__(self, other):
        if not isinstance(other, Board):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.tiles, other.tiles)
                and np.array_equal(self.rotations, other.rotations))

    __hash__ = None

    def __repr__(self):
        return f"Board(n={self.n}, placed={self.n_placed})"


@dataclass(frozen=True)
class Score:
    matched_inner: int
    unmatched_inner: int
    frame_violations: int

    def __str__(self):
        return f"matched {self.matched_inner}, unmatched {self.unmatched_inner}, frame {self.frame_violations}"


def board_colors(instance: Instance, board: Board) -> np.ndarray:
    """``(n, n, 4)`` array of the colour facing each side; -1 on holes."""
    return instance.rot_colors[board.tiles, board.rotations]


def score_partial(instance: Instance, board: Board) -> Score:
    """Score only the edges whose two endpoints are both placed."""
    col = board_colors(instance, board)
    placed = board.tiles > 0
    h_real = placed[:, :-1] & placed[:, 1:]
    v_real = placed[:-1, :] & placed[1:, :]
    h_bad = (col[:, :-1, RIGHT] != col[:, 1:, LEFT]) & h_real
    v_bad = (col[:-1, :, BOTTOM] != col[1:, :, TOP]) & v_real
    unmatched = int(h_bad.sum() + v_bad.sum())
    matched = int(h_real.sum() + v_real.sum()) - unmatched
    frame = int((col[0, :, TOP][placed[0, :]] != GREY).sum()
                + (col[-1, :, BOTTOM][placed[-1, :]] != GREY).sum()
                + (col[:, 0, LEFT][placed[:, 0]] != GREY).sum()
                + (col[:, -1, RIGHT][placed[:, -1]] != GREY).sum())
    return Score(matched, unmatched, frame)


def score_board(instance: Instance, board: Board) -> Score:
    if not board.is_complete:
        raise ValueError("board has holes")
    return score_partial(instance, board)


def is_border_cell(n: int, r: int, c: int) -> bool:
    return r == 0 or c == 0 or r == n - 1 or c == n - 1


def outward_sides(n: int, r: int, c: int) -> tuple[bool, bool, bool, bool]:
    """Which sides of ``(r, c)`` face the frame."""
    return (r == 0, c == n - 1, r == n - 1, c == 0)


def frame_feasible(instance: Instance, tile: int, rotation: int, r: int, c: int) -> bool:
    """Grey faces outward on every frame side and nowhere else."""
    out = outward_sides(instance.n, r, c)
    cols = instance.rot_colors[tile, rotation]
    return all((cols[s] == GREY) == out[s] for s in range(4))


def feasibility_mask(instance: Instance) -> np.ndarray:
    """``mask[t, a, r, c]``: placing tile ``t`` at rotation ``a`` on ``(r, c)`` respects the frame."""
    n = instance.n
    rc = instance.rot_colors  # (T+1, 4, 4)
    grey = rc == GREY
    out = np.zeros((n, n, 4), dtype=bool)
    out[0, :, TOP] = True
    out[-1, :, BOTTOM] = True
    out[:, 0, LEFT] = True
    out[:, -1, RIGHT] = True
    mask = (grey[:, :, None, None, :] == out[None, None, :, :, :]).all(axis=-1)
    mask[0] = False
    return mask


def random_board(instance: Instance, rng: np.random.Generator) -> Board:
    """Uniformly shuffled complete board that respects the frame."""
    n = instance.n
    tiles = np.zeros((n, n), dtype=np.int32)
    rots = np.zeros((n, n), dtype=np.int32)
    cls = instance.tile_class
    cells = {CORNER: [], EDGE: [], INNER: []}
    for r in range(n):
        for c in range(n):
            k = sum(outward_sides(n, r, c))
            cells[k].append((r, c))
    for k, pos in cells.items():
        pool = np.flatnonzero(cls == k)
        pool = pool[pool > 0]
        pool = rng.permutation(pool)
        for (r, c), t in zip(pos, pool):
            ok = [a for a in range(4) if frame_feasible(instance, int(t), a, r, c)]
            tiles[r, c] = t
            rots[r, c] = ok[int(rng.integers(len(ok)))] if ok else 0
    return Board(n, tiles, rots)
