"""Random test scenarios built from generated instances."""
import numpy as np

from edgematch.core import Board
from edgematch.instance_io import GeneratorParams, generate
from edgematch.region import Region

import oracles


def region_case(rng, n=None, max_cells=6):
    """A mutated planted board with a small rectangle emptied.

    Sometimes one extra outside cell is emptied too, so the candidate list
    has a spare tile and the context has a hole.
    """
    n = int(n or rng.choice([3, 4, 5]))
    inst = generate(GeneratorParams(n, seed=int(rng.integers(1 << 30))))
    T, A = oracles.mutate(inst.planted.tiles, inst.planted.rotations, inst.colors, n, rng,
                          swaps=int(rng.integers(0, 5)))
    while True:
        h = int(rng.integers(1, min(n, max_cells) + 1))
        w = int(rng.integers(1, min(n, max_cells // h) + 1))
        if h * w <= max_cells:
            break
    r0 = int(rng.integers(0, n - h + 1))
    c0 = int(rng.integers(0, n - w + 1))
    region = Region.from_zero_based(r0, c0, h, w)
    cells = region.cells()
    board = Board(n, T, A)
    empty = list(cells)
    if rng.random() < 0.3:
        outside = [(r, c) for r in range(n) for c in range(n) if (r, c) not in cells]
        empty.append(outside[int(rng.integers(len(outside)))])
    candidates = sorted(int(board.tiles[cell]) for cell in empty)
    context = board.without(empty)
    return inst, region, context, candidates
