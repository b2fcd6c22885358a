"""Assignment problems for the tile-reinsertion neighbourhoods."""
from __future__ import annotations

from typing import Sequence

import numba as nb
import numpy as np

from .core import OFFSETS, Board, Instance, opposite
from .region import _mask

INFEASIBLE_COST = 5  # above the worst real cost (4 unmatched sides)


@nb.njit(cache=True)
def _hungarian(a):
    """Shortest augmenting path Hungarian method on an integer matrix.

    Returns (row->col assignment, row potentials u, column potentials v).
    """
    n = a.shape[0]
    INF = np.int64(1) << 60
    u = np.zeros(n + 1, dtype=np.int64)
    v = np.zeros(n + 1, dtype=np.int64)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, INF, dtype=np.int64)
        used = np.zeros(n + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    row = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        row[p[j] - 1] = j - 1
    return row, u[1:], v[1:]


@nb.njit(cache=True)
def _augment(start, tight, row, col, fixed_col, lo, target, seen, prev_row):
    """Alternating path in the tight graph from free row ``start`` to column
    ``target``, using only rows >= lo and unfixed columns.  Updates the matching."""
    n = tight.shape[0]
    for j in range(n):
        seen[j] = False
    # BFS over columns
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for j in range(n):
        if tight[start, j] and not fixed_col[j]:
            seen[j] = True
            prev_row[j] = start
            queue[tail] = j
            tail += 1
    found = False
    while head < tail:
        j = queue[head]
        head += 1
        if j == target:
            found = True
            break
        i2 = col[j]
        if i2 < lo:
            continue
        for j2 in range(n):
            if tight[i2, j2] and not fixed_col[j2] and not seen[j2]:
                seen[j2] = True
                prev_row[j2] = i2
                queue[tail] = j2
                tail += 1
    if not found:
        return False
    j = target
    while True:
        i = prev_row[j]
        nxt = row[i]
        row[i] = j
        col[j] = i
        if i == start:
            break
        j = nxt
    return True


@nb.njit(cache=True)
def _lexmin(a):
    n = a.shape[0]
    row, u, v = _hungarian(a)
    tight = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            tight[i, j] = a[i, j] - u[i] - v[j] == 0
    col = np.zeros(n, dtype=np.int64)
    for i in range(n):
        col[row[i]] = i
    fixed_col = np.zeros(n, dtype=np.bool_)
    seen = np.zeros(n, dtype=np.bool_)
    prev_row = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if fixed_col[j] or not tight[i, j]:
                continue
            if row[i] == j:
                break
            # give j to i; its owner must reach the column i releases
            owner = col[j]
            freed = row[i]
            saved_row = row.copy()
            saved_col = col.copy()
            row[i] = j
            col[j] = i
            fixed_col[j] = True
            ok = _augment(owner, tight, row, col, fixed_col, i + 1, freed, seen, prev_row)
            fixed_col[j] = False
            if ok:
                break
            row[:] = saved_row
            col[:] = saved_col
        fixed_col[row[i]] = True
    total = 0
    for i in range(n):
        total += a[i, row[i]]
    return row, total


def hungarian_solve(costs) -> tuple[list[int], int]:
    """Minimum-cost perfect assignment of rows to columns.

    Among optimal permutations the lexicographically smallest is returned.
    """
    a = np.asarray(costs)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {a.shape}")
    if a.shape[0] == 0:
        return [], 0
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.equal(np.mod(a, 1), 0)):
            raise ValueError("cost matrix must hold integers")
    row, total = _lexmin(np.ascontiguousarray(a, dtype=np.int64))
    return [int(x) for x in row], int(total)


def non_adjacent(slots: Sequence[tuple[int, int]]) -> bool:
    s = set(slots)
    if len(s) != len(slots):
        return False
    return not any((r + dr, c + dc) in s for r, c in s for dr, dc in OFFSETS)


def ta_cost_matrix(instance: Instance, board: Board, slots: Sequence[tuple[int, int]],
                   tiles: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """``cost[i, j]``: fewest unmatched edges of ``tiles[i]`` placed on
    ``slots[j]`` against the fixed neighbours, over frame-feasible rotations
    (5 when no rotation is feasible).  ``rot[i, j]`` is the smallest argmin."""
    if len(slots) != len(tiles):
        raise ValueError("need as many tiles as slots")
    if not non_adjacent(slots):
        raise ValueError("slots must be pairwise non-adjacent")
    return _ta_costs(instance, board.tiles, board.rotations, slots, tiles)


def _ta_costs(instance, T, A, slots, tiles):
    n = instance.n
    rc = instance.rot_colors
    mask = _mask(instance)
    k = len(slots)
    slotset = set(slots)
    need = np.full((k, 4), -1, dtype=np.int32)
    for j, (r, c) in enumerate(slots):
        for s, (dr, dc) in enumerate(OFFSETS):
            rr, cc = r + dr, c + dc
            if 0 <= rr < n and 0 <= cc < n and (rr, cc) not in slotset:
                t = T[rr, cc]
                if t:
                    need[j, s] = rc[t, A[rr, cc], opposite(s)]
    tiles = np.asarray(tiles, dtype=np.int64)
    cols = rc[tiles]                                  # (k, 4 rot, 4 side)
    mism = (cols[:, None, :, :] != need[None, :, None, :]) & (need[None, :, None, :] >= 0)
    cost = mism.sum(axis=-1)                          # (k tiles, k slots, 4 rot)
    rr = np.array([r for r, _ in slots])
    cc = np.array([c for _, c in slots])
    feas = mask[tiles][:, :, rr, cc].transpose(0, 2, 1)  # (k, k, 4)
    cost = np.where(feas, cost, INFEASIBLE_COST)
    rot = cost.argmin(axis=-1)
    best = cost.min(axis=-1)
    return best.astype(np.int64), rot.astype(np.int64)


def reinsert(instance: Instance, board: Board, slots, tiles=None):
    """Optimal reinsertion of the tiles on ``slots``.

    Returns ``(new_board, cost)`` where ``cost`` counts the unmatched edges
    incident to the slots after reinsertion.
    """
    if tiles is None:
        tiles = [int(board.tiles[s]) for s in slots]
    cost, rot = ta_cost_matrix(instance, board, slots, tiles)
    assign, total = hungarian_solve(cost)
    T = board.tiles.copy()
    A = board.rotations.copy()
    for i, j in enumerate(assign):
        T[slots[j]] = tiles[i]
        A[slots[j]] = rot[i, j]
    return Board(board.n, T, A), total
