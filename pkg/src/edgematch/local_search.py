"""Multi-neighbourhood steepest descent over complete boards.

Neighbourhoods:

* TA  - remove k non-adjacent tiles of one pool and reinsert them optimally
* BO  - re-solve the border ring against the fixed inner tiles
* BW  - checkerboard reinsertion, alternating the two colour classes
* TSR - swap two tiles of the same pool (or rotate one), all rotations
* RO  - re-optimise a sampled rectangle with the clique heuristic

Every move is accepted only if the number of matched inner edges does not drop.
Inner and border tiles never trade places.
"""
from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np

from .clique import CliqueParams, board_clique, build_conflict_graph, max_clique_heuristic
from .core import GREY, Board, Instance, Placement, frame_feasible, is_border_cell
from .matching import _ta_costs, hungarian_solve
from .region import Budget, Region, local_cost, ring_cells, solve_border, solve_cells


@dataclass(frozen=True)
class LSParams:
    ta_k: int = 16
    ta_n: int = 1000
    clique_w: int = 6
    clique_h: int = 6
    clique_n: int = 10
    clique_q: int = 100_000
    bo_nodes: int = 2_000_000       # border search effort per BO move
    hole_nodes: int = 200_000       # effort for filling RO holes
    time_limit: Optional[float] = 60.0
    seed: int = 0
    max_cycles: Optional[int] = None
    patience: int = 1000            # non-improving cycles tolerated while the board still moves

    def __post_init__(self):
        if self.ta_k < 2:
            raise ValueError("ta_k must be >= 2")
        for name in ("ta_n", "patience", "clique_w", "clique_h", "clique_n", "clique_q", "bo_nodes", "hole_nodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True)
class MoveRecord:
    tag: str
    before: int
    after: int
    frame: int
    elapsed_ms: float


@dataclass
class Trace:
    records: list = field(default_factory=list)

    def add(self, tag, before, after, frame, elapsed_ms):
        self.records.append(MoveRecord(tag, int(before), int(after), int(frame), float(elapsed_ms)))

    def __len__(self):
        return len(self.records)

    def is_monotone(self) -> bool:
        if any(r.after < r.before for r in self.records):
            return False
        return all(a.after <= b.before for a, b in zip(self.records, self.records[1:]))

    def to_csv(self, sink=None, timing: bool = True):
        """Write ``tag,before,after,frame[,elapsed_ms]``; returns text when
        ``sink`` is None.  Without timing the output is reproducible."""
        if isinstance(sink, (str, os.PathLike)):
            with open(sink, "w", newline="") as f:
                return self.to_csv(f, timing)
        buf = io.StringIO() if sink is None else sink
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tag", "before", "after", "frame"] + (["elapsed_ms"] if timing else []))
        for r in self.records:
            row = [r.tag, r.before, r.after, r.frame]
            if timing:
                row.append(f"{r.elapsed_ms:.1f}")
            w.writerow(row)
        if sink is None:
            return buf.getvalue()


# ---------------------------------------------------------------------------
# scoring on raw arrays


def _matched(rc, T, A) -> int:
    col = rc[T, A]
    return int((col[:, :-1, 1] == col[:, 1:, 3]).sum() + (col[:-1, :, 2] == col[1:, :, 0]).sum())


def _frame(rc, T, A) -> int:
    col = rc[T, A]
    return int((col[0, :, 0] != GREY).sum() + (col[-1, :, 2] != GREY).sum()
               + (col[:, 0, 3] != GREY).sum() + (col[:, -1, 1] != GREY).sum())


def _unmatched_per_cell(rc, T, A) -> np.ndarray:
    col = rc[T, A]
    h = (col[:, :-1, 1] != col[:, 1:, 3]).astype(np.int32)
    v = (col[:-1, :, 2] != col[1:, :, 0]).astype(np.int32)
    u = np.zeros(T.shape, dtype=np.int32)
    u[:, :-1] += h
    u[:, 1:] += h
    u[:-1, :] += v
    u[1:, :] += v
    return u


def pools(n: int) -> tuple[list, list]:
    """(inner cells, border cells); corners belong to the border pool."""
    inner = [(r, c) for r in range(n) for c in range(n) if not is_border_cell(n, r, c)]
    return inner, ring_cells(n)


# ---------------------------------------------------------------------------
# TA / BW


def _sample_slots(cells, weights, k, rng) -> list:
    """Weighted draws without replacement, never picking orthogonal neighbours
    of an earlier pick."""
    w = np.asarray(weights, dtype=np.float64).copy()
    index = {cell: i for i, cell in enumerate(cells)}
    chosen = []
    while len(chosen) < k:
        total = w.sum()
        if total <= 0:
            break
        i = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
        i = min(i, len(cells) - 1)
        if w[i] <= 0:
            continue
        r, c = cells[i]
        chosen.append((r, c))
        w[i] = 0
        for nb_ in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            j = index.get(nb_)
            if j is not None:
                w[j] = 0
    return chosen


def _reinsert(instance, T, A, slots) -> bool:
    """Optimal reinsertion of the tiles on non-adjacent ``slots``, applied
    only when it strictly lowers the unmatched count."""
    tiles = [int(T[s]) for s in slots]
    rc = instance.rot_colors
    u = _unmatched_per_cell(rc, T, A)
    current = int(sum(u[s] for s in slots))
    if current == 0:
        return False
    cost, rot = _ta_costs(instance, T, A, slots, tiles)
    assign, total = hungarian_solve(cost)
    if total >= current:
        return False
    for i, j in enumerate(assign):
        T[slots[j]] = tiles[i]
        A[slots[j]] = rot[i, j]
    return True


def _ta(instance, T, A, k, rng, cells) -> bool:
    u = _unmatched_per_cell(instance.rot_colors, T, A)
    weights = [(1 + u[cell]) ** 2 for cell in cells]
    slots = _sample_slots(cells, weights, min(k, len(cells)), rng)
    return _reinsert(instance, T, A, slots)


def ta_move(instance: Instance, board: Board, params: LSParams, rng: np.random.Generator,
            pool: str = "inner") -> Board:
    """One TA iteration on the ``inner`` or ``border`` pool."""
    _complete(board)
    inner, border = pools(instance.n)
    T, A = board.tiles.copy(), board.rotations.copy()
    _ta(instance, T, A, params.ta_k, rng, inner if pool == "inner" else border)
    return Board(board.n, T, A)


def _bw(instance, T, A, inner, border) -> int:
    passes = 0
    while True:
        passes += 1
        improved = False
        for parity in (0, 1):
            for cells in (inner, border):
                slots = [cell for cell in cells if (cell[0] + cell[1]) % 2 == parity]
                if len(slots) >= 2 and _reinsert(instance, T, A, slots):
                    improved = True
        if not improved:
            return passes


def bw_move(instance: Instance, board: Board, params: Optional[LSParams] = None) -> Board:
    """Checkerboard reinsertion until a black+white pass brings nothing."""
    _complete(board)
    inner, border = pools(instance.n)
    T, A = board.tiles.copy(), board.rotations.copy()
    _bw(instance, T, A, inner, border)
    return Board(board.n, T, A)


# ---------------------------------------------------------------------------
# TSR


@nb.njit(cache=True)
def _cell_cost(T, A, rc, r, c, sr, sc):
    """Unmatched edges around (r, c), ignoring the one shared with (sr, sc)."""
    n = T.shape[0]
    cost = 0
    t = T[r, c]
    a = A[r, c]
    if r > 0 and not (r - 1 == sr and c == sc):
        cost += rc[t, a, 0] != rc[T[r - 1, c], A[r - 1, c], 2]
    if c < n - 1 and not (r == sr and c + 1 == sc):
        cost += rc[t, a, 1] != rc[T[r, c + 1], A[r, c + 1], 3]
    if r < n - 1 and not (r + 1 == sr and c == sc):
        cost += rc[t, a, 2] != rc[T[r + 1, c], A[r + 1, c], 0]
    if c > 0 and not (r == sr and c - 1 == sc):
        cost += rc[t, a, 3] != rc[T[r, c - 1], A[r, c - 1], 1]
    return cost


@nb.njit(cache=True)
def _fits(rc, t, a, r, c, n):
    out0 = r == 0
    out1 = c == n - 1
    out2 = r == n - 1
    out3 = c == 0
    return ((rc[t, a, 0] == 0) == out0 and (rc[t, a, 1] == 0) == out1
            and (rc[t, a, 2] == 0) == out2 and (rc[t, a, 3] == 0) == out3)


@nb.njit(cache=True)
def _tsr_pass(T, A, rc, cells):
    """One first-improvement scan over all pairs of ``cells``; returns the
    number of applied moves."""
    n = T.shape[0]
    m = cells.shape[0]
    moves = 0
    for i in range(m):
        pr = cells[i, 0]
        pc = cells[i, 1]
        for j in range(i, m):
            qr = cells[j, 0]
            qc = cells[j, 1]
            if i == j:
                t = T[pr, pc]
                a0 = A[pr, pc]
                old = _cell_cost(T, A, rc, pr, pc, -1, -1)
                for a in range(4):
                    if a == a0 or not _fits(rc, t, a, pr, pc, n):
                        continue
                    A[pr, pc] = a
                    new = _cell_cost(T, A, rc, pr, pc, -1, -1)
                    if new < old:
                        moves += 1
                        a0 = a
                        break
                    A[pr, pc] = a0
                continue
            tp = T[pr, pc]
            ap = A[pr, pc]
            tq = T[qr, qc]
            aq = A[qr, qc]
            old = _cell_cost(T, A, rc, pr, pc, -1, -1) + _cell_cost(T, A, rc, qr, qc, pr, pc)
            T[pr, pc] = tq
            T[qr, qc] = tp
            done = False
            for a1 in range(4):
                if not _fits(rc, tq, a1, pr, pc, n):
                    continue
                A[pr, pc] = a1
                for a2 in range(4):
                    if not _fits(rc, tp, a2, qr, qc, n):
                        continue
                    A[qr, qc] = a2
                    new = _cell_cost(T, A, rc, pr, pc, -1, -1) + _cell_cost(T, A, rc, qr, qc, pr, pc)
                    if new < old:
                        done = True
                        break
                if done:
                    break
            if done:
                moves += 1
            else:
                T[pr, pc] = tp
                T[qr, qc] = tq
                A[pr, pc] = ap
                A[qr, qc] = aq
    return moves


def _tsr(instance, T, A, inner_arr, border_arr) -> int:
    rc = instance.rot_colors
    total = 0
    while True:
        moves = _tsr_pass(T, A, rc, inner_arr) + _tsr_pass(T, A, rc, border_arr)
        total += moves
        if moves == 0:
            return total


def _cell_array(cells):
    return np.array(cells, dtype=np.int64).reshape(-1, 2)


def tsr_move(instance: Instance, board: Board) -> Board:
    """Swap/rotate descent to a local optimum."""
    _complete(board)
    inner, border = pools(instance.n)
    T, A = board.tiles.copy(), board.rotations.copy()
    _tsr(instance, T, A, _cell_array(inner), _cell_array(border))
    return Board(board.n, T, A)


def tsr_improving_move_exists(instance: Instance, board: Board) -> bool:
    """Independent re-scan used to verify TSR local optimality."""
    inner, border = pools(instance.n)
    base = board
    for cells in (inner, border):
        for i, p in enumerate(cells):
            for q in cells[i:]:
                old = local_cost(instance, base, {p, q})
                tp, tq = int(base.tiles[p]), int(base.tiles[q])
                for a1 in range(4):
                    for a2 in range(4):
                        if p == q:
                            if a2:
                                continue
                            trial = {p: (tp, a1)}
                        else:
                            trial = {p: (tq, a1), q: (tp, a2)}
                        if not all(frame_feasible(instance, t, a, *cell) for cell, (t, a) in trial.items()):
                            continue
                        b = base.with_placements({cell: Placement(t, a) for cell, (t, a) in trial.items()})
                        if local_cost(instance, b, {p, q}) < old:
                            return True
    return False


# ---------------------------------------------------------------------------
# BO / RO


def _bo(instance, T, A, params) -> bool:
    board = Board(instance.n, T, A)
    out = solve_border(instance, board, Budget(nodes=params.bo_nodes))
    if out is board:
        return False
    T[:] = out.tiles
    A[:] = out.rotations
    return True


def bo_move(instance: Instance, board: Board, params: LSParams = LSParams()) -> Board:
    _complete(board)
    return solve_border(instance, board, Budget(nodes=params.bo_nodes))


def _ro(instance, T, A, params, rng, region=None) -> bool:
    n = instance.n
    if region is None:
        h, w = min(params.clique_h, n), min(params.clique_w, n)
        r0 = int(rng.integers(0, n - h + 1))
        c0 = int(rng.integers(0, n - w + 1))
        region = Region.from_zero_based(r0, c0, h, w)
    seed = int(rng.integers(0, 2**31 - 1))
    board = Board(n, T, A)
    cells = region.cells()
    tiles = [int(T[cell]) for cell in cells]
    context = board.without(cells)
    graph = build_conflict_graph(instance, region, context, tiles)
    placements = {}
    if graph.node_count:
        init = board_clique(graph, board)
        clique = max_clique_heuristic(
            graph, CliqueParams(q=params.clique_q, seed=seed, target_size=len(cells)), init)
        for i in clique:
            node = graph.node(i)
            placements[(node.r, node.c)] = Placement(node.tile, node.rotation)
    partial = context.with_placements(placements)
    holes = [cell for cell in cells if cell not in placements]
    if holes:
        used = {p.tile for p in placements.values()}
        rest = [t for t in tiles if t not in used]
        sol = solve_cells(instance, holes, partial, rest, Budget(nodes=params.hole_nodes))
        if not sol.placements:
            return False
        partial = sol.apply(partial)
    rc = instance.rot_colors
    if _matched(rc, partial.tiles, partial.rotations) < _matched(rc, T, A):
        return False
    T[:] = partial.tiles
    A[:] = partial.rotations
    return True


def ro_move(instance: Instance, board: Board, params: LSParams, rng: np.random.Generator,
            region: Optional[Region] = None) -> Board:
    """Clique-based re-optimisation of a (sampled) rectangle; never worse."""
    _complete(board)
    T, A = board.tiles.copy(), board.rotations.copy()
    _ro(instance, T, A, params, rng, region)
    return Board(board.n, T, A)


# ---------------------------------------------------------------------------
# controller


def _complete(board: Board):
    if not board.is_complete:
        raise ValueError("board has holes")


def run_multi_neighbourhood(instance: Instance, start: Board, params: LSParams = LSParams(),
                            ) -> tuple[Board, Trace]:
    """Cycle TA, BO, BW, TSR and RO until a cycle leaves the board unchanged,
    ``patience`` cycles in a row bring no gain, the time limit passes, or
    ``max_cycles`` cycles have run.

    RO may swap in equally good arrangements, so a cycle without gain can
    still move the board to a new neighbourhood.
    """
    _complete(start)
    start.validate(instance)
    rng = np.random.default_rng(params.seed)
    rc = instance.rot_colors
    inner, border = pools(instance.n)
    inner_arr, border_arr = _cell_array(inner), _cell_array(border)
    T = np.array(start.tiles, dtype=np.int32)
    A = np.array(start.rotations, dtype=np.int32)
    trace = Trace()
    t0 = time.perf_counter()
    deadline = None if params.time_limit is None else t0 + params.time_limit

    def out_of_time():
        return deadline is not None and time.perf_counter() >= deadline

    def step(tag, fn):
        before = _matched(rc, T, A)
        fn()
        after = _matched(rc, T, A)
        trace.add(tag, before, after, _frame(rc, T, A), 1000 * (time.perf_counter() - t0))
        return after

    cycles = 0
    idle = 0
    stop = False
    while not stop:
        at_cycle_start = _matched(rc, T, A)
        snapshot = (T.copy(), A.copy())
        moves = [("TA", (lambda i=i: _ta(instance, T, A, params.ta_k, rng,
                                         inner if i % 2 == 0 else border)))
                 for i in range(params.ta_n)]
        moves.append(("BO", lambda: _bo(instance, T, A, params)))
        moves.append(("BW", lambda: _bw(instance, T, A, inner, border)))
        moves.append(("TSR", lambda: _tsr(instance, T, A, inner_arr, border_arr)))
        moves += [("RO", lambda: _ro(instance, T, A, params, rng))] * params.clique_n
        for tag, fn in moves:
            if out_of_time():
                stop = True
                break
            step(tag, fn)
        cycles += 1
        if _matched(rc, T, A) > at_cycle_start:
            idle = 0
        else:
            idle += 1
            # an unchanged board is a local minimum of every neighbourhood
            unchanged = np.array_equal(T, snapshot[0]) and np.array_equal(A, snapshot[1])
            if unchanged or idle >= params.patience:
                break
        if params.max_cycles is not None and cycles >= params.max_cycles:
            break
    return Board(instance.n, T, A), trace
