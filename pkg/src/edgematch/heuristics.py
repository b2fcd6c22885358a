"""Constructive heuristics: region-by-region greedy and backtracking."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import Board, Instance
from .region import Budget, Mode, Region, Status, solve_cells

log = logging.getLogger(__name__)

# roughly 10 s / 30 s of search at the kernel's usual speed
SMALL_REGION_NODES = 24_000_000
LARGE_REGION_NODES = 72_000_000


def default_region_budget(n: int) -> Budget:
    return Budget(nodes=SMALL_REGION_NODES if n <= 12 else LARGE_REGION_NODES)


@dataclass(frozen=True)
class Decomposition:
    n: int
    regions: tuple

    def __post_init__(self):
        seen: set = set()
        for reg in self.regions:
            reg.validate(self.n)
            cells = set(reg.cells())
            if cells & seen:
                raise ValueError("regions overlap")
            seen |= cells
        if len(seen) != self.n * self.n:
            raise ValueError("regions do not cover the board")

    @classmethod
    def strips(cls, n: int, height: int = 1) -> "Decomposition":
        """Full-width horizontal strips from the top; the last may be shorter."""
        if height < 1:
            raise ValueError("strip height must be positive")
        regs = []
        for r0 in range(0, n, height):
            regs.append(Region.from_zero_based(r0, 0, min(height, n - r0), n))
        return cls(n, tuple(regs))

    def __len__(self):
        return len(self.regions)

    def __iter__(self):
        return iter(self.regions)


def _unused(instance: Instance, board: Board) -> list[int]:
    used = board.used_tiles()
    return [t for t in range(1, instance.n_tiles + 1) if t not in used]


def greedy_construct(instance: Instance, decomposition: Decomposition,
                     per_region_budget=None, start: Optional[Board] = None,
                     first: int = 0) -> Board:
    """Fill the regions in order, each optimally (within budget) given the
    ones before it.  ``start``/``first`` resume from a partial board."""
    budget = Budget.coerce(per_region_budget) if per_region_budget is not None \
        else default_region_budget(instance.n)
    board = start if start is not None else Board.empty(instance.n)
    for reg in decomposition.regions[first:]:
        cells = reg.cells()
        sol = solve_cells(instance, cells, board, _unused(instance, board), budget)
        if not sol.placements:
            raise RuntimeError(f"no placement found for region {reg}")
        board = sol.apply(board)
    return board


@dataclass
class BacktrackEvent:
    """Level ``level`` (0-based) had to give up its current solution."""
    level: int
    excluded: list            # the level's excluded placement sets after the event
    budget_driven: bool       # the child failed by budget, not by proof


@dataclass
class BacktrackLog:
    events: list = field(default_factory=list)
    accepted: list = field(default_factory=list)   # (level, placements) in order
    deepest: int = 0          # regions completed in the best partial board
    timed_out: bool = False
    completed_by_greedy: bool = False


def _as_deadline(timeout):
    if isinstance(timeout, Budget):
        return timeout.seconds
    return None if timeout is None else float(timeout)


def backtrack_construct(instance: Instance, decomposition: Decomposition, timeout=60.0,
                        per_region_budget=None, trace: Optional[BacktrackLog] = None) -> Board:
    """Zero-defect regions with backtracking; greedy completion on timeout.

    When region i admits no zero-defect filling, region i-1 excludes its
    current solution and is solved again.  If ``timeout`` (seconds) runs out,
    the deepest partial board reached is completed greedily.
    """
    trace = trace if trace is not None else BacktrackLog()
    seconds = _as_deadline(timeout)
    region_budget = Budget.coerce(per_region_budget) if per_region_budget is not None \
        else default_region_budget(instance.n)
    if seconds is not None and seconds <= 0:
        trace.timed_out = True
        trace.completed_by_greedy = True
        return greedy_construct(instance, decomposition, region_budget)

    t0 = time.perf_counter()
    K = len(decomposition)
    regions = decomposition.regions
    sols: list = [None] * K
    excluded: list = [[] for _ in range(K)]
    boards: list = [Board.empty(instance.n)] + [None] * K  # boards[i]: levels < i placed
    deepest = (0, boards[0])
    i = 0
    while i < K:
        left = None if seconds is None else seconds - (time.perf_counter() - t0)
        if left is not None and left <= 0:
            trace.timed_out = True
            break
        budget = Budget(seconds=left if region_budget.seconds is None or left is None
                        else min(left, region_budget.seconds),
                        nodes=region_budget.nodes)
        base = boards[i]
        sol = solve_cells(instance, regions[i].cells(), base, _unused(instance, base),
                          budget, Mode.ZERO_DEFECT_ONLY, excluded=excluded[i])
        if sol.status is Status.OPTIMAL:
            for old in excluded[i]:
                if old == sol.placements:
                    raise AssertionError("solver returned an excluded solution")
            sols[i] = sol.placements
            trace.accepted.append((i, sol.placements))
            boards[i + 1] = sol.apply(base)
            i += 1
            if i < K:
                excluded[i] = []   # new parent solution: start afresh below it
            if i > deepest[0]:
                deepest = (i, boards[i])
            continue
        if sol.timed_out and seconds is not None and time.perf_counter() - t0 >= seconds:
            trace.timed_out = True
            break
        if i == 0:
            # nothing left to exclude at the top level
            log.info("backtracking exhausted at the first region")
            deepest = (0, boards[0])
            break
        i -= 1
        excluded[i].append(sols[i])
        if len({_key(x) for x in excluded[i]}) != len(excluded[i]):
            raise AssertionError("duplicate exclusion at level %d" % i)
        trace.events.append(BacktrackEvent(i, list(excluded[i]), sol.timed_out))
        if sol.timed_out:
            log.info("budget-driven backtrack from region %d", i + 1)
    trace.deepest = deepest[0]
    if i == K:
        return boards[K]
    trace.completed_by_greedy = True
    return greedy_construct(instance, decomposition, region_budget,
                            start=deepest[1], first=deepest[0])


def _key(placements: dict):
    return tuple(sorted((cell, p.tile, p.rotation) for cell, p in placements.items()))
