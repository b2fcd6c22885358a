import pytest

from edgematch.core import Board, Instance, score_board, score_partial
from edgematch.heuristics import (BacktrackLog, Decomposition, backtrack_construct,
                                  greedy_construct)
from edgematch.instance_io import GeneratorParams, generate
from edgematch.region import Budget, Region

import oracles

# top strip has exactly two zero-defect fillings; only the second one
# leaves a zero-defect filling for the middle strip (found by random search,
# confirmed below with the enumeration oracle)
TWO_FILLINGS = [[0, 6, 1, 4], [6, 0, 0, 5], [6, 0, 0, 4], [1, 1, 2, 1], [0, 6, 2, 5],
                [1, 5, 0, 5], [0, 4, 2, 3], [0, 0, 6, 3], [0, 3, 3, 0]]


def test_strip_decomposition():
    d = Decomposition.strips(5, 2)
    assert [r.size for r in d] == [10, 10, 5]
    assert Decomposition.strips(4, 1).regions[0] == Region(1, 1, 1, 4)
    with pytest.raises(ValueError, match="overlap"):
        Decomposition(2, (Region(1, 1, 2, 2), Region(1, 1, 1, 1)))
    with pytest.raises(ValueError, match="cover"):
        Decomposition(2, (Region(1, 1, 1, 2),))


def test_greedy_small_board():
    inst = generate(GeneratorParams(3, seed=4))
    board = greedy_construct(inst, Decomposition.strips(3, 1))
    board.validate(inst)
    sc = score_board(inst, board)
    assert sc.matched_inner <= 12 and sc.frame_violations == 0


def test_greedy_steps_are_feasible_and_injective():
    inst = generate(GeneratorParams(6, seed=1))
    dec = Decomposition.strips(6, 2)
    # replay step by step through the resume interface
    partial = Board.empty(6)
    for i in range(len(dec)):
        full = greedy_construct(inst, dec, start=partial, first=i)
        partial = full.with_placements({c: None for r in dec.regions[i + 1:] for c in r.cells()})
        partial.validate(inst)
        assert score_partial(inst, partial).frame_violations == 0
    assert partial == greedy_construct(inst, dec)


def test_greedy_is_deterministic():
    inst = generate(GeneratorParams(7, seed=3))
    dec = Decomposition.strips(7, 1)
    assert greedy_construct(inst, dec) == greedy_construct(inst, dec)


@pytest.mark.parametrize("seed", range(5))
def test_zero_timeout_backtrack_is_greedy(seed):
    inst = generate(GeneratorParams(6, seed=seed))
    dec = Decomposition.strips(6, 1)
    log = BacktrackLog()
    assert backtrack_construct(inst, dec, 0, trace=log) == greedy_construct(inst, dec)
    assert log.completed_by_greedy


def test_backtrack_solves_four_by_four():
    inst = generate(GeneratorParams(4, seed=1))
    log = BacktrackLog()
    board = backtrack_construct(inst, Decomposition.strips(4, 1), 60, trace=log)
    assert score_board(inst, board).matched_inner == 24
    assert not log.timed_out and not log.completed_by_greedy


def _as_oracle(placements):
    return {cell: (p.tile, p.rotation) for cell, p in placements.items()}


def test_exclusion_moves_to_the_second_filling():
    inst = Instance(3, TWO_FILLINGS, 2, 4)
    Z = [[0] * 3 for _ in range(3)]
    top = [(0, 0), (0, 1), (0, 2)]
    middle = [(1, 0), (1, 1), (1, 2)]
    fills = oracles.zero_fillings(inst.colors, 3, Z, Z, top, range(1, 10))
    assert len(fills) == 2

    def extends(f):
        T, A = [row[:] for row in Z], [row[:] for row in Z]
        for (r, c), (t, a) in f.items():
            T[r][c], A[r][c] = t, a
        rest = [t for t in range(1, 10) if t not in {x[0] for x in f.values()}]
        return bool(oracles.zero_fillings(inst.colors, 3, T, A, middle, rest))

    log = BacktrackLog()
    board = backtrack_construct(inst, Decomposition.strips(3, 1), 30, trace=log)
    board.validate(inst)
    first, second = [_as_oracle(p) for lvl, p in log.accepted if lvl == 0][:2]
    assert {tuple(sorted(f.items())) for f in (first, second)} == \
        {tuple(sorted(f.items())) for f in fills}
    assert not extends(first) and extends(second)
    ev = log.events[0]
    assert ev.level == 0 and [_as_oracle(x) for x in ev.excluded] == [first]
    # the middle strip was then solved on top of the second filling
    assert any(lvl == 1 for lvl, _ in log.accepted)


@pytest.mark.parametrize("seed", range(3))
def test_exclusions_are_distinct(seed):
    inst = generate(GeneratorParams(5, 3, 2, seed=seed))
    log = BacktrackLog()
    backtrack_construct(inst, Decomposition.strips(5, 1), 5, trace=log)
    for ev in log.events:
        keys = [tuple(sorted((c, p.tile, p.rotation) for c, p in x.items())) for x in ev.excluded]
        assert len(keys) == len(set(keys))


def test_backtrack_timeout_completes_greedily():
    inst = generate(GeneratorParams(8, seed=0))
    log = BacktrackLog()
    board = backtrack_construct(inst, Decomposition.strips(8, 1), 1.0,
                                per_region_budget=Budget(nodes=200_000), trace=log)
    assert board.is_complete
    board.validate(inst)
    assert score_board(inst, board).frame_violations == 0
