import numpy as np
import pytest

from edgematch.core import Board, Placement, score_board
from edgematch.instance_io import GeneratorParams, generate
from edgematch.region import (Budget, Mode, Region, RegionProblem, Status, check_lp, export_lp,
                              local_cost, parse_lp, ring_cells, solution_ones, solve_border,
                              solve_cells, solve_region)

import oracles
from cases import region_case


@pytest.mark.parametrize("seed", range(40))
def test_region_objective_matches_brute_force(seed):
    rng = np.random.default_rng(1000 + seed)
    inst, region, context, cand = region_case(rng)
    sol = solve_region(RegionProblem(inst, region, context, cand))
    want = oracles.brute_force_region(inst.colors, inst.n, context.tiles, context.rotations,
                                      region.cells(), cand)
    if want is None:
        assert sol.status is Status.INFEASIBLE
        return
    assert sol.status is Status.OPTIMAL
    assert sol.objective == want
    # the returned placements really have that cost
    board = sol.apply(context)
    assert local_cost(inst, board, region.cells()) == want
    assert {p.tile for p in sol.placements.values()} <= set(cand)


def test_region_examples():
    inst = generate(GeneratorParams(4, seed=5))
    planted = inst.planted
    region = Region(2, 2, 3, 3)
    ctx = planted.without(region.cells())
    sol = solve_region(RegionProblem(inst, region, ctx))
    assert sol.objective == 0 and sol.status is Status.OPTIMAL
    zero = solve_region(RegionProblem(inst, region, ctx, mode=Mode.ZERO_DEFECT_ONLY))
    assert zero.status is Status.OPTIMAL and zero.objective == 0
    # excluding every zero-defect filling proves infeasibility
    excluded = []
    while True:
        s = solve_region(RegionProblem(inst, region, ctx, excluded=list(excluded),
                                       mode=Mode.ZERO_DEFECT_ONLY))
        if s.status is Status.INFEASIBLE:
            break
        assert all(s.placements != e for e in excluded)
        excluded.append(s.placements)
        assert len(excluded) < 50
    assert excluded


def test_full_board_zero_defect_solve():
    inst = generate(GeneratorParams(5, seed=2))
    sol = solve_region(RegionProblem(inst, Region.full(5), Board.empty(5), mode=Mode.ZERO_DEFECT_ONLY))
    board = sol.apply(Board.empty(5))
    assert score_board(inst, board).matched_inner == 40


def test_region_validation():
    inst = generate(GeneratorParams(3, seed=0))
    with pytest.raises(ValueError, match="overlaps"):
        RegionProblem(inst, Region(1, 1, 1, 1), inst.planted).validate()
    with pytest.raises(ValueError):
        Region(0, 1, 2, 2).validate(3)
    ctx = inst.planted.without([(0, 0), (0, 1)])
    with pytest.raises(ValueError, match="candidate"):
        RegionProblem(inst, Region(1, 1, 1, 2), ctx, candidates=[int(inst.planted.tiles[0, 0])]).validate()


def test_node_budget_is_deterministic_and_returns_incumbent():
    inst = generate(GeneratorParams(7, seed=4))
    cells = [(r, c) for r in range(7) for c in range(7)]
    a = solve_cells(inst, cells, Board.empty(7), range(1, 50), Budget(nodes=20_000))
    b = solve_cells(inst, cells, Board.empty(7), range(1, 50), Budget(nodes=20_000))
    assert a.timed_out and a.status is Status.TIMEOUT_BEST_KNOWN
    assert a.placements == b.placements and a.objective == b.objective
    assert len(a.placements) == 49


def test_ring_cells_walks_the_border_once():
    for n in (2, 3, 6):
        ring = ring_cells(n)
        assert len(ring) == len(set(ring)) == 4 * (n - 1)
        for (r1, c1), (r2, c2) in zip(ring, ring[1:] + ring[:1]):
            assert abs(r1 - r2) + abs(c1 - c2) == 1


def _swap(board, p, q, inst):
    from edgematch.core import frame_feasible
    T, A = board.tiles.copy(), board.rotations.copy()
    T[p], T[q] = T[q], T[p]
    for cell in (p, q):
        A[cell] = next(a for a in range(4) if frame_feasible(inst, int(T[cell]), a, *cell))
    return Board(board.n, T, A)


def test_solve_border_repairs_and_never_worsens():
    inst = generate(GeneratorParams(6, seed=8))
    assert solve_border(inst, inst.planted) is inst.planted
    broken = _swap(inst.planted, (0, 2), (5, 3), inst)
    fixed = solve_border(inst, broken, Budget(nodes=5_000_000))
    assert score_board(inst, fixed).matched_inner == 60
    # starved budget: still at least as good as the input
    inst10 = generate(GeneratorParams(10, seed=1))
    rng = np.random.default_rng(0)
    from edgematch.core import random_board
    start = random_board(inst10, rng)
    out = solve_border(inst10, start, Budget(nodes=1000))
    assert score_board(inst10, out).matched_inner >= score_board(inst10, start).matched_inner
    assert np.array_equal(out.tiles[1:-1, 1:-1], start.tiles[1:-1, 1:-1])


# --- LP export -------------------------------------------------------------


def _lp_size(inst):
    model = parse_lp(export_lp(RegionProblem(inst, Region.full(inst.n), Board.empty(inst.n))))
    return model.n_variables, model.n_constraints


@pytest.mark.parametrize("n,li,lb,variables,constraints", [
    (3, 2, 2, 336, 126), (4, 3, 2, 1048, 288), (5, 5, 2, 2540, 630), (6, 6, 2, 5244, 1056),
])
def test_full_model_size_matches_published_counts(n, li, lb, variables, constraints):
    # [PAPER] variable/constraint rows of the MILP size table; palettes chosen
    # so that L gives the published constraint counts
    inst = generate(GeneratorParams(n, li, lb, seed=0))
    assert _lp_size(inst) == (variables, constraints)
    assert variables == 4 * n ** 4 + 2 * n * (n - 1)
    assert constraints == 2 * n * n + 4 * (li + lb) * n * (n - 1) + 4 * n


@pytest.mark.parametrize("n", [3, 4])
def test_lp_planted_point_is_feasible_with_zero_objective(n):
    inst = generate(GeneratorParams(n, seed=n))
    text = export_lp(RegionProblem(inst, Region.full(n), Board.empty(n)))
    res = check_lp(text, solution_ones(dict(inst.planted.placements())))
    assert res.feasible and res.objective == 0


def test_lp_objective_counts_defects_and_flags_violations():
    inst = generate(GeneratorParams(4, seed=1))
    broken = _swap(inst.planted, (1, 1), (2, 2), inst)
    text = export_lp(RegionProblem(inst, Region.full(4), Board.empty(4)))
    res = check_lp(text, solution_ones(dict(broken.placements())))
    assert res.feasible
    assert res.objective == score_board(inst, broken).unmatched_inner
    pl = dict(inst.planted.placements())
    pl[(0, 0)] = Placement(pl[(0, 0)].tile, (pl[(0, 0)].rotation + 1) % 4)
    bad = check_lp(text, solution_ones(pl))
    assert not bad.feasible and any(v.startswith("frame") for v in bad.violated)


def test_lp_region_with_context_and_cuts():
    inst = generate(GeneratorParams(4, seed=2))
    region = Region(2, 2, 3, 3)
    ctx = inst.planted.without(region.cells())
    planted_part = {cell: inst.planted[cell] for cell in region.cells()}
    problem = RegionProblem(inst, region, ctx, excluded=[planted_part])
    text = export_lp(problem)
    assert "cut_1" in text
    res = check_lp(text, solution_ones(planted_part))
    assert res.violated == ["cut_1"]
    problem.excluded = []
    assert check_lp(export_lp(problem), solution_ones(planted_part)).objective == 0
