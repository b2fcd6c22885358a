import time

import numpy as np
import pytest

from edgematch.core import Board, Placement, frame_feasible, random_board, score_board
from edgematch.instance_io import GeneratorParams, generate
from edgematch.local_search import (LSParams, Trace, bo_move, bw_move, pools, ro_move,
                                    run_multi_neighbourhood, ta_move, tsr_improving_move_exists,
                                    tsr_move)
from edgematch.region import Region

import oracles


def _matched(inst, board):
    return score_board(inst, board).matched_inner


def _oracle_matched(inst, board):
    m, _, frame = oracles.count_edges(inst.colors, inst.n, board.tiles, board.rotations)
    assert frame == 0
    return m


def _swap(board, p, q):
    a, b = board[p], board[q]
    return board.with_placements({p: Placement(b.tile, a.rotation), q: Placement(a.tile, b.rotation)})


def test_pools_partition_the_board():
    for n in (3, 4, 7):
        inner, border = pools(n)
        assert len(set(inner) | set(border)) == n * n
        assert not set(inner) & set(border)
        assert len(border) == 4 * (n - 1)


def test_moves_leave_a_solved_board_alone():
    inst = generate(GeneratorParams(6, seed=2))
    p = LSParams(ta_k=8, clique_q=2000)
    rng = np.random.default_rng(0)
    for board in (ta_move(inst, inst.planted, p, rng, "inner"),
                  ta_move(inst, inst.planted, p, rng, "border"),
                  bw_move(inst, inst.planted), tsr_move(inst, inst.planted),
                  bo_move(inst, inst.planted, p), ro_move(inst, inst.planted, p, rng)):
        assert _matched(inst, board) == inst.optimum


def test_ta_repairs_an_inner_swap():
    inst = generate(GeneratorParams(4, seed=3))
    # the inner 2x2 has two diagonals; any sample of two slots is one of them
    board = _swap(inst.planted, (1, 1), (2, 2))
    assert _matched(inst, board) < inst.optimum
    rng = np.random.default_rng(0)
    p = LSParams(ta_k=2)
    for _ in range(30):
        before = _matched(inst, board)
        board = ta_move(inst, board, p, rng, "inner")
        assert _matched(inst, board) >= before
    assert _oracle_matched(inst, board) == inst.optimum


def test_bw_repairs_a_same_colour_cycle():
    inst = generate(GeneratorParams(6, seed=4))
    cells = [(1, 1), (1, 3), (3, 1)]          # all on the same checkerboard colour
    pl = [inst.planted[c] for c in cells]
    board = inst.planted.with_placements(
        {cells[i]: Placement(pl[(i + 1) % 3].tile, (pl[i].rotation + 1) % 4) for i in range(3)})
    assert _matched(inst, board) < inst.optimum
    fixed = bw_move(inst, board)
    assert _oracle_matched(inst, fixed) == inst.optimum


def test_tsr_undoes_a_half_turn():
    inst = generate(GeneratorParams(6, seed=5))
    p = inst.planted[(2, 3)]
    board = inst.planted.with_placements({(2, 3): Placement(p.tile, (p.rotation + 2) % 4)})
    assert _matched(inst, board) < inst.optimum
    assert tsr_improving_move_exists(inst, board)
    assert _oracle_matched(inst, tsr_move(inst, board)) == inst.optimum


@pytest.mark.parametrize("seed", range(3))
def test_tsr_reaches_a_local_optimum(seed):
    inst = generate(GeneratorParams(6, seed=seed))
    board = random_board(inst, np.random.default_rng(seed))
    out = tsr_move(inst, board)
    out.validate(inst)
    assert _matched(inst, out) >= _matched(inst, board)
    assert not tsr_improving_move_exists(inst, out)


def test_ro_restores_a_shuffled_block():
    inst = generate(GeneratorParams(10, seed=1))
    rng = np.random.default_rng(3)
    region = Region.from_zero_based(3, 3, 3, 3)
    cells = region.cells()
    tiles = [inst.planted[c].tile for c in cells]
    perm = rng.permutation(len(cells))
    board = inst.planted.with_placements(
        {c: Placement(tiles[perm[i]], int(rng.integers(4))) for i, c in enumerate(cells)})
    assert _matched(inst, board) < inst.optimum
    out = ro_move(inst, board, LSParams(clique_q=100_000), rng, region=region)
    assert _oracle_matched(inst, out) == inst.optimum


def test_ro_never_worsens():
    inst = generate(GeneratorParams(8, seed=6))
    rng = np.random.default_rng(2)
    board = random_board(inst, rng)
    p = LSParams(clique_q=5000, clique_w=4, clique_h=4)
    for _ in range(5):
        nxt = ro_move(inst, board, p, rng)
        nxt.validate(inst)
        assert _matched(inst, nxt) >= _matched(inst, board)
        board = nxt


def test_bo_never_worsens():
    inst = generate(GeneratorParams(6, seed=7))
    board = random_board(inst, np.random.default_rng(7))
    out = bo_move(inst, board, LSParams(bo_nodes=200_000))
    assert _matched(inst, out) >= _matched(inst, board)
    # inner cells are untouched
    inner, _ = pools(6)
    for c in inner:
        assert out[c] == board[c]


def test_holes_rejected():
    inst = generate(GeneratorParams(4, seed=0))
    with pytest.raises(ValueError, match="holes"):
        tsr_move(inst, inst.planted.without([(1, 1)]))


def test_params_validation():
    with pytest.raises(ValueError):
        LSParams(ta_k=1)
    with pytest.raises(ValueError):
        LSParams(time_limit=0)
    with pytest.raises(ValueError):
        LSParams(clique_q=0)


def test_solved_start_stops_after_one_cycle():
    inst = generate(GeneratorParams(5, seed=1))
    p = LSParams(ta_n=10, clique_n=3, clique_q=1000, time_limit=None)
    board, trace = run_multi_neighbourhood(inst, inst.planted, p)
    assert board == inst.planted
    assert [r.tag for r in trace.records] == ["TA"] * 10 + ["BO", "BW", "TSR"] + ["RO"] * 3


@pytest.mark.parametrize("seed", range(2))
def test_trace_is_monotone_and_frame_clean(seed):
    inst = generate(GeneratorParams(7, seed=seed))
    start = random_board(inst, np.random.default_rng(seed))
    p = LSParams(ta_n=50, clique_n=2, clique_q=5000, max_cycles=3, time_limit=None, seed=seed)
    board, trace = run_multi_neighbourhood(inst, start, p)
    board.validate(inst)
    assert trace.is_monotone()
    assert all(r.frame == 0 for r in trace.records)
    assert trace.records[0].before == _matched(inst, start)
    assert trace.records[-1].after == _oracle_matched(inst, board)
    # every placement still respects its cell type
    for (r, c), pl in board.placements():
        assert frame_feasible(inst, pl.tile, pl.rotation, r, c)


def test_same_seed_same_run():
    inst = generate(GeneratorParams(6, seed=9))
    start = random_board(inst, np.random.default_rng(1))
    p = LSParams(ta_n=40, clique_n=2, clique_q=3000, max_cycles=2, time_limit=None, seed=4)
    b1, t1 = run_multi_neighbourhood(inst, start, p)
    b2, t2 = run_multi_neighbourhood(inst, start, p)
    assert b1 == b2
    assert t1.to_csv(timing=False) == t2.to_csv(timing=False)


def test_time_limit_stops_the_run():
    inst = generate(GeneratorParams(10, seed=0))
    start = random_board(inst, np.random.default_rng(0))
    t0 = time.perf_counter()
    _, trace = run_multi_neighbourhood(inst, start, LSParams(time_limit=1.0))
    # one move may overrun the deadline; none starts after it
    assert time.perf_counter() - t0 < 10
    assert len(trace) > 0


def test_trace_csv(tmp_path):
    t = Trace()
    t.add("TA", 10, 12, 0, 1.234)
    t.add("BO", 12, 12, 0, 2.0)
    assert t.to_csv() == "tag,before,after,frame,elapsed_ms\nTA,10,12,0,1.2\nBO,12,12,0,2.0\n"
    assert t.to_csv(timing=False).splitlines()[1] == "TA,10,12,0"
    path = tmp_path / "t.csv"
    t.to_csv(str(path))
    assert path.read_text() == t.to_csv()
    assert t.is_monotone()
    t.add("TA", 11, 11, 0, 3.0)
    assert not t.is_monotone()
