import itertools

import numpy as np
import pytest

from edgematch.clique import (CliqueNode, CliqueParams, ConflictGraph, DimacsError, board_clique,
                              build_conflict_graph, clique_to_partial_board, conflicting,
                              dimacs_size, dimacs_to_text, max_clique_heuristic, read_dimacs)
from edgematch.core import Board, score_partial
from edgematch.instance_io import GeneratorParams, generate
from edgematch.region import Region

import oracles


def _planted_nodes(graph, inst):
    index = graph.index_of()
    return [index[CliqueNode(p.tile, r, c, p.rotation)] for (r, c), p in inst.planted.placements()]


@pytest.mark.parametrize("n", [3, 4])
def test_adjacency_matches_pairwise_rule(n):
    inst = generate(GeneratorParams(n, seed=n + 10))
    g = build_conflict_graph(inst)
    nodes = [(x.tile, x.r, x.c, x.rotation) for x in g.nodes()]
    for i, j in itertools.combinations(range(len(nodes)), 2):
        want = oracles.compatible(inst.colors, n, nodes[i], nodes[j])
        assert g.adj[i, j] == g.adj[j, i] == want
        assert conflicting(inst, g.node(i), g.node(j)) == (not want)
    assert not g.adj.diagonal().any()


def test_nodes_are_frame_feasible_placements():
    inst = generate(GeneratorParams(5, seed=0))
    g = build_conflict_graph(inst)
    for x in g.nodes():
        assert oracles.frame_ok(inst.colors, 5, x.tile, x.rotation, x.r, x.c)
    # at least the planted placements are present
    assert g.node_count >= 25


def test_graph_sizes_small_boards():
    sizes = {}
    for n in (3, 4, 5, 6):
        inst = generate(GeneratorParams(n, seed=1))
        g = build_conflict_graph(inst)
        sizes[n] = (g.node_count, round(g.density, 3))
    # [DERIVED] frozen from this generator; [PAPER] 6x6 density is 81.1%
    assert sizes[6][1] == pytest.approx(0.811, abs=0.01)
    assert sizes[3][0] == 36 and sizes[4][0] == 144


@pytest.mark.parametrize("n", [3, 4, 5])
def test_planted_solution_is_full_clique(n):
    inst = generate(GeneratorParams(n, seed=7))
    g = build_conflict_graph(inst)
    idx = _planted_nodes(g, inst)
    assert len(idx) == n * n and g.is_clique(idx)
    board = clique_to_partial_board(inst, [g.node(i) for i in idx])
    assert board == inst.planted


def test_clique_to_board_rejects_conflicts():
    inst = generate(GeneratorParams(3, seed=0))
    p = inst.planted[(0, 0)]
    a = CliqueNode(p.tile, 0, 0, p.rotation)
    b = CliqueNode(p.tile, 2, 2, p.rotation)
    with pytest.raises(ValueError, match="conflicting nodes"):
        clique_to_partial_board(inst, [a, b])


def test_partial_clique_scores_zero_unmatched():
    inst = generate(GeneratorParams(5, seed=3))
    g = build_conflict_graph(inst)
    best = max_clique_heuristic(g, CliqueParams(q=20_000, seed=1))
    board = clique_to_partial_board(inst, [g.node(i) for i in best])
    sc = score_partial(inst, board)
    assert sc.unmatched_inner == 0 and sc.frame_violations == 0


def test_heuristic_is_deterministic_and_monotone_in_budget():
    inst = generate(GeneratorParams(6, seed=5))
    g = build_conflict_graph(inst)
    a = max_clique_heuristic(g, CliqueParams(q=50_000, seed=3))
    b = max_clique_heuristic(g, CliqueParams(q=50_000, seed=3))
    assert a == b
    assert g.is_clique(a)


def test_init_clique_is_kept_when_already_maximum():
    inst = generate(GeneratorParams(4, seed=2))
    g = build_conflict_graph(inst)
    idx = _planted_nodes(g, inst)
    out = max_clique_heuristic(g, CliqueParams(q=10, target_size=16), init=idx)
    assert out == sorted(idx)


def test_scoped_graph_respects_context():
    inst = generate(GeneratorParams(6, seed=4))
    region = Region(2, 2, 4, 4)
    ctx = inst.planted.without(region.cells())
    tiles = [int(inst.planted.tiles[c]) for c in region.cells()]
    g = build_conflict_graph(inst, region, ctx, tiles)
    cells = set(region.cells())
    for x in g.nodes():
        assert (x.r, x.c) in cells and x.tile in tiles
    idx = board_clique(g, inst.planted)
    assert len(idx) == 9 and g.is_clique(idx)
    with pytest.raises(ValueError, match="overlaps"):
        build_conflict_graph(inst, region, inst.planted)


@pytest.mark.parametrize("seed", range(20))
def test_dimacs_round_trip(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    inst = generate(GeneratorParams(n, seed=seed))
    g = build_conflict_graph(inst)
    text = dimacs_to_text(g)
    back = read_dimacs(text)
    assert back.node_count == g.node_count and back.edge_count == g.edge_count
    assert np.array_equal(back.adj, g.adj)
    assert back.nodes() == g.nodes()
    # a graph without legend survives too
    again = read_dimacs(dimacs_to_text(back))
    assert np.array_equal(again.adj, g.adj)


def test_dimacs_header_and_errors():
    inst = generate(GeneratorParams(3, seed=0))
    g = build_conflict_graph(inst)
    text = dimacs_to_text(g)
    assert f"p edge {g.node_count} {g.edge_count}" in text
    assert "c node 1 = t" in text
    with pytest.raises(DimacsError):
        read_dimacs("p edge 2 1\ne 1 3\n")
    with pytest.raises(DimacsError):
        read_dimacs("e 1 2\n")
    with pytest.raises(DimacsError, match="declares"):
        read_dimacs("p edge 3 2\ne 1 2\n")
    small = ConflictGraph.from_edges(3, [(0, 1), (1, 2)])
    assert small.edge_count == 2 and not small.is_clique([0, 1, 2])


def test_dimacs_size_counts_match_the_file():
    inst = generate(GeneratorParams(4, seed=1))
    g = build_conflict_graph(inst)
    nodes, edges, nbytes = dimacs_size(inst)
    text = dimacs_to_text(g)
    edge_text = "".join(ln + "\n" for ln in text.splitlines() if ln.startswith("e "))
    assert (nodes, edges, nbytes) == (g.node_count, g.edge_count, len(edge_text))


@pytest.mark.slow
def test_ten_by_ten_graph_file_exceeds_a_gigabyte():
    # [PAPER] the 10x10 DIMACS file is over a gigabyte
    _, _, nbytes = dimacs_size(generate(GeneratorParams(10, seed=0)))
    assert nbytes > 1e9
