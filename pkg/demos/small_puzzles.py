"""
Small puzzles through the conflict graph
========================================

A placement of a tile at a cell with a rotation is a node; two nodes are
joined when they can sit on the same board together.  A full board with no
mismatched edge is then a clique of size n*n.
"""

# %%
import time

from edgematch import (CliqueParams, GeneratorParams, build_conflict_graph, dimacs_size, generate,
                       max_clique_heuristic, score_board)
from edgematch.bench import clique_full

# %%
# Graph sizes grow fast with the board.
for n in (3, 4, 5, 6):
    inst = generate(GeneratorParams(n, seed=1))
    g = build_conflict_graph(inst)
    print(f"{n}x{n}: {g.node_count} nodes, {g.edge_count} edges, density {g.density:.3f}")

# %%
# The DIMACS file size can be counted without building the file.
nodes, edges, nbytes = dimacs_size(generate(GeneratorParams(7, seed=0)))
print(f"7x7 graph file: {nbytes / 1e6:.0f} MB of edge lines")

# %%
# The heuristic stops as soon as it holds an n*n clique.
inst = generate(GeneratorParams(5, seed=3))
g = build_conflict_graph(inst)
t0 = time.perf_counter()
clique = max_clique_heuristic(g, CliqueParams(q=1_000_000, seed=0, target_size=25))
print(f"clique of size {len(clique)} in {time.perf_counter() - t0:.2f} s")

# %%
# The full pipeline turns the clique into a board (holes, if any, are
# filled by the exact region solver).
for seed in range(3):
    inst = generate(GeneratorParams(6, seed=seed))
    t0 = time.perf_counter()
    board = clique_full(inst, q=10_000_000, seed=seed)
    sc = score_board(inst, board)
    print(f"6x6 seed {seed}: {sc.matched_inner}/{inst.optimum} in {time.perf_counter() - t0:.1f} s")
