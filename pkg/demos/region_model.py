"""
The region model and the assignment step
========================================

A region is a rectangle solved exactly while the rest of the board stays
fixed.  The same model can be written out in LP format for an external MILP
solver, and checked here at any 0/1 point.
"""

# %%
import numpy as np

from edgematch import (GeneratorParams, Region, RegionProblem, generate, hungarian_solve,
                       random_board, reinsert, score_board, solve_region)
from edgematch.region import check_lp, export_lp, solution_ones

inst = generate(GeneratorParams(6, seed=4))

# %%
# Empty a 2x3 block of the planted board and solve it back.
region = Region(2, 2, 3, 4)               # 1-based, inclusive
context = inst.planted.without(region.cells())
sol = solve_region(RegionProblem(inst, region, context))
print(sol.status.name, "unmatched", sol.objective, "nodes", sol.nodes)

# %%
# The LP file for the same problem; the planted placements are a feasible
# point with objective 0.
text = export_lp(RegionProblem(inst, region, context))
print(len(text.splitlines()), "lines")
placed = {cell: inst.planted[cell] for cell in region.cells()}
print(check_lp(text, solution_ones(placed)))

# %%
# Assignment: a small cost matrix, ties broken towards the smallest
# permutation.
costs = np.array([[4, 1, 3], [2, 0, 5], [3, 2, 2]])
print(hungarian_solve(costs))

# %%
# Reinsertion: lift non-adjacent tiles off a random board and put them back
# in the best order and rotations.
board = random_board(inst, np.random.default_rng(1))
slots = [(1, 1), (1, 3), (3, 1), (3, 3), (2, 2), (4, 4)]
better, total = reinsert(inst, board, slots)
print(score_board(inst, board).matched_inner, "->", score_board(inst, better).matched_inner)
