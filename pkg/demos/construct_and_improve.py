"""
Building a board strip by strip, then improving it
===================================================

Each strip is solved exactly given the strips above it.  Local search then
cycles through its move types and keeps only moves that do not lose edges.
"""

# %%
from collections import Counter

import numpy as np

from edgematch import (BacktrackLog, Budget, Decomposition, GeneratorParams, LSParams,
                       backtrack_construct, generate, greedy_construct, random_board,
                       run_multi_neighbourhood, score_board)

inst = generate(GeneratorParams(8, seed=2))
print(inst, "optimum", inst.optimum)

# %%
# Greedy with one-row and two-row strips.
for h in (1, 2):
    board = greedy_construct(inst, Decomposition.strips(8, h), Budget(nodes=2_000_000))
    print(f"greedy {h}x8: {score_board(inst, board).matched_inner}")

# %%
# Backtracking only accepts strips without a mismatch; when a strip has no
# such filling, the strip above is solved again with its last answer cut off.
log = BacktrackLog()
board = backtrack_construct(inst, Decomposition.strips(8, 1), timeout=10,
                            per_region_budget=Budget(nodes=2_000_000), trace=log)
print(f"backtrack: {score_board(inst, board).matched_inner}, {len(log.events)} backtracks, "
      f"deepest strip {log.deepest}, greedy finish: {log.completed_by_greedy}")

# %%
# Local search from a random board.  The trace records every move.
start = random_board(inst, np.random.default_rng(0))
final, trace = run_multi_neighbourhood(inst, start, LSParams(time_limit=20, seed=0))
print(f"random start {score_board(inst, start).matched_inner} -> {score_board(inst, final).matched_inner}")

gain = Counter()
for r in trace.records:
    gain[r.tag] += r.after - r.before
print("edges gained per move type:", dict(gain))
print("monotone:", trace.is_monotone())
