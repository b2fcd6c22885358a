"""Edge-matching puzzles: exact region search, a clique formulation and
multi-neighbourhood local search."""
from .core import (Board, Instance, Placement, Score, Tile, color_at, feasibility_mask,
                   frame_feasible, random_board, score_board, score_partial)
from .instance_io import (GeneratorParams, ParseError, generate, load_instance, read_instance,
                          read_solution, write_instance, write_solution)
from .region import (Budget, Mode, Region, RegionProblem, RegionSolution, Status, check_lp,
                     export_lp, solve_border, solve_cells, solve_region)
from .clique import (CliqueNode, CliqueParams, ConflictGraph, board_clique, build_conflict_graph,
                     clique_to_partial_board, dimacs_size, max_clique_heuristic, read_dimacs,
                     write_dimacs)
from .matching import hungarian_solve, reinsert, ta_cost_matrix
from .heuristics import BacktrackLog, Decomposition, backtrack_construct, greedy_construct
from .local_search import (LSParams, Trace, bo_move, bw_move, ro_move, run_multi_neighbourhood,
                           ta_move, tsr_move)
from .bench import RunConfig, run_bench, run_pipeline

__version__ = "0.1.0"
