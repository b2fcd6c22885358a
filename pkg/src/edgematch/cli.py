"""Command-line front end: ``edgematch <command> ...``."""
from __future__ import annotations

import argparse
import sys
import time
from typing import Optional

from .bench import PIPELINES, RunConfig, aggregate, format_table, run_bench, run_pipeline
from .clique import build_conflict_graph, write_dimacs
from .core import Board, score_partial
from .instance_io import (GeneratorParams, ParseError, generate, load_instance, read_solution,
                          write_instance, write_solution)
from .region import Region, RegionProblem, export_lp

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seeds(text: str) -> list[int]:
    """``3``, ``0-9`` or ``1,4,7``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part.strip()[1:]:
                a, b = part.split("-", 1)
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _region_arg(p):
    p.add_argument("--region", nargs=4, type=int, metavar=("R1", "C1", "R2", "C2"),
                   help="1-based inclusive rectangle (default: whole board)")
    p.add_argument("--context", help="solution file holding the fixed tiles outside the region")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="edgematch", description="Edge-matching puzzle toolkit.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance with a planted solution")
    g.add_argument("-n", type=int, required=True)
    g.add_argument("--inner-colors", type=int)
    g.add_argument("--border-colors", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--solution-out", help="also write the planted solution file")

    s = sub.add_parser("solve", help="run one pipeline on an instance")
    s.add_argument("instance")
    s.add_argument("--pipeline", choices=PIPELINES, default="greedy")
    s.add_argument("--strip-height", type=int, choices=(1, 2), default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-limit", type=float, default=60.0, help="local search seconds")
    s.add_argument("--cycles", type=int, help="cap on local search cycles")
    s.add_argument("--bt-timeout", type=float, default=60.0, help="backtracking seconds")
    s.add_argument("--q", type=int, default=1_000_000, help="clique selections")
    s.add_argument("--region-nodes", type=int, help="search nodes per region")
    s.add_argument("-o", "--output", help="solution file")
    s.add_argument("--trace", help="local search trace CSV")

    sc = sub.add_parser("score", help="check and score a solution file")
    sc.add_argument("instance")
    sc.add_argument("solution")

    ec = sub.add_parser("export-clique", help="write the conflict graph in DIMACS format")
    ec.add_argument("instance")
    ec.add_argument("-o", "--output", required=True)
    _region_arg(ec)

    el = sub.add_parser("export-lp", help="write the region model in LP format")
    el.add_argument("instance")
    el.add_argument("-o", "--output", required=True)
    _region_arg(el)

    b = sub.add_parser("bench", help="multi-seed runs with a summary table and CSV")
    src = b.add_mutually_exclusive_group()
    src.add_argument("-n", type=int, help="generate one instance per seed")
    src.add_argument("--instance", action="append", help="instance file (repeatable)")
    b.add_argument("--pipeline", action="append", choices=PIPELINES)
    b.add_argument("--seeds", type=_seeds, default=list(range(10)))
    b.add_argument("--strip-height", type=int, choices=(1, 2), default=1)
    b.add_argument("--time-limit", type=float, default=60.0)
    b.add_argument("--cycles", type=int)
    b.add_argument("--bt-timeout", type=float, default=60.0)
    b.add_argument("--q", type=int, default=1_000_000)
    b.add_argument("--region-nodes", type=int)
    b.add_argument("--workers", type=int)
    b.add_argument("--csv", help="per-run CSV output")
    b.add_argument("--from-csv", help="only re-aggregate an existing per-run CSV")
    return ap


def _board_score(inst, board: Board) -> str:
    sc = score_partial(inst, board)
    holes = inst.n_tiles - board.n_placed
    text = f"matched {sc.matched_inner}/{inst.optimum}, frame {sc.frame_violations}"
    return text + (f", holes {holes}" if holes else "")


def _cmd_generate(a) -> int:
    inst = generate(GeneratorParams(a.n, a.inner_colors, a.border_colors, a.seed))
    write_instance(inst, a.output)
    if a.solution_out:
        write_solution(inst.planted, a.solution_out)
    print(f"wrote {a.output} ({inst.name})")
    return EXIT_OK


def _cmd_solve(a) -> int:
    inst = load_instance(a.instance)
    res = run_pipeline(inst, a.pipeline, a.seed, a.strip_height, a.time_limit, a.bt_timeout,
                       a.q, a.region_nodes, a.cycles)
    if a.output:
        write_solution(res.board, a.output)
    if a.trace and res.trace is not None:
        res.trace.to_csv(a.trace)
    print(f"{_board_score(inst, res.board)} ({res.time_ms / 1000:.2f} s)")
    return EXIT_OK


def _cmd_score(a) -> int:
    inst = load_instance(a.instance)
    board = read_solution(a.solution, inst)
    print(_board_score(inst, board))
    return EXIT_OK


def _scope(a):
    inst = load_instance(a.instance)
    context = read_solution(a.context, inst) if a.context else Board.empty(inst.n)
    region = Region(*a.region) if a.region else Region.full(inst.n)
    region.validate(inst.n)
    context = context.without(region.cells())
    return inst, region, context


def _cmd_export_clique(a) -> int:
    inst, region, context = _scope(a)
    graph = build_conflict_graph(inst, region, context)
    write_dimacs(graph, a.output)
    print(f"wrote {a.output}: {graph.node_count} nodes, {graph.edge_count} edges")
    return EXIT_OK


def _cmd_export_lp(a) -> int:
    inst, region, context = _scope(a)
    problem = RegionProblem(inst, region, context)
    problem.validate()
    export_lp(problem, a.output)
    print(f"wrote {a.output}")
    return EXIT_OK


def _cmd_bench(a) -> int:
    if a.from_csv:
        from .bench import read_runs_csv
        print(format_table(aggregate(read_runs_csv(a.from_csv))))
        return EXIT_OK
    if a.n is None and not a.instance:
        raise ValueError("bench needs -n or --instance")
    cfg = RunConfig(pipelines=tuple(a.pipeline or ["greedy"]), seeds=tuple(a.seeds),
                    instances=tuple(a.instance or ()), generate_n=a.n,
                    strip_height=a.strip_height, ls_time=a.time_limit, bt_timeout=a.bt_timeout,
                    q=a.q, region_nodes=a.region_nodes, ls_cycles=a.cycles, workers=a.workers)
    t0 = time.perf_counter()
    rows, _ = run_bench(cfg, a.csv)
    print(format_table(rows))
    print(f"total {time.perf_counter() - t0:.1f} s")
    return EXIT_OK


COMMANDS = {"generate": _cmd_generate, "solve": _cmd_solve, "score": _cmd_score,
            "export-clique": _cmd_export_clique, "export-lp": _cmd_export_lp, "bench": _cmd_bench}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    if not a.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[a.command](a)
    except (OSError, ParseError) as e:
        print(f"edgematch: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"edgematch: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
