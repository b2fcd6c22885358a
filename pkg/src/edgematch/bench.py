"""Pipelines and the multi-seed experiment harness."""
from __future__ import annotations

import csv
import io
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .clique import CliqueParams, build_conflict_graph, max_clique_heuristic
from .core import Board, Instance, Placement, random_board, score_board
from .heuristics import Decomposition, backtrack_construct, greedy_construct
from .instance_io import GeneratorParams, generate, load_instance
from .local_search import LSParams, Trace, run_multi_neighbourhood
from .region import Budget, solve_cells

PIPELINES = ("greedy", "backtrack", "ls-random", "greedy+ls", "backtrack+ls", "clique-full")
LS_PIPELINES = ("ls-random", "greedy+ls", "backtrack+ls")
CSV_FIELDS = ["instance", "pipeline", "region", "seed", "matched", "optimal", "frame", "time_ms", "note"]


@dataclass(frozen=True)
class RunConfig:
    pipelines: tuple = ("greedy",)
    seeds: tuple = (0,)
    instances: tuple = ()              # instance file paths
    generate_n: Optional[int] = None   # else: one generated instance per seed
    inner_colors: Optional[int] = None
    border_colors: Optional[int] = None
    strip_height: int = 1
    ls_time: float = 60.0
    bt_timeout: float = 60.0
    q: int = 1_000_000
    region_nodes: Optional[int] = None
    ls_cycles: Optional[int] = None
    workers: Optional[int] = None

    def __post_init__(self):
        bad = [p for p in self.pipelines if p not in PIPELINES]
        if bad:
            raise ValueError(f"unknown pipeline {bad[0]!r}")
        if not self.pipelines:
            raise ValueError("no pipeline given")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not self.instances and self.generate_n is None:
            raise ValueError("give instance files or a board size to generate")


@dataclass
class RunResult:
    instance: str
    pipeline: str
    region: str
    seed: int
    matched: int
    optimal: int
    frame: int
    time_ms: float
    note: str = ""
    board: Optional[Board] = None
    trace: Optional[Trace] = None

    def row(self) -> dict:
        return {"instance": self.instance, "pipeline": self.pipeline, "region": self.region,
                "seed": self.seed, "matched": self.matched, "optimal": self.optimal,
                "frame": self.frame, "time_ms": f"{self.time_ms:.1f}", "note": self.note}


@dataclass(frozen=True)
class ResultRow:
    instance: str
    pipeline: str
    region: str
    runs: int
    max: int
    avg: float
    min: int
    avg_time_s: float
    failures: int = 0


def region_label(pipeline: str, strip_height: int, n: int) -> str:
    if pipeline in ("ls-random", "clique-full"):
        return "-"
    return f"{min(strip_height, n)}x{n}"


def clique_full(instance: Instance, q: int, seed: int, hole_budget=None) -> Board:
    """Clique heuristic on the whole board; leftover holes filled by the
    region solver."""
    n = instance.n
    graph = build_conflict_graph(instance)
    clique = max_clique_heuristic(graph, CliqueParams(q=q, seed=seed, target_size=n * n))
    placements = {}
    for i in clique:
        node = graph.node(i)
        placements[(node.r, node.c)] = Placement(node.tile, node.rotation)
    board = Board.from_placements(n, placements)
    holes = [(r, c) for r in range(n) for c in range(n) if not board.tiles[r, c]]
    if holes:
        used = board.used_tiles()
        rest = [t for t in range(1, instance.n_tiles + 1) if t not in used]
        sol = solve_cells(instance, holes, board, rest,
                          hole_budget if hole_budget is not None else Budget(nodes=2_000_000))
        board = sol.apply(board)
    return board


def run_pipeline(instance: Instance, pipeline: str, seed: int = 0, strip_height: int = 1,
                 ls_time: Optional[float] = 60.0, bt_timeout: float = 60.0, q: int = 1_000_000,
                 region_nodes: Optional[int] = None, ls_cycles: Optional[int] = None,
                 ls_params: Optional[LSParams] = None) -> RunResult:
    """One run; the reported time covers construction plus local search."""
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    n = instance.n
    dec = Decomposition.strips(n, strip_height)
    rb = Budget(nodes=region_nodes) if region_nodes is not None else None
    t0 = time.perf_counter()
    trace = None
    if pipeline in ("greedy", "greedy+ls"):
        board = greedy_construct(instance, dec, rb)
    elif pipeline in ("backtrack", "backtrack+ls"):
        board = backtrack_construct(instance, dec, bt_timeout, rb)
    elif pipeline == "ls-random":
        board = random_board(instance, np.random.default_rng(seed))
    else:
        board = clique_full(instance, q, seed)
    if pipeline in LS_PIPELINES:
        params = ls_params or LSParams()
        params = replace(params, seed=seed, time_limit=ls_time, max_cycles=ls_cycles)
        board, trace = run_multi_neighbourhood(instance, board, params)
    elapsed = 1000 * (time.perf_counter() - t0)
    sc = score_board(instance, board)
    return RunResult(instance.name, pipeline, region_label(pipeline, strip_height, n), seed,
                     sc.matched_inner, instance.optimum, sc.frame_violations, elapsed,
                     board=board, trace=trace)


def _instance_for(cfg: RunConfig, source, seed: int) -> Instance:
    if source is None:
        return generate(GeneratorParams(cfg.generate_n, cfg.inner_colors, cfg.border_colors, seed))
    return load_instance(source)


def _job(args):
    cfg, source, pipeline, seed = args
    try:
        inst = _instance_for(cfg, source, seed)
    except Exception as e:  # recorded, never fatal for the batch
        name = os.path.splitext(os.path.basename(source))[0] if source else f"gen-n{cfg.generate_n}"
        return RunResult(name, pipeline, "-", seed, 0, 0, 0, 0.0, note=f"error: {e}")
    try:
        res = run_pipeline(inst, pipeline, seed, cfg.strip_height, cfg.ls_time, cfg.bt_timeout,
                           cfg.q, cfg.region_nodes, cfg.ls_cycles)
    except Exception as e:
        return RunResult(inst.name, pipeline, region_label(pipeline, cfg.strip_height, inst.n),
                         seed, 0, inst.optimum, 0, 0.0, note=f"error: {e}")
    res.board = None
    res.trace = None
    return res


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("EDGEMATCH_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def run_bench(cfg: RunConfig, csv_out=None) -> tuple[list[ResultRow], list[RunResult]]:
    """Run every (instance, pipeline, seed); return aggregated and per-run rows."""
    sources = list(cfg.instances) or [None]
    jobs = [(cfg, src, p, s) for src in sources for p in cfg.pipelines for s in cfg.seeds]
    workers = min(worker_count(cfg.workers), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_job, jobs))
    else:
        runs = [_job(j) for j in jobs]
    if csv_out is not None:
        write_runs_csv(runs, csv_out)
    return aggregate([r.row() for r in runs]), runs


def write_runs_csv(runs: Sequence[RunResult], sink) -> None:
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", newline="") as f:
            write_runs_csv(runs, f)
        return
    w = csv.DictWriter(sink, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in runs:
        w.writerow(r.row())


def read_runs_csv(source) -> list[dict]:
    """Rows from a path, or from CSV text (anything containing a newline)."""
    if isinstance(source, str) and "\n" in source:
        return list(csv.DictReader(io.StringIO(source)))
    with open(source, newline="") as f:
        return list(csv.DictReader(f))


_SEED_SUFFIX = re.compile(r"-s\d+$")


def family(instance_name: str) -> str:
    """Generated instances differing only in seed share one family."""
    return _SEED_SUFFIX.sub("", instance_name)


def aggregate(rows: Sequence[dict]) -> list[ResultRow]:
    """MAX/AVG/MIN matched per (instance family, pipeline, region); failed
    runs are counted but excluded from the statistics."""
    groups: dict = {}
    for r in rows:
        key = (family(r["instance"]), r["pipeline"], r["region"])
        groups.setdefault(key, []).append(r)
    out = []
    for (inst, pipe, reg), rs in groups.items():
        ok = [r for r in rs if not str(r.get("note", "")).startswith("error")]
        m = [int(r["matched"]) for r in ok]
        t = [float(r["time_ms"]) / 1000 for r in ok]
        out.append(ResultRow(inst, pipe, reg, len(ok),
                             max(m) if m else 0,
                             round(sum(m) / len(m), 2) if m else 0.0,
                             min(m) if m else 0,
                             round(sum(t) / len(t), 2) if t else 0.0,
                             len(rs) - len(ok)))
    return out


def format_table(rows: Sequence[ResultRow]) -> str:
    head = f"{'instance':<22} {'pipeline':<13} {'region':<7} {'runs':>4} {'MAX':>5} {'AVG':>8} {'MIN':>5} {'time(s)':>9}"
    lines = [head]
    for r in rows:
        lines.append(f"{r.instance:<22} {r.pipeline:<13} {r.region:<7} {r.runs:>4} {r.max:>5} "
                     f"{r.avg:>8.2f} {r.min:>5} {r.avg_time_s:>9.2f}"
                     + (f"  ({r.failures} failed)" if r.failures else ""))
    return "\n".join(lines)
