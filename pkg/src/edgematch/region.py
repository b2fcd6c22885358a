"""Exact optimisation of a set of board cells with the rest of the board fixed.

This is the region-restricted edge-matching model: pick tiles from a candidate
set, place them with rotations on the region cells, respect the grey frame as
a hard constraint, and minimise the unmatched edges inside the region and
across its boundary with the fixed context.  It is solved here by a
deterministic depth-first branch-and-bound (see :mod:`edgematch._bnb`);
:func:`export_lp` writes the same model as a MILP in LP text format.
"""
from __future__ import annotations

import enum
import io
import re
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _bnb
from .core import (GREY, OFFSETS, Board, Instance, Placement, feasibility_mask,
                   opposite, outward_sides)

INF_COST = 1 << 30


@dataclass(frozen=True)
class Region:
    """Rectangle of positions, 1-based inclusive bounds."""
    r_min: int
    c_min: int
    r_max: int
    c_max: int

    def validate(self, n: int) -> None:
        if not (1 <= self.r_min <= self.r_max <= n and 1 <= self.c_min <= self.c_max <= n):
            raise ValueError(f"invalid region {self} for a {n}x{n} board")

    def cells(self) -> list[tuple[int, int]]:
        """0-based positions in row-major order."""
        return [(r - 1, c - 1) for r in range(self.r_min, self.r_max + 1)
                for c in range(self.c_min, self.c_max + 1)]

    @property
    def size(self) -> int:
        return (self.r_max - self.r_min + 1) * (self.c_max - self.c_min + 1)

    @classmethod
    def full(cls, n: int) -> "Region":
        return cls(1, 1, n, n)

    @classmethod
    def from_zero_based(cls, r0: int, c0: int, h: int, w: int) -> "Region":
        return cls(r0 + 1, c0 + 1, r0 + h, c0 + w)


class Mode(enum.Enum):
    MINIMIZE_DEFECTS = "minimize"
    ZERO_DEFECT_ONLY = "zero"


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIMEOUT_BEST_KNOWN = "timeout"


@dataclass(frozen=True)
class Budget:
    """Search effort limit.  ``nodes`` counts branch placements and is
    deterministic; ``seconds`` is a wall-clock cap.  ``None`` means unlimited."""
    seconds: Optional[float] = None
    nodes: Optional[int] = None

    @classmethod
    def coerce(cls, value) -> "Budget":
        if value is None:
            return cls()
        if isinstance(value, Budget):
            return value
        return cls(seconds=float(value))


Exclusion = dict  # {(r, c): Placement}


@dataclass
class RegionProblem:
    instance: Instance
    region: Region
    context: Board
    candidates: Optional[Sequence[int]] = None   # None: every tile not in context
    excluded: list = field(default_factory=list)  # list of {(r, c): Placement}
    mode: Mode = Mode.MINIMIZE_DEFECTS

    def cells(self) -> list[tuple[int, int]]:
        return self.region.cells()

    def candidate_tiles(self) -> list[int]:
        if self.candidates is None:
            used = self.context.used_tiles()
            return [t for t in range(1, self.instance.n_tiles + 1) if t not in used]
        return sorted(int(t) for t in self.candidates)

    def validate(self) -> None:
        self.region.validate(self.instance.n)
        cells = self.cells()
        for r, c in cells:
            if self.context.tiles[r, c]:
                raise ValueError(f"context overlaps the region at {(r + 1, c + 1)}")
        cand = self.candidate_tiles()
        clash = set(cand) & self.context.used_tiles()
        if clash:
            raise ValueError(f"candidate tiles already used in context: {sorted(clash)[:5]}")
        if len(cand) < len(cells):
            raise ValueError(f"{len(cand)} candidate tiles for {len(cells)} cells")


@dataclass
class RegionSolution:
    placements: dict             # {(r, c): Placement}, empty when infeasible
    objective: int
    status: Status
    timed_out: bool = False
    nodes: int = 0

    def apply(self, board: Board) -> Board:
        return board.with_placements(self.placements)


_MASK_CACHE: dict = {}


def _mask(instance: Instance) -> np.ndarray:
    key = id(instance)
    hit = _MASK_CACHE.get(key)
    if hit is None or hit[0] is not instance:
        if len(_MASK_CACHE) > 32:
            _MASK_CACHE.clear()
        hit = (instance, feasibility_mask(instance))
        _MASK_CACHE[key] = hit
    return hit[1]


def _edge_cost_against_context(instance, context, r, c):
    """Per side, the colour a placed context neighbour shows towards (r, c), or -1."""
    n = instance.n
    need = [-1, -1, -1, -1]
    for s, (dr, dc) in enumerate(OFFSETS):
        rr, cc = r + dr, c + dc
        if 0 <= rr < n and 0 <= cc < n and context.tiles[rr, cc]:
            need[s] = int(instance.rot_colors[context.tiles[rr, cc], context.rotations[rr, cc], opposite(s)])
    return need


def build_search(instance: Instance, cells: Sequence[tuple[int, int]], context: Board,
                 candidates: Sequence[int], excluded=(), best: int = INF_COST,
                 stop_at: Optional[int] = None) -> _bnb.Search:
    """Candidate tables and kernel state for a cell-list problem."""
    n = instance.n
    K = len(cells)
    mask = _mask(instance)
    rc = instance.rot_colors
    cand = np.array(sorted(int(t) for t in candidates), dtype=np.int64)
    index = {cell: k for k, cell in enumerate(cells)}

    per_t, per_a, per_sc = [], [], []
    dyn = np.full((K, 4), -1, dtype=np.int32)
    for k, (r, c) in enumerate(cells):
        need = _edge_cost_against_context(instance, context, r, c)
        for s, (dr, dc) in enumerate(OFFSETS):
            j = index.get((r + dr, c + dc))
            if j is not None and j < k:
                dyn[k, s] = j
        ok = mask[cand, :, r, c]  # (|cand|, 4)
        ti, ai = np.nonzero(ok)
        t = cand[ti]
        sc = np.zeros(len(t), dtype=np.int32)
        for s in range(4):
            if need[s] >= 0:
                sc += (rc[t, ai, s] != need[s]).astype(np.int32)
        per_t.append(t)
        per_a.append(ai)
        per_sc.append(sc)

    M = max((len(t) for t in per_t), default=0)
    cand_t = np.zeros((K, max(M, 1)), dtype=np.int32)
    cand_a = np.zeros((K, max(M, 1)), dtype=np.int32)
    cand_sc = np.zeros((K, max(M, 1)), dtype=np.int32)
    cand_col = np.zeros((K, max(M, 1), 4), dtype=np.int32)
    ncand = np.zeros(K, dtype=np.int32)
    minsc = np.zeros(K, dtype=np.int64)
    for k in range(K):
        m = len(per_t[k])
        ncand[k] = m
        if m:
            cand_t[k, :m] = per_t[k]
            cand_a[k, :m] = per_a[k]
            cand_sc[k, :m] = per_sc[k]
            cand_col[k, :m] = rc[per_t[k], per_a[k]]
            minsc[k] = per_sc[k].min()
    lbsuf = np.zeros(K + 1, dtype=np.int32)
    lbsuf[:K] = np.cumsum(minsc[::-1])[::-1] if K else []

    ex_t = np.zeros((len(excluded), K), dtype=np.int32)
    ex_a = np.zeros((len(excluded), K), dtype=np.int32)
    for e, sol in enumerate(excluded):
        for k, cell in enumerate(cells):
            p = sol.get(cell)
            ex_t[e, k] = p.tile if p is not None else -1
            ex_a[e, k] = p.rotation if p is not None else -1

    if stop_at is None:
        stop_at = int(lbsuf[0]) if K else 0
    return _bnb.Search(cand_t, cand_a, cand_col, cand_sc, ncand, dyn, lbsuf,
                       ex_t, ex_a, instance.n_tiles, best, stop_at)


def run_search(search: _bnb.Search, budget: Budget, need_incumbent: bool,
               chunk: int = 20000) -> bool:
    """Drive ``search`` until closed or out of budget.  Returns True if closed."""
    t0 = time.perf_counter()
    while True:
        step = chunk
        if budget.nodes is not None:
            step = max(1, min(chunk, budget.nodes - search.nodes))
        if search.step(step):
            return True
        if need_incumbent and not search.found:
            continue
        if budget.nodes is not None and search.nodes >= budget.nodes:
            return False
        if budget.seconds is not None and time.perf_counter() - t0 >= budget.seconds:
            return False


def _placements(search: _bnb.Search, cells) -> dict:
    cand_t, cand_a = search.args[0], search.args[1]
    return {cell: Placement(int(cand_t[k, search.inc[k]]), int(cand_a[k, search.inc[k]]))
            for k, cell in enumerate(cells)}


def solve_cells(instance: Instance, cells: Sequence[tuple[int, int]], context: Board,
                candidates: Sequence[int], budget=None, mode: Mode = Mode.MINIMIZE_DEFECTS,
                excluded=(), incumbent_cost: Optional[int] = None) -> RegionSolution:
    """Solve an arbitrary list of cells (searched in the given order).

    ``incumbent_cost`` makes the search accept only strictly cheaper
    assignments; if none exists the result is INFEASIBLE with no placements.
    """
    budget = Budget.coerce(budget)
    cells = list(cells)
    if not cells:
        return RegionSolution({}, 0, Status.OPTIMAL)
    if mode is Mode.ZERO_DEFECT_ONLY:
        search = build_search(instance, cells, context, candidates, excluded, best=1, stop_at=0)
        closed = run_search(search, budget, need_incumbent=False)
        if search.found:
            return RegionSolution(_placements(search, cells), 0, Status.OPTIMAL, nodes=search.nodes)
        return RegionSolution({}, 0, Status.INFEASIBLE, timed_out=not closed, nodes=search.nodes)

    best = INF_COST if incumbent_cost is None else incumbent_cost
    search = build_search(instance, cells, context, candidates, excluded, best=best)
    closed = run_search(search, budget, need_incumbent=incumbent_cost is None)
    if not search.found:
        status = Status.INFEASIBLE if closed else Status.TIMEOUT_BEST_KNOWN
        return RegionSolution({}, best if incumbent_cost is not None else 0, status,
                              timed_out=not closed, nodes=search.nodes)
    status = Status.OPTIMAL if closed else Status.TIMEOUT_BEST_KNOWN
    return RegionSolution(_placements(search, cells), search.best, status,
                          timed_out=not closed, nodes=search.nodes)


def solve_region(problem: RegionProblem, budget=None) -> RegionSolution:
    """Optimal (or best found within ``budget``) filling of a rectangular region."""
    problem.validate()
    return solve_cells(problem.instance, problem.cells(), problem.context,
                       problem.candidate_tiles(), budget, problem.mode, problem.excluded)


def local_cost(instance: Instance, board: Board, cells: Iterable[tuple[int, int]]) -> int:
    """Unmatched realised edges with at least one endpoint in ``cells``."""
    n = instance.n
    rc = instance.rot_colors
    cellset = set(cells)
    seen = set()
    cost = 0
    for r, c in cellset:
        if not board.tiles[r, c]:
            continue
        for s, (dr, dc) in enumerate(OFFSETS):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < n and 0 <= cc < n) or not board.tiles[rr, cc]:
                continue
            key = (min((r, c), (rr, cc)), max((r, c), (rr, cc)))
            if key in seen:
                continue
            seen.add(key)
            a = rc[board.tiles[r, c], board.rotations[r, c], s]
            b = rc[board.tiles[rr, cc], board.rotations[rr, cc], opposite(s)]
            cost += int(a != b)
    return cost


def ring_cells(n: int) -> list[tuple[int, int]]:
    """Border positions walked clockwise from the top-left corner."""
    if n == 1:
        return [(0, 0)]
    cells = [(0, c) for c in range(n)]
    cells += [(r, n - 1) for r in range(1, n)]
    cells += [(n - 1, c) for c in range(n - 2, -1, -1)]
    cells += [(r, 0) for r in range(n - 2, 0, -1)]
    return cells


def solve_border(instance: Instance, board: Board, budget=None) -> Board:
    """Re-place the border ring using its own tiles, inner tiles fixed.

    The current border is the initial incumbent, so the result is never
    worse than ``board``.
    """
    if not board.is_complete:
        raise ValueError("board has holes")
    ring = ring_cells(instance.n)
    current = local_cost(instance, board, ring)
    if current == 0:
        return board
    tiles = [int(board.tiles[r, c]) for r, c in ring]
    context = board.without(ring)
    sol = solve_cells(instance, ring, context, tiles, budget, incumbent_cost=current)
    if not sol.placements or sol.objective >= current:
        return board
    return sol.apply(context)


# ---------------------------------------------------------------------------
# LP export


def _var_x(t, r, c, a):
    return f"x_{t}_{r + 1}_{c + 1}_{a}"


def _var_h(r, c):
    return f"h_{r + 1}_{c + 1}"


def _var_v(r, c):
    return f"v_{r + 1}_{c + 1}"


def _write_row(out, name, terms, sense, rhs, width=8):
    """``terms`` is a list of (coef, var)."""
    parts = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        parts.append(f"{sign} {var}" if mag == 1 else f"{sign} {mag} {var}")
    if not parts:
        parts = ["0 " + "x_dummy"]
    if parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    lines = [" ".join(parts[i:i + width]) for i in range(0, len(parts), width)]
    out.write(f" {name}: " + "\n   ".join(lines) + f" {sense} {rhs}\n")


def _problem_edges(instance, cells, context):
    """Inner edges touching the region: (kind, r, c, p, q, side_p) with p=(r,c)."""
    n = instance.n
    cellset = set(cells)
    edges = []
    for r in range(n):
        for c in range(n):
            for kind, (dr, dc), side in (("h", (0, 1), 1), ("v", (1, 0), 2)):
                rr, cc = r + dr, c + dc
                if rr >= n or cc >= n:
                    continue
                p, q = (r, c), (rr, cc)
                pin, qin = p in cellset, q in cellset
                if not (pin or qin):
                    continue
                if (pin and qin) or (pin and context.tiles[q]) or (qin and context.tiles[p]):
                    edges.append((kind, r, c, p, q, side))
    return edges


def export_lp(problem: RegionProblem, sink=None) -> Optional[str]:
    """Write the region MILP in LP format; returns the text if ``sink`` is None."""
    problem.validate()
    inst = problem.instance
    L = inst.L
    rc = inst.rot_colors
    cells = problem.cells()
    cellset = set(cells)
    cand = problem.candidate_tiles()
    ctx = problem.context
    out = io.StringIO()

    def xs_with(cell, side, color):
        r, c = cell
        return [_var_x(t, r, c, a) for t in cand for a in range(4) if rc[t, a, side] == color]

    edges = _problem_edges(inst, cells, ctx)
    out.write("\\ edge matching region model\n")
    out.write("Minimize\n")
    terms = [_var_h(r, c) if kind == "h" else _var_v(r, c) for kind, r, c, *_ in edges]
    wrapped = [" + ".join(terms[i:i + 10]) for i in range(0, len(terms), 10)] or ["0 x_dummy"]
    out.write(" obj: " + "\n   + ".join(wrapped) + "\n")
    out.write("Subject To\n")

    eq_tiles = len(cand) == len(cells)
    for t in cand:
        terms = [(1, _var_x(t, r, c, a)) for r, c in cells for a in range(4)]
        _write_row(out, f"tile_{t}", terms, "=" if eq_tiles else "<=", 1)
    for r, c in cells:
        terms = [(1, _var_x(t, r, c, a)) for t in cand for a in range(4)]
        _write_row(out, f"pos_{r + 1}_{c + 1}", terms, "=", 1)

    for kind, r, c, p, q, side in edges:
        ev = _var_h(r, c) if kind == "h" else _var_v(r, c)
        sp, sq = side, opposite(side)
        if p in cellset and q in cellset:
            for l in range(1, L + 1):
                xp = xs_with(p, sp, l)
                xq = xs_with(q, sq, l)
                _write_row(out, f"{kind}a_{r + 1}_{c + 1}_{l}",
                           [(1, v) for v in xp] + [(-1, v) for v in xq] + [(-1, ev)], "<=", 0)
                _write_row(out, f"{kind}b_{r + 1}_{c + 1}_{l}",
                           [(-1, v) for v in xp] + [(1, v) for v in xq] + [(-1, ev)], "<=", 0)
        else:
            inside, outside, s_in = (p, q, sp) if p in cellset else (q, p, sq)
            fixed = int(rc[ctx.tiles[outside], ctx.rotations[outside], opposite(s_in)])
            for l in range(1, L + 1):
                xin = xs_with(inside, s_in, l)
                if l == fixed:
                    _write_row(out, f"{kind}c_{r + 1}_{c + 1}_{l}",
                               [(-1, v) for v in xin] + [(-1, ev)], "<=", -1)
                else:
                    _write_row(out, f"{kind}c_{r + 1}_{c + 1}_{l}",
                               [(1, v) for v in xin] + [(-1, ev)], "<=", 0)

    n = inst.n
    names = ("top", "right", "bottom", "left")
    for r, c in cells:
        out_sides = outward_sides(n, r, c)
        for s in range(4):
            if out_sides[s]:
                _write_row(out, f"frame_{names[s]}_{r + 1}_{c + 1}",
                           [(1, v) for v in xs_with((r, c), s, GREY)], "=", 1)

    for e, sol in enumerate(problem.excluded):
        terms = [(1, _var_x(p.tile, r, c, p.rotation)) for (r, c), p in sorted(sol.items())
                 if (r, c) in cellset]
        _write_row(out, f"cut_{e + 1}", terms, "<=", len(terms) - 1)

    out.write("Bounds\n")
    for kind, r, c, *_ in edges:
        out.write(f" 0 <= {_var_h(r, c) if kind == 'h' else _var_v(r, c)} <= 1\n")
    out.write("Binaries\n")
    xvars = [_var_x(t, r, c, a) for t in cand for r, c in cells for a in range(4)]
    for i in range(0, len(xvars), 8):
        out.write(" " + " ".join(xvars[i:i + 8]) + "\n")
    out.write("End\n")
    text = out.getvalue()
    if sink is None:
        return text
    if isinstance(sink, (str,)) or hasattr(sink, "__fspath__"):
        with open(sink, "w") as f:
            f.write(text)
    else:
        sink.write(text)
    return None


# ---------------------------------------------------------------------------
# LP checker: parses the subset of LP syntax written above


@dataclass
class LPModel:
    objective: list            # [(coef, var)]
    rows: list                 # [(name, [(coef, var)], sense, rhs)]
    bounds: dict               # var -> (lo, hi)
    binaries: list

    @property
    def n_constraints(self) -> int:
        return len(self.rows)

    @property
    def n_variables(self) -> int:
        return len(self.binaries) + len(self.bounds)


_TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d+)?)?\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_terms(expr: str) -> list:
    terms = []
    for m in _TERM.finditer(expr):
        sign, mag, var = m.groups()
        coef = float(mag) if mag else 1.0
        if sign == "-":
            coef = -coef
        if var == "x_dummy":
            continue
        terms.append((coef, var))
    return terms


def parse_lp(text: str) -> LPModel:
    section = None
    stmts: list[str] = []
    obj_text, rows, bounds, binaries = "", [], {}, []
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("\\")]

    def flush():
        nonlocal obj_text
        if not stmts:
            return
        body = " ".join(stmts)
        stmts.clear()
        if section == "obj":
            obj_text = body.split(":", 1)[1]
        elif section == "st":
            name, rest = body.split(":", 1)
            m = re.match(r"(.*?)(<=|>=|=)\s*(-?\d+(?:\.\d+)?)\s*$", rest)
            rows.append((name.strip(), _parse_terms(m.group(1)), m.group(2), float(m.group(3))))

    for ln in lines:
        key = ln.strip().lower()
        if key in ("minimize", "maximize", "subject to", "bounds", "binaries", "end"):
            flush()
            section = {"minimize": "obj", "maximize": "obj", "subject to": "st",
                       "bounds": "bounds", "binaries": "bin", "end": None}[key]
            continue
        if section in ("obj", "st"):
            if ":" in ln and not ln.startswith("   "):
                flush()
            stmts.append(ln.strip())
        elif section == "bounds":
            m = re.match(r"\s*(-?\d+)\s*<=\s*(\S+)\s*<=\s*(-?\d+)", ln)
            bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
        elif section == "bin":
            binaries.extend(ln.split())
    flush()
    return LPModel(_parse_terms(obj_text), rows, bounds, binaries)


@dataclass
class LPCheck:
    feasible: bool
    objective: float
    violated: list


def check_lp(model: Union[LPModel, str], ones: Iterable[str], tol: float = 1e-9) -> LPCheck:
    """Evaluate an exported model at the 0/1 point where exactly ``ones`` are 1.

    Continuous variables take the smallest value within their bounds that the
    rows allow (they only appear with coefficient -1 on the left of ``<=``).
    """
    if isinstance(model, str):
        model = parse_lp(model)
    ones = set(ones)
    unknown = ones - set(model.binaries)
    if unknown:
        raise ValueError(f"not binary variables of the model: {sorted(unknown)[:3]}")
    cont = {v: lo for v, (lo, hi) in model.bounds.items()}
    for name, terms, sense, rhs in model.rows:
        if sense != "<=":
            continue
        xs = sum(cf for cf, v in terms if v in ones)
        hs = [(cf, v) for cf, v in terms if v in cont]
        if len(hs) == 1 and hs[0][0] < 0:
            cf, v = hs[0]
            cont[v] = max(cont[v], (xs - rhs) / -cf)
    for v, (lo, hi) in model.bounds.items():
        cont[v] = min(max(cont[v], lo), hi)
    violated = []
    for name, terms, sense, rhs in model.rows:
        lhs = sum(cf * (1.0 if v in ones else cont.get(v, 0.0)) for cf, v in terms)
        ok = (lhs <= rhs + tol if sense == "<=" else
              lhs >= rhs - tol if sense == ">=" else abs(lhs - rhs) <= tol)
        if not ok:
            violated.append(name)
    objective = sum(cf * (1.0 if v in ones else cont.get(v, 0.0)) for cf, v in model.objective)
    return LPCheck(not violated, objective, violated)


def solution_ones(placements: dict) -> set[str]:
    """LP variable names set to 1 by a placement dict."""
    return {_var_x(p.tile, r, c, p.rotation) for (r, c), p in placements.items()}
