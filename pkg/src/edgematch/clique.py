"""Max-clique view of the puzzle.

Nodes are frame-feasible placements ``(tile, row, col, rotation)``; two nodes
are joined iff they can coexist on a board (different tiles, different
positions, and matching colours when the positions touch).  A clique of size
n² on the full board graph is a perfect solution.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numba as nb
import numpy as np

from .core import OFFSETS, Board, Instance, Placement, feasibility_mask, opposite
from .region import Region


@dataclass(frozen=True)
class CliqueNode:
    tile: int
    r: int       # 0-based
    c: int
    rotation: int

    def legend(self) -> str:
        return f"t{self.tile} r{self.r + 1} c{self.c + 1} a{self.rotation}"


@dataclass(frozen=True)
class CliqueParams:
    q: int = 100_000
    seed: int = 0
    target_size: Optional[int] = None
    plateau_limit: int = 100
    tabu_tenure: int = 7

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")


# ---------------------------------------------------------------------------
# kernels


@nb.njit(cache=True)
def _conflict(i, j, nt, nr, nc, ncol):
    if nt[i] == nt[j]:
        return True
    dr = nr[j] - nr[i]
    dc = nc[j] - nc[i]
    if dr == 0 and dc == 0:
        return True
    if dr == 0 and dc == 1:
        return ncol[i, 1] != ncol[j, 3]
    if dr == 0 and dc == -1:
        return ncol[i, 3] != ncol[j, 1]
    if dc == 0 and dr == 1:
        return ncol[i, 2] != ncol[j, 0]
    if dc == 0 and dr == -1:
        return ncol[i, 0] != ncol[j, 2]
    return False


@nb.njit(cache=True)
def _build_adjacency(nt, nr, nc, ncol):
    N = nt.shape[0]
    adj = np.zeros((N, N), dtype=np.bool_)
    deg = np.zeros(N, dtype=np.int64)
    for i in range(N):
        for j in range(i + 1, N):
            if not _conflict(i, j, nt, nr, nc, ncol):
                adj[i, j] = True
                adj[j, i] = True
                deg[i] += 1
                deg[j] += 1
    return adj, deg


@nb.njit(cache=True)
def _conflict_lists(adj):
    N = adj.shape[0]
    ptr = np.zeros(N + 1, dtype=np.int64)
    for i in range(N):
        cnt = 0
        for j in range(N):
            if j != i and not adj[i, j]:
                cnt += 1
        ptr[i + 1] = ptr[i] + cnt
    idx = np.empty(ptr[N], dtype=np.int32)
    for i in range(N):
        w = ptr[i]
        for j in range(N):
            if j != i and not adj[i, j]:
                idx[w] = j
                w += 1
    return ptr, idx


@nb.njit(cache=True)
def _row_neighbors(i, nt, nr, nc, ncol, out):
    """Indices j > i adjacent to i, written into ``out``; returns count."""
    N = nt.shape[0]
    k = 0
    for j in range(i + 1, N):
        if not _conflict(i, j, nt, nr, nc, ncol):
            out[k] = j
            k += 1
    return k


@nb.njit(cache=True)
def _count_edges_and_bytes(nt, nr, nc, ncol):
    N = nt.shape[0]
    edges = 0
    nbytes = 0
    for i in range(N):
        x = i + 1
        di = 0
        while x > 0:
            di += 1
            x //= 10
        for j in range(i + 1, N):
            if not _conflict(i, j, nt, nr, nc, ncol):
                edges += 1
                y = j + 1
                dj = 0
                while y > 0:
                    dj += 1
                    y //= 10
                nbytes += 4 + di + dj  # "e i j\n"
    return edges, nbytes


@nb.njit(cache=True)
def _set_add(lst, pos, cnts, which, v):
    pos[v] = cnts[which]
    lst[cnts[which]] = v
    cnts[which] += 1


@nb.njit(cache=True)
def _set_rm(lst, pos, cnts, which, v):
    i = pos[v]
    last = lst[cnts[which] - 1]
    lst[i] = last
    pos[last] = i
    pos[v] = -1
    cnts[which] -= 1


@nb.njit(cache=True)
def _add(v, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts):
    if pa_pos[v] >= 0:
        _set_rm(pa, pa_pos, cnts, 0, v)
    if om_pos[v] >= 0:
        _set_rm(om, om_pos, cnts, 1, v)
    in_c[v] = True
    _set_add(cl, cl_pos, cnts, 2, v)
    for p in range(cptr[v], cptr[v + 1]):
        x = cidx[p]
        old = miss[x]
        miss[x] = old + 1
        if in_c[x]:
            continue
        if old == 0:
            _set_rm(pa, pa_pos, cnts, 0, x)
            _set_add(om, om_pos, cnts, 1, x)
        elif old == 1:
            _set_rm(om, om_pos, cnts, 1, x)


@nb.njit(cache=True)
def _remove(w, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts):
    in_c[w] = False
    _set_rm(cl, cl_pos, cnts, 2, w)
    for p in range(cptr[w], cptr[w + 1]):
        x = cidx[p]
        old = miss[x]
        miss[x] = old - 1
        if in_c[x]:
            continue
        if old == 1:
            _set_rm(om, om_pos, cnts, 1, x)
            _set_add(pa, pa_pos, cnts, 0, x)
        elif old == 2:
            _set_add(om, om_pos, cnts, 1, x)
    if miss[w] == 0:
        _set_add(pa, pa_pos, cnts, 0, w)
    elif miss[w] == 1:
        _set_add(om, om_pos, cnts, 1, w)


@nb.njit(cache=True)
def _clique_search(cptr, cidx, q, seed, target, init, plateau_limit, tenure):
    """Greedy growth by max degree inside the candidate set, (1,1)-swap plateau
    moves with a short tabu, and single-vertex drops on stagnation.

    Every add, swap and drop counts as one selection against ``q``.
    """
    np.random.seed(seed)
    N = cptr.shape[0] - 1
    in_c = np.zeros(N, dtype=np.bool_)
    miss = np.zeros(N, dtype=np.int32)
    pa = np.arange(N).astype(np.int32)
    pa_pos = np.arange(N).astype(np.int32)
    om = np.zeros(N, dtype=np.int32)
    om_pos = np.full(N, -1, dtype=np.int32)
    cl = np.zeros(N, dtype=np.int32)
    cl_pos = np.full(N, -1, dtype=np.int32)
    cnts = np.zeros(3, dtype=np.int64)
    cnts[0] = N
    tabu = np.zeros(N, dtype=np.int64)
    in_pa = np.zeros(N, dtype=np.bool_)
    cand = np.zeros(N, dtype=np.int32)

    for v in init:
        if pa_pos[v] >= 0:
            _add(v, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts)
    best = cl[:cnts[2]].copy()
    best_size = cnts[2]
    sel = 0
    stagnation = 0
    while sel < q and best_size < target:
        # non-tabu additions
        nc = 0
        for i in range(cnts[0]):
            v = pa[i]
            if tabu[v] <= sel:
                cand[nc] = v
                nc += 1
        if nc > 0:
            for i in range(cnts[0]):
                in_pa[pa[i]] = True
            top = -1
            nties = 0
            pick = -1
            for i in range(nc):
                u = cand[i]
                confl = 0
                for p in range(cptr[u], cptr[u + 1]):
                    if in_pa[cidx[p]]:
                        confl += 1
                s = cnts[0] - 1 - confl
                if s > top:
                    top = s
                    nties = 1
                    pick = u
                elif s == top:
                    nties += 1
                    if np.random.randint(nties) == 0:
                        pick = u
            for i in range(cnts[0]):
                in_pa[pa[i]] = False
            _add(pick, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts)
            sel += 1
        else:
            nc = 0
            for i in range(cnts[1]):
                v = om[i]
                if tabu[v] <= sel:
                    cand[nc] = v
                    nc += 1
            if nc > 0 and stagnation < plateau_limit:
                u = cand[np.random.randint(nc)]
                w = -1
                for p in range(cptr[u], cptr[u + 1]):
                    if in_c[cidx[p]]:
                        w = cidx[p]
                        break
                _remove(w, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts)
                _add(u, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts)
                tabu[w] = sel + tenure + np.random.randint(tenure + 1)
                sel += 1
            else:
                if cnts[2] == 0:
                    # nothing to drop and nothing to add: clear tabu and go on
                    for i in range(N):
                        tabu[i] = 0
                    sel += 1
                    continue
                w = cl[np.random.randint(cnts[2])]
                _remove(w, cptr, cidx, in_c, miss, pa, pa_pos, om, om_pos, cl, cl_pos, cnts)
                tabu[w] = sel + tenure + np.random.randint(tenure + 1)
                stagnation = 0
                sel += 1
        stagnation += 1
        if cnts[2] > best_size:
            best_size = cnts[2]
            best = cl[:cnts[2]].copy()
            stagnation = 0
    return best, sel


# ---------------------------------------------------------------------------
# graph


class ConflictGraph:
    """Compatibility graph over placements.  ``adj`` is a dense boolean
    matrix; ``conflicts`` is its complement in CSR form (used by the search)."""

    def __init__(self, instance: Instance, nt, nr, nc, na):
        self.instance = instance
        self.nt = np.asarray(nt, dtype=np.int32)
        self.nr = np.asarray(nr, dtype=np.int32)
        self.nc = np.asarray(nc, dtype=np.int32)
        self.na = np.asarray(na, dtype=np.int32)
        self.colors = instance.rot_colors[self.nt, self.na] if len(self.nt) else np.zeros((0, 4), np.int32)
        self.colors = np.ascontiguousarray(self.colors, dtype=np.int32)
        self._adj = None
        self._deg = None
        self._csr = None

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int]], nodes=None):
        """Plain graph (0-based edge list), e.g. from DIMACS without a legend."""
        g = cls.__new__(cls)
        g.instance = None
        nodes = nodes or []
        g.nt = np.array([x.tile for x in nodes], dtype=np.int32)
        g.nr = np.array([x.r for x in nodes], dtype=np.int32)
        g.nc = np.array([x.c for x in nodes], dtype=np.int32)
        g.na = np.array([x.rotation for x in nodes], dtype=np.int32)
        g.colors = None
        adj = np.zeros((n_nodes, n_nodes), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on node {i + 1}")
            adj[i, j] = adj[j, i] = True
        g._adj = adj
        g._deg = adj.sum(axis=1)
        g._csr = None
        return g

    def _ensure(self):
        if self._adj is None:
            self._adj, self._deg = _build_adjacency(self.nt, self.nr, self.nc, self.colors)

    @property
    def adj(self) -> np.ndarray:
        self._ensure()
        return self._adj

    @property
    def conflicts(self):
        if self._csr is None:
            self._csr = _conflict_lists(self.adj)
        return self._csr

    @property
    def node_count(self) -> int:
        return len(self.adj) if self._adj is not None else len(self.nt)

    @property
    def edge_count(self) -> int:
        self._ensure()
        return int(self._deg.sum() // 2)

    @property
    def density(self) -> float:
        N = self.node_count
        return self.edge_count / (N * (N - 1) / 2) if N > 1 else 0.0

    def node(self, i: int) -> CliqueNode:
        return CliqueNode(int(self.nt[i]), int(self.nr[i]), int(self.nc[i]), int(self.na[i]))

    def nodes(self) -> list[CliqueNode]:
        return [self.node(i) for i in range(len(self.nt))]

    def index_of(self) -> dict:
        return {self.node(i): i for i in range(len(self.nt))}

    def is_clique(self, idx: Sequence[int]) -> bool:
        idx = np.asarray(idx, dtype=np.int64)
        if len(idx) != len(set(idx.tolist())):
            return False
        sub = self.adj[np.ix_(idx, idx)]
        return bool(sub.sum() == len(idx) * (len(idx) - 1))


def _enumerate_nodes(instance: Instance, cells, context: Optional[Board], tiles):
    """Frame-feasible placements of ``tiles`` on ``cells`` that match every
    placed context neighbour, ordered by (r, c, tile, rotation)."""
    n = instance.n
    mask = feasibility_mask(instance)
    rc = instance.rot_colors
    tiles = np.array(sorted(int(t) for t in tiles), dtype=np.int64)
    nt, nr, nc, na = [], [], [], []
    for r, c in sorted(cells):
        ok = mask[tiles, :, r, c]
        if context is not None:
            for s, (dr, dc) in enumerate(OFFSETS):
                rr, cc = r + dr, c + dc
                if 0 <= rr < n and 0 <= cc < n and context.tiles[rr, cc]:
                    want = rc[context.tiles[rr, cc], context.rotations[rr, cc], opposite(s)]
                    ok = ok & (rc[tiles, :, s] == want)
        ti, ai = np.nonzero(ok)
        nt.append(tiles[ti])
        na.append(ai)
        nr.append(np.full(len(ti), r))
        nc.append(np.full(len(ti), c))
    cat = (lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64))
    return cat(nt), cat(nr), cat(nc), cat(na)


def build_conflict_graph(instance: Instance, region: Optional[Region] = None,
                         context: Optional[Board] = None,
                         tiles: Optional[Sequence[int]] = None) -> ConflictGraph:
    """Conflict graph over the whole board, or over ``region`` with ``context``
    fixed outside it.  ``tiles`` defaults to every tile not used in the context."""
    n = instance.n
    cells = region.cells() if region is not None else [(r, c) for r in range(n) for c in range(n)]
    if context is not None:
        for cell in cells:
            if context.tiles[cell]:
                raise ValueError(f"context overlaps the scope at {cell}")
    if tiles is None:
        used = context.used_tiles() if context is not None else set()
        tiles = [t for t in range(1, instance.n_tiles + 1) if t not in used]
    nt, nr, nc, na = _enumerate_nodes(instance, cells, context, tiles)
    return ConflictGraph(instance, nt, nr, nc, na)


# ---------------------------------------------------------------------------
# DIMACS


def write_dimacs(graph: ConflictGraph, sink) -> None:
    """ASCII DIMACS ``p edge`` format with a node legend in comment lines.

    Edges are produced one node row at a time from the colour rule, so the
    full edge list is never held in memory.
    """
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as f:
            write_dimacs(graph, f)
        return
    N = len(graph.nt)
    has_legend = graph.colors is not None
    if has_legend:
        edges, _ = _count_edges_and_bytes(graph.nt, graph.nr, graph.nc, graph.colors)
    else:
        edges = graph.edge_count
    inst = graph.instance
    if inst is not None:
        sink.write(f"c edge matching conflict graph n={inst.n} L={inst.L} name={inst.name}\n")
    for i in range(N if has_legend else 0):
        sink.write(f"c node {i + 1} = {graph.node(i).legend()}\n")
    sink.write(f"p edge {N} {int(edges)}\n")
    buf = np.empty(max(N, 1), dtype=np.int64)
    for i in range(N):
        if has_legend:
            k = _row_neighbors(i, graph.nt, graph.nr, graph.nc, graph.colors, buf)
            js = buf[:k]
        else:
            js = np.flatnonzero(graph.adj[i, i + 1:]) + i + 1
        if len(js):
            sink.write("".join(f"e {i + 1} {j + 1}\n" for j in js.tolist()))


def dimacs_to_text(graph: ConflictGraph) -> str:
    buf = io.StringIO()
    write_dimacs(graph, buf)
    return buf.getvalue()


def dimacs_size(instance: Instance) -> tuple[int, int, int]:
    """(nodes, edges, bytes of the edge lines) of the full-board export,
    counted without building the graph."""
    g = build_conflict_graph(instance)
    edges, nbytes = _count_edges_and_bytes(g.nt, g.nr, g.nc, g.colors)
    return len(g.nt), int(edges), int(nbytes)


class DimacsError(ValueError):
    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def read_dimacs(source) -> ConflictGraph:
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source):
        with open(source) as f:
            text = f.read()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    n_nodes = None
    n_edges = None
    legend = {}
    edges = []
    for lineno, ln in enumerate(text.splitlines(), start=1):
        s = ln.strip()
        if not s:
            continue
        if s.startswith("c"):
            parts = s.split()
            if len(parts) == 8 and parts[1] == "node" and parts[3] == "=":
                try:
                    legend[int(parts[2]) - 1] = CliqueNode(int(parts[4][1:]), int(parts[5][1:]) - 1,
                                                           int(parts[6][1:]) - 1, int(parts[7][1:]))
                except ValueError:
                    raise DimacsError(f"malformed legend {s!r}", lineno) from None
            continue
        if s.startswith("p"):
            parts = s.split()
            if n_nodes is not None:
                raise DimacsError("duplicate problem line", lineno)
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise DimacsError(f"malformed problem line {s!r}", lineno)
            try:
                n_nodes, n_edges = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed problem line {s!r}", lineno) from None
            continue
        if s.startswith("e"):
            if n_nodes is None:
                raise DimacsError("edge before problem line", lineno)
            parts = s.split()
            try:
                i, j = int(parts[1]), int(parts[2])
            except (ValueError, IndexError):
                raise DimacsError(f"malformed edge line {s!r}", lineno) from None
            if len(parts) != 3 or not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
                raise DimacsError(f"malformed edge line {s!r}", lineno)
            edges.append((i - 1, j - 1))
            continue
        raise DimacsError(f"unrecognised line {s!r}", lineno)
    if n_nodes is None:
        raise DimacsError("missing problem line")
    if len(edges) != n_edges:
        raise DimacsError(f"header declares {n_edges} edges, found {len(edges)}")
    nodes = [legend[i] for i in range(n_nodes)] if len(legend) == n_nodes else None
    return ConflictGraph.from_edges(n_nodes, edges, nodes)


# ---------------------------------------------------------------------------
# search and conversion


def max_clique_heuristic(graph: ConflictGraph, params: CliqueParams = CliqueParams(),
                         init: Sequence[int] = ()) -> list[int]:
    """Budgeted clique search; returns sorted node indices of the best clique.

    ``init`` seeds the search with a (partial) clique.
    """
    N = graph.node_count
    if N == 0:
        raise ValueError("graph is empty")
    cptr, cidx = graph.conflicts
    target = params.target_size if params.target_size is not None else N + 1
    init_arr = np.asarray(list(init), dtype=np.int64)
    best, _ = _clique_search(cptr, cidx, int(params.q), int(params.seed) % (2**32),
                             int(target), init_arr, int(params.plateau_limit),
                             int(params.tabu_tenure))
    best = sorted(int(x) for x in best)
    if not graph.is_clique(best):
        raise AssertionError("clique search returned a non-clique")
    return best


def conflicting(instance: Instance, a: CliqueNode, b: CliqueNode) -> bool:
    """The pairwise conflict rule, evaluated from the instance colours."""
    if a.tile == b.tile:
        return True
    if (a.r, a.c) == (b.r, b.c):
        return True
    rc = instance.rot_colors
    for s, (dr, dc) in enumerate(OFFSETS):
        if (b.r - a.r, b.c - a.c) == (dr, dc):
            return rc[a.tile, a.rotation, s] != rc[b.tile, b.rotation, opposite(s)]
    return False


def clique_to_partial_board(instance: Instance, clique: Iterable[CliqueNode]) -> Board:
    nodes = list(clique)
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if conflicting(instance, nodes[i], nodes[j]):
                raise ValueError(f"conflicting nodes ({i}, {j})")
    return Board.from_placements(instance.n, {(x.r, x.c): Placement(x.tile, x.rotation) for x in nodes})


def board_clique(graph: ConflictGraph, board: Board) -> list[int]:
    """Nodes of ``graph`` realised by ``board``, kept greedily in row-major
    order while they stay pairwise compatible."""
    index = graph.index_of()
    chosen: list[int] = []
    for (r, c), p in board.placements():
        i = index.get(CliqueNode(p.tile, r, c, p.rotation))
        if i is None:
            continue
        if all(graph.adj[i, j] for j in chosen):
            chosen.append(i)
    return chosen
