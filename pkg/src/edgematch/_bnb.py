"""Resumable depth-first branch-and-bound over an ordered list of cells.

The kernel works on a precomputed candidate table (one row per cell, every
frame-feasible ``(tile, rotation)`` of an allowed tile, ordered by tile id then
rotation).  It runs for at most ``chunk`` placements and returns, so the Python
caller can enforce wall-clock and node budgets between chunks.
"""
import numba as nb
import numpy as np

FINISHED = 0
PAUSED = 1


@nb.njit(cache=True)
def _expand(k, cand_t, cand_col, cand_sc, ncand, dyn, lbsuf, used, cur,
            realized, best, ch, chc, chn, pos, tmp_m, tmp_c):
    cnt = 0
    base = realized[k] + lbsuf[k + 1]
    for m in range(ncand[k]):
        t = cand_t[k, m]
        if used[t]:
            continue
        cost = cand_sc[k, m]
        for s in range(4):
            j = dyn[k, s]
            if j >= 0:
                if cand_col[k, m, s] != cand_col[j, cur[j], (s + 2) % 4]:
                    cost += 1
        if base + cost >= best:
            continue
        tmp_m[cnt] = m
        tmp_c[cnt] = cost
        cnt += 1
    # stable counting sort on local cost (0..4)
    w = 0
    for cval in range(5):
        for i in range(cnt):
            if tmp_c[i] == cval:
                ch[k, w] = tmp_m[i]
                chc[k, w] = cval
                w += 1
    chn[k] = w
    pos[k] = 0


@nb.njit(cache=True)
def bnb_run(cand_t, cand_a, cand_col, cand_sc, ncand, dyn, lbsuf, ex_t, ex_a,
            stop_at, used, cur, realized, ch, chc, chn, pos, tmp_m, tmp_c,
            state, inc, chunk):
    """Advance the search.  ``state`` = [depth, best, found, nodes]."""
    K = ncand.shape[0]
    E = ex_t.shape[0]
    depth = state[0]
    best = state[1]
    nodes = 0
    if depth < 0:
        realized[0] = 0
        _expand(0, cand_t, cand_col, cand_sc, ncand, dyn, lbsuf, used, cur,
                realized, best, ch, chc, chn, pos, tmp_m, tmp_c)
        depth = 0
    while True:
        k = depth
        if pos[k] >= chn[k]:
            if k == 0:
                state[0] = 0
                state[1] = best
                state[3] += nodes
                return FINISHED
            depth = k - 1
            used[cand_t[depth, cur[depth]]] = 0
            continue
        m = ch[k, pos[k]]
        cost = chc[k, pos[k]]
        pos[k] += 1
        total = realized[k] + cost
        if total + lbsuf[k + 1] >= best:
            pos[k] = chn[k]
            continue
        nodes += 1
        cur[k] = m
        if k == K - 1:
            excluded = False
            for e in range(E):
                same = True
                for i in range(K):
                    if cand_t[i, cur[i]] != ex_t[e, i] or cand_a[i, cur[i]] != ex_a[e, i]:
                        same = False
                        break
                if same:
                    excluded = True
                    break
            if not excluded:
                best = total
                state[2] = 1
                for i in range(K):
                    inc[i] = cur[i]
                if best <= stop_at:
                    state[0] = k
                    state[1] = best
                    state[3] += nodes
                    return FINISHED
        else:
            used[cand_t[k, m]] = 1
            realized[k + 1] = total
            depth = k + 1
            _expand(depth, cand_t, cand_col, cand_sc, ncand, dyn, lbsuf, used, cur,
                    realized, best, ch, chc, chn, pos, tmp_m, tmp_c)
        if nodes >= chunk:
            state[0] = depth
            state[1] = best
            state[3] += nodes
            return PAUSED


class Search:
    """Owns the kernel state for one search so it can be resumed."""

    def __init__(self, cand_t, cand_a, cand_col, cand_sc, ncand, dyn, lbsuf,
                 ex_t, ex_a, n_tile_ids, best, stop_at):
        K, M = cand_t.shape
        self.args = (cand_t, cand_a, cand_col, cand_sc, ncand, dyn, lbsuf, ex_t, ex_a)
        self.stop_at = int(stop_at)
        self.used = np.zeros(n_tile_ids + 1, dtype=np.uint8)
        self.cur = np.zeros(K, dtype=np.int32)
        self.realized = np.zeros(K + 1, dtype=np.int32)
        self.ch = np.zeros((K, max(M, 1)), dtype=np.int32)
        self.chc = np.zeros((K, max(M, 1)), dtype=np.int32)
        self.chn = np.zeros(K, dtype=np.int32)
        self.pos = np.zeros(K, dtype=np.int32)
        self.tmp_m = np.zeros(max(M, 1), dtype=np.int32)
        self.tmp_c = np.zeros(max(M, 1), dtype=np.int32)
        self.state = np.array([-1, best, 0, 0], dtype=np.int64)
        self.inc = np.zeros(K, dtype=np.int32)
        self.finished = False

    @property
    def best(self) -> int:
        return int(self.state[1])

    @property
    def found(self) -> bool:
        return bool(self.state[2])

    @property
    def nodes(self) -> int:
        return int(self.state[3])

    def step(self, chunk: int) -> bool:
        """Run up to ``chunk`` placements; True once the search is closed."""
        if self.finished:
            return True
        code = bnb_run(*self.args, self.stop_at, self.used, self.cur, self.realized,
                       self.ch, self.chc, self.chn, self.pos, self.tmp_m, self.tmp_c,
                       self.state, self.inc, chunk)
        self.finished = code == FINISHED
        return self.finished
