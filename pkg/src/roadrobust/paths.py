"""Shortest-path engine shared by the centrality indices.

Each single-source sweep runs Dijkstra, then walks the shortest-path DAG
(all co-optimal predecessors within ``TIE_TOL`` meters) to produce path
counts, Brandes dependencies and load-style packet flows. Sources are
processed in fixed-size blocks; block results are summed in block order so
the totals do not depend on how many threads ran.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .network import RoadNetwork

TIE_TOL = 1e-9
BLOCK_SIZE = 128
THREADS_ENV = "ROADROBUST_THREADS"


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ShortestPathView:
    """Simple-digraph view with parallel edges collapsed to their minimum length.

    ``fwd_*`` is the CSR of outgoing arcs, ``bwd_*`` the CSR of incoming arcs
    (i.e. of the reversed graph). Node positions follow ``network.node_ids``.
    """

    n: int
    fwd_ptr: np.ndarray
    fwd_idx: np.ndarray
    fwd_w: np.ndarray
    bwd_ptr: np.ndarray
    bwd_idx: np.ndarray
    bwd_w: np.ndarray

    @classmethod
    def from_network(cls, network: RoadNetwork) -> "ShortestPathView":
        n = network.n_nodes
        s, t = network.edge_index_arrays()
        w = np.asarray(network.lengths, dtype=np.float64)
        if len(s):
            order = np.lexsort((w, t, s))
            s, t, w = s[order], t[order], w[order]
            first = np.ones(len(s), dtype=bool)
            first[1:] = (s[1:] != s[:-1]) | (t[1:] != t[:-1])
            # lexsort puts the shortest parallel edge first in each (s, t) run
            s, t, w = s[first], t[first], w[first]
        fwd = _csr(s, t, w, n)
        bwd = _csr(t, s, w, n)
        return cls(n, *fwd, *bwd)

    def reversed(self) -> "ShortestPathView":
        return ShortestPathView(self.n, self.bwd_ptr, self.bwd_idx, self.bwd_w,
                                self.fwd_ptr, self.fwd_idx, self.fwd_w)


def _csr(rows, cols, w, n):
    order = np.lexsort((cols, rows))
    rows, cols, w = rows[order], cols[order], w[order]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, rows + 1, 1)
    return np.cumsum(ptr), np.ascontiguousarray(cols, dtype=np.int64), np.ascontiguousarray(w)


# ---------------------------------------------------------------- kernels

@njit(nogil=True, cache=True)
def _heap_push(hd, hv, size, d, v):
    i = size
    hd[i] = d
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if hd[p] > hd[i] or (hd[p] == hd[i] and hv[p] > hv[i]):
            hd[p], hd[i] = hd[i], hd[p]
            hv[p], hv[i] = hv[i], hv[p]
            i = p
        else:
            break
    return size + 1


@njit(nogil=True, cache=True)
def _heap_pop(hd, hv, size):
    d = hd[0]
    v = hv[0]
    size -= 1
    hd[0] = hd[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and (hd[r] < hd[l] or (hd[r] == hd[l] and hv[r] < hv[l])):
            c = r
        if hd[c] < hd[i] or (hd[c] == hd[i] and hv[c] < hv[i]):
            hd[c], hd[i] = hd[i], hd[c]
            hv[c], hv[i] = hv[i], hv[c]
            i = c
        else:
            break
    return d, v, size


@njit(nogil=True, cache=True)
def _dijkstra(src, ptr, idx, w, dist, done, order, hd, hv):
    """Fill ``dist`` and the settle ``order``; returns the number settled."""
    n = len(ptr) - 1
    for i in range(n):
        dist[i] = np.inf
        done[i] = False
    dist[src] = 0.0
    size = _heap_push(hd, hv, 0, 0.0, src)
    count = 0
    while size > 0:
        d, u, size = _heap_pop(hd, hv, size)
        if done[u]:
            continue
        done[u] = True
        order[count] = u
        count += 1
        for k in range(ptr[u], ptr[u + 1]):
            v = idx[k]
            nd = d + w[k]
            if nd < dist[v]:
                dist[v] = nd
                size = _heap_push(hd, hv, size, nd, v)
    return count


@njit(nogil=True, cache=True)
def _block(sources, ptr, idx, w, tptr, tidx, tw, tol, want_paths,
           between, load, dist_sum, reach):
    """Sweep every source in ``sources`` over the (ptr, idx, w) graph.

    ``tptr/tidx/tw`` is the transpose used to find DAG predecessors.
    Contributions are added to ``between`` and ``load`` in source order;
    per-source distance sums and reachable counts go to ``dist_sum``/``reach``.
    """
    n = len(ptr) - 1
    m = len(idx)
    dist = np.empty(n)
    done = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    hd = np.empty(m + 1)
    hv = np.empty(m + 1, dtype=np.int64)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    flow = np.zeros(n)
    npred = np.zeros(n, dtype=np.int64)
    for k in range(len(sources)):
        s = sources[k]
        count = _dijkstra(s, ptr, idx, w, dist, done, order, hd, hv)
        total = 0.0
        for j in range(count):
            total += dist[order[j]]
        dist_sum[k] = total
        reach[k] = count
        if not want_paths:
            continue
        for j in range(count):
            v = order[j]
            sigma[v] = 0.0
            delta[v] = 0.0
            flow[v] = 1.0
            npred[v] = 0
        sigma[s] = 1.0
        for j in range(1, count):
            v = order[j]
            dv = dist[v]
            acc = 0.0
            c = 0
            for e in range(tptr[v], tptr[v + 1]):
                u = tidx[e]
                if done[u] and abs(dist[u] + tw[e] - dv) <= tol:
                    acc += sigma[u]
                    c += 1
            sigma[v] = acc
            npred[v] = c
        for j in range(count - 1, 0, -1):
            v = order[j]
            dv = dist[v]
            coeff = (1.0 + delta[v]) / sigma[v]
            share = flow[v] / npred[v]
            for e in range(tptr[v], tptr[v + 1]):
                u = tidx[e]
                if done[u] and abs(dist[u] + tw[e] - dv) <= tol:
                    delta[u] += sigma[u] * coeff
                    flow[u] += share
            between[v] += delta[v]
            load[v] += flow[v] - 1.0


@dataclass
class SweepResult:
    between: np.ndarray
    load: np.ndarray
    dist_sum: np.ndarray
    reach: np.ndarray


def sweep_all(view: ShortestPathView, reverse: bool = True, want_paths: bool = True,
              threads: int | None = None, block_size: int = BLOCK_SIZE) -> SweepResult:
    """Run a single-source sweep from every node.

    With ``reverse=True`` the sweep from node t follows incoming arcs, so
    ``dist_sum[t]``/``reach[t]`` describe distances *to* t and the packet
    flow of each sweep is the traffic of all sources heading for target t.
    Betweenness is the same either way since reversing every shortest path
    preserves the pair counts.
    """
    g = view.reversed() if reverse else view
    n = view.n
    threads = threads or default_threads()
    blocks = [np.arange(a, min(a + block_size, n), dtype=np.int64) for a in range(0, n, block_size)]

    def run(block):
        b = np.zeros(n)
        ld = np.zeros(n)
        ds = np.zeros(len(block))
        rc = np.zeros(len(block), dtype=np.int64)
        _block(block, g.fwd_ptr, g.fwd_idx, g.fwd_w, g.bwd_ptr, g.bwd_idx, g.bwd_w,
               TIE_TOL, want_paths, b, ld, ds, rc)
        return b, ld, ds, rc

    between = np.zeros(n)
    load = np.zeros(n)
    dist_sum = np.zeros(n)
    reach = np.zeros(n, dtype=np.int64)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(run, blocks)
            _reduce(blocks, results, between, load, dist_sum, reach)
    else:
        _reduce(blocks, map(run, blocks), between, load, dist_sum, reach)
    return SweepResult(between, load, dist_sum, reach)


def _reduce(blocks, results, between, load, dist_sum, reach):
    # results arrive in block order, so the summation order is fixed
    for block, (b, ld, ds, rc) in zip(blocks, results):
        between += b
        load += ld
        dist_sum[block] = ds
        reach[block] = rc


def distances_from(view: ShortestPathView, source: int) -> np.ndarray:
    """Dijkstra distances from node position ``source`` (inf if unreachable)."""
    n = view.n
    dist = np.empty(n)
    _dijkstra(source, view.fwd_ptr, view.fwd_idx, view.fwd_w, dist,
              np.zeros(n, dtype=np.bool_), np.empty(n, dtype=np.int64),
              np.empty(len(view.fwd_idx) + 1), np.empty(len(view.fwd_idx) + 1, dtype=np.int64))
    return dist
