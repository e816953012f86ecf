"""Brute-force reference implementations used only by the tests.

Everything here works from a Floyd-Warshall distance matrix and explicit
enumeration, sharing no code with the Dijkstra engine under test.
"""

import itertools
import math

import numpy as np

from roadrobust.network import RoadNetwork

TOL = 1e-9


def random_digraph(rng, n, p=0.15, max_len=4, parallel=0.05, name="rand"):
    """Random digraph with small integer lengths (lots of shortest-path ties)."""
    src, dst, length = [], [], []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                w = float(rng.integers(1, max_len + 1))
                src.append(u)
                dst.append(v)
                length.append(w)
                if rng.random() < parallel:
                    src.append(u)
                    dst.append(v)
                    length.append(w + float(rng.integers(0, 3)))
    ids = np.arange(n) * 3 + 1  # non-contiguous ids
    return RoadNetwork(ids, rng.random(n) * 1000, rng.random(n) * 1000,
                       [ids[s] for s in src], [ids[t] for t in dst], length, None, name=name)


def weight_matrix(net):
    n = net.n_nodes
    w = np.full((n, n), math.inf)
    pos = {int(v): i for i, v in enumerate(net.node_ids)}
    for s, t, length in zip(net.sources, net.targets, net.lengths):
        a, b = pos[int(s)], pos[int(t)]
        w[a, b] = min(w[a, b], float(length))
    return w


def floyd_warshall(w):
    n = len(w)
    d = w.copy()
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            if dik == math.inf:
                continue
            for j in range(n):
                if dik + d[k, j] < d[i, j]:
                    d[i, j] = dik + d[k, j]
    return d


def all_shortest_paths(w, d, s, t):
    """Every shortest s->t path as a node list, by depth-first enumeration."""
    n = len(w)
    out = []

    def walk(path):
        u = path[-1]
        if u == t:
            out.append(list(path))
            return
        for v in range(n):
            if w[u, v] < math.inf and abs(d[s, u] + w[u, v] + d[v, t] - d[s, t]) <= TOL:
                path.append(v)
                walk(path)
                path.pop()

    walk([s])
    return out


def betweenness(net):
    """Raw betweenness: sum over ordered pairs of the share of shortest paths through each node."""
    w = weight_matrix(net)
    d = floyd_warshall(w)
    n = len(w)
    b = np.zeros(n)
    for s, t in itertools.permutations(range(n), 2):
        if d[s, t] == math.inf:
            continue
        paths = all_shortest_paths(w, d, s, t)
        for p in paths:
            for v in p[1:-1]:
                b[v] += 1.0 / len(paths)
    return b


def load(net):
    """Raw load by pushing one packet per ordered pair and splitting at every hop."""
    w = weight_matrix(net)
    d = floyd_warshall(w)
    n = len(w)
    total = np.zeros(n)
    for s, t in itertools.permutations(range(n), 2):
        if d[s, t] == math.inf:
            continue
        flow = np.zeros(n)
        flow[s] = 1.0
        for u in sorted(range(n), key=lambda v: -d[v, t]):
            if flow[u] == 0 or u == t:
                continue
            hops = [v for v in range(n)
                    if w[u, v] < math.inf and abs(w[u, v] + d[v, t] - d[u, t]) <= TOL]
            for v in hops:
                flow[v] += flow[u] / len(hops)
        flow[s] = 0.0
        flow[t] = 0.0
        total += flow
    return total


def closeness(net, inward=True, normalized=True):
    d = floyd_warshall(weight_matrix(net))
    if inward:
        d = d.T
    n = len(d)
    out = np.zeros(n)
    for i in range(n):
        reach = [x for x in d[i] if x < math.inf]
        total = sum(reach)
        r = len(reach) - 1
        if r > 0 and total > 0:
            out[i] = r / total * (r / (n - 1) if normalized else 1.0)
    return out


def degrees(net):
    n = net.n_nodes
    pos = {int(v): i for i, v in enumerate(net.node_ids)}
    indeg = np.zeros(n)
    outdeg = np.zeros(n)
    for s, t in zip(net.sources, net.targets):
        outdeg[pos[int(s)]] += 1
        indeg[pos[int(t)]] += 1
    return indeg, outdeg


def kendall_counts(x, y):
    """Concordant, discordant and tie counts over all pairs."""
    c = dis = tx = ty = 0
    for i, j in itertools.combinations(range(len(x)), 2):
        dx = np.sign(x[i] - x[j])
        dy = np.sign(y[i] - y[j])
        if dx == 0 and dy == 0:
            continue
        if dx == 0:
            tx += 1
        elif dy == 0:
            ty += 1
        elif dx == dy:
            c += 1
        else:
            dis += 1
    return c, dis, tx, ty


def tau_b(x, y):
    c, dis, tx, ty = kendall_counts(x, y)
    return (c - dis) / math.sqrt((c + dis + tx) * (c + dis + ty))


def exact_mw_p(x, y):
    """Two-sided exact p by enumerating every split of the pooled ranks."""
    pooled = sorted(list(x) + list(y))
    n1 = len(x)
    rank = {v: i + 1 for i, v in enumerate(pooled)}
    u_obs = sum(rank[v] for v in x) - n1 * (n1 + 1) / 2
    us = []
    for combo in itertools.combinations(range(1, len(pooled) + 1), n1):
        us.append(sum(combo) - n1 * (n1 + 1) / 2)
    us = np.array(us)
    lo = np.mean(us <= u_obs)
    hi = np.mean(us >= u_obs)
    return min(1.0, 2 * min(lo, hi)), u_obs
