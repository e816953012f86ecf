"""Rank-based tests between centrality indices and between zones."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import ndtr

from .centrality import CentralityTable

EXACT_LIMIT = 16
ALPHA = 0.05


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    n1: int
    n2: int

    __test__ = False  # keep pytest from collecting this class

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA


def _two_sided_normal(z: float) -> float:
    return float(min(1.0, 2.0 * ndtr(-abs(z))))


def _tie_groups(values: np.ndarray) -> np.ndarray:
    _, counts = np.unique(values, return_counts=True)
    return counts[counts > 1].astype(float)


def _count_inversions(a: list) -> int:
    """Number of pairs i < j with a[i] > a[j] (merge sort)."""
    n = len(a)
    if n < 2:
        return 0
    buf = list(a)
    inv = 0
    width = 1
    src, dst = buf, [None] * n
    while width < n:
        for lo in range(0, n, 2 * width):
            mid, hi = min(lo + width, n), min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    inv += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            dst[k:hi] = src[i:mid] if i < mid else src[j:hi]
        src, dst = dst, src
        width *= 2
    return inv


def kendall_tau(x, y) -> TestResult:
    """Kendall tau-b with a tie-adjusted normal approximation for the p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if len(y) != n:
        raise ValueError("series must have equal length")
    if n < 2:
        raise ValueError("need at least 2 observations")
    n0 = n * (n - 1) / 2
    tx, ty = _tie_groups(x), _tie_groups(y)
    n1 = float(np.sum(tx * (tx - 1) / 2))
    n2 = float(np.sum(ty * (ty - 1) / 2))
    if n1 == n0 or n2 == n0:
        raise ValueError("tau is undefined for a constant series")
    # pairs tied in both x and y
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    _, joint = np.unique(np.column_stack([xs, ys]), axis=0, return_counts=True)
    joint = joint[joint > 1].astype(float)
    n3 = float(np.sum(joint * (joint - 1) / 2))
    # swaps needed to sort y once ordered by (x, y) = discordant pairs
    discordant = _count_inversions(ys.tolist())
    concordant = n0 - n1 - n2 + n3 - discordant
    s = concordant - discordant
    tau = s / math.sqrt((n0 - n1) * (n0 - n2))
    v0 = n * (n - 1) * (2 * n + 5)
    vt = float(np.sum(tx * (tx - 1) * (2 * tx + 5)))
    vu = float(np.sum(ty * (ty - 1) * (2 * ty + 5)))
    var = (v0 - vt - vu) / 18.0
    var += float(np.sum(tx * (tx - 1))) * float(np.sum(ty * (ty - 1))) / (2.0 * n * (n - 1))
    if n > 2:
        var += (float(np.sum(tx * (tx - 1) * (tx - 2))) * float(np.sum(ty * (ty - 1) * (ty - 2)))
                / (9.0 * n * (n - 1) * (n - 2)))
    p = _two_sided_normal(s / math.sqrt(var)) if var > 0 else 1.0
    return TestResult(float(min(1.0, max(-1.0, tau))), p, "tau-b normal approximation", n, n)


def rankdata(values: np.ndarray) -> np.ndarray:
    """Average ranks starting at 1."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    starts = np.r_[True, sorted_vals[1:] != sorted_vals[:-1]]
    group = np.cumsum(starts) - 1
    first = np.flatnonzero(starts)
    last = np.r_[first[1:], len(values)] - 1
    avg = (first + last) / 2.0 + 1.0
    ranks = np.empty(len(values))
    ranks[order] = avg[group]
    return ranks


def _u_distribution(n1: int, n2: int) -> np.ndarray:
    """Counts of each U value over all C(n1+n2, n1) rank splits without ties."""
    # ways[i][j][u]: arrangements of i x-items and j y-items with statistic u
    ways = [[None] * (n2 + 1) for _ in range(n1 + 1)]
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            if i == 0 or j == 0:
                arr = np.zeros(i * j + 1)
                arr[0] = 1
                ways[i][j] = arr
                continue
            arr = np.zeros(i * j + 1)
            # largest item is x: it exceeds all j y-items
            prev = ways[i - 1][j]
            arr[j:j + len(prev)] += prev
            prev = ways[i][j - 1]
            arr[:len(prev)] += prev
            ways[i][j] = arr
    return ways[n1][n2]


def mann_whitney(x, y, mode: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U test; ``statistic`` is U for ``x``.

    ``auto`` uses the exact null distribution when there are no ties and
    n1 + n2 <= 16, otherwise the normal approximation with tie and
    continuity corrections.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    if mode not in ("auto", "exact", "approx"):
        raise ValueError(f"mode must be auto, exact or approx, not {mode!r}")
    ranks = rankdata(np.concatenate([x, y]))
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    ties = _tie_groups(np.concatenate([x, y]))
    if mode == "exact" and len(ties):
        raise ValueError("exact test requires tie-free samples")
    if mode == "exact" or (mode == "auto" and not len(ties) and n1 + n2 <= EXACT_LIMIT):
        dist = _u_distribution(n1, n2)
        total = dist.sum()
        k = int(round(u))
        lower = dist[:k + 1].sum() / total
        upper = dist[k:].sum() / total
        return TestResult(u, float(min(1.0, 2.0 * min(lower, upper))), "U exact", n1, n2)
    big_n = n1 + n2
    var = n1 * n2 / 12.0 * ((big_n + 1) - float(np.sum(ties ** 3 - ties)) / (big_n * (big_n - 1)))
    if var <= 0:
        return TestResult(u, 1.0, "U normal approximation", n1, n2)
    z = (abs(u - n1 * n2 / 2.0) - 0.5) / math.sqrt(var)
    p = 1.0 if z <= 0 else _two_sided_normal(z)
    return TestResult(u, p, "U normal approximation", n1, n2)


# ---------------------------------------------------------------- reports

@dataclass
class SummaryTable:
    zones: list[str]
    rows: list[tuple[str, list[float | None]]]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index"] + self.zones)
            for label, vals in self.rows:
                w.writerow([label] + [_fmt(v, label) for v in vals])


def _fmt(v, label: str) -> str:
    if v is None:
        return ""
    if label in ("nodes", "edges"):
        return str(int(v))
    return "0" if v == 0 else f"{v:.2E}"


def summary_table(zone_tables: dict[str, list[CentralityTable]],
                  counts: dict[str, tuple[int, int]] | None = None) -> SummaryTable:
    """min/mean/max/sd (sample sd, n-1 denominator) per index and zone."""
    if not zone_tables:
        raise ValueError("no zones given")
    zones = list(zone_tables)
    names = []
    for tables in zone_tables.values():
        for t in tables:
            if t.index_name not in names:
                names.append(t.index_name)
    rows: list[tuple[str, list]] = []
    if counts:
        rows.append(("nodes", [counts[z][0] for z in zones]))
        rows.append(("edges", [counts[z][1] for z in zones]))
    lookup = {z: {t.index_name: t.values for t in zone_tables[z]} for z in zones}
    for stat in ("min", "mean", "max", "sd"):
        for name in names:
            vals = []
            for z in zones:
                v = lookup[z].get(name)
                if v is None or len(v) == 0:
                    vals.append(None)
                elif stat == "sd":
                    vals.append(float(np.std(v, ddof=1)) if len(v) > 1 else 0.0)
                else:
                    vals.append(float(getattr(np, stat)(v)))
            rows.append((f"{name}.{stat}", vals))
    return SummaryTable(zones, rows)


def tau_matrix(tables: list[CentralityTable]) -> dict[tuple[str, str], TestResult | None]:
    """Pairwise Kendall tau over the upper triangle; None where tau is undefined."""
    out = {}
    for a, b in combinations(tables, 2):
        try:
            out[(a.index_name, b.index_name)] = kendall_tau(a.values, b.values)
        except ValueError:
            out[(a.index_name, b.index_name)] = None
    return out


def write_tau_matrix(tables: list[CentralityTable], results, path) -> None:
    names = [t.index_name for t in tables]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + names[1:])
        for i, a in enumerate(names[:-1]):
            row = [a]
            for j, b in enumerate(names[1:], start=1):
                if j <= i:
                    row.append("")
                    continue
                res = results.get((a, b))
                if res is None:
                    row.append("NA")
                else:
                    row.append(f"{res.statistic:.2f}" + (" *" if res.significant else ""))
            w.writerow(row)


def zone_comparison(zone_tables: dict[str, list[CentralityTable]],
                    pairs: list[tuple[str, str]]) -> dict[str, dict[str, TestResult | None]]:
    """Mann-Whitney p-values per index for each zone pair."""
    out: dict[str, dict[str, TestResult | None]] = {}
    for za, zb in pairs:
        ta = {t.index_name: t for t in zone_tables[za]}
        tb = {t.index_name: t for t in zone_tables[zb]}
        for name in ta:
            if name not in tb:
                continue
            res = None
            if len(ta[name]) and len(tb[name]):
                res = mann_whitney(ta[name].values, tb[name].values)
            out.setdefault(name, {})[f"{za} vs. {zb}"] = res
    return out


def write_zone_comparison(results, pairs: list[tuple[str, str]], path) -> None:
    cols = [f"{a} vs. {b}" for a, b in pairs]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + cols)
        for name, by_pair in results.items():
            row = [name]
            for c in cols:
                res = by_pair.get(c)
                row.append("" if res is None else f"{res.p_value:.2E}")
            w.writerow(row)
