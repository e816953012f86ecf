"""Point-pattern tests (G and F functions with CSR envelopes) and quartic KDE rasters.

Coordinates are planar meters. No edge correction is applied to either the
nearest-neighbour functions or the density surface, so values near the
window boundary are biased low.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .network import ZonePolygon

DEFAULT_BANDWIDTH = 1000.0
DEFAULT_CELL = 100.0
DEFAULT_SIMS = 99
DEFAULT_REFERENCE = 10_000
DEFAULT_R_STEPS = 100
MIN_SIMS = 19


@dataclass(frozen=True)
class StudyWindow:
    """Axis-aligned box, optionally restricted to a polygon."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float
    polygon: ZonePolygon | None = None

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("window must have positive width and height")
        if self.polygon is not None and self.polygon.area <= 0:
            raise ValueError("window polygon has zero area")

    @classmethod
    def bounding_box(cls, points) -> "StudyWindow":
        pts = np.asarray(points, dtype=float)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return cls(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @classmethod
    def from_polygon(cls, polygon: ZonePolygon) -> "StudyWindow":
        xs, ys = np.array(polygon.ring).T
        return cls(xs.min(), ys.min(), xs.max(), ys.max(), polygon)

    @property
    def area(self) -> float:
        if self.polygon is not None:
            return self.polygon.area
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        box = ((pts[:, 0] >= self.xmin) & (pts[:, 0] <= self.xmax)
               & (pts[:, 1] >= self.ymin) & (pts[:, 1] <= self.ymax))
        if self.polygon is not None:
            box &= self.polygon.contains(pts[:, 0], pts[:, 1])
        return box

    def shifted(self, dx: float, dy: float) -> "StudyWindow":
        poly = None
        if self.polygon is not None:
            poly = ZonePolygon(self.polygon.name, [(a + dx, b + dy) for a, b in self.polygon.ring])
        return StudyWindow(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy, poly)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Binomial process: ``n`` points uniform over the window."""
        lo = np.array([self.xmin, self.ymin])
        span = np.array([self.xmax - self.xmin, self.ymax - self.ymin])
        if self.polygon is None:
            return lo + rng.random((n, 2)) * span
        out = np.empty((0, 2))
        while len(out) < n:
            cand = lo + rng.random((max(2 * (n - len(out)), 16), 2)) * span
            out = np.vstack([out, cand[self.contains(cand)]])
        return out[:n]

    def reference_grid(self, m: int) -> np.ndarray:
        """sqrt(m) x sqrt(m) lattice of cell-centred points clipped to the window."""
        k = max(int(round(math.sqrt(m))), 1)
        xs = self.xmin + (np.arange(k) + 0.5) * (self.xmax - self.xmin) / k
        ys = self.ymin + (np.arange(k) + 0.5) * (self.ymax - self.ymin) / k
        grid = np.column_stack([np.repeat(xs, k), np.tile(ys, k)])
        return grid[self.contains(grid)]


def intensity(n_points: int, window: StudyWindow) -> float:
    return n_points / window.area


def csr_curve(r_grid, lam: float) -> np.ndarray:
    """Expected G and F under complete spatial randomness."""
    r = np.asarray(r_grid, dtype=float)
    return 1.0 - np.exp(-lam * np.pi * r * r)


def _check_grid(r_grid) -> np.ndarray:
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or len(r) == 0 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be a non-empty ascending array of positive distances")
    return r


def _ecdf(dists: np.ndarray, r: np.ndarray) -> np.ndarray:
    dists = np.sort(dists)
    return np.searchsorted(dists, r, side="right") / len(dists)


def g_function(points, window: StudyWindow, r_grid) -> np.ndarray:
    """Fraction of events whose nearest other event lies within r."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("G function needs at least 2 points")
    r = _check_grid(r_grid)
    nn, _ = cKDTree(pts).query(pts, k=2)
    return _ecdf(nn[:, 1], r)


def f_function(points, window: StudyWindow, r_grid, m_reference: int = DEFAULT_REFERENCE) -> np.ndarray:
    """Fraction of lattice reference points whose nearest event lies within r."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 1:
        raise ValueError("F function needs at least 1 point")
    if m_reference < 100:
        raise ValueError("m_reference must be at least 100")
    r = _check_grid(r_grid)
    ref = window.reference_grid(m_reference)
    d, _ = cKDTree(pts).query(ref, k=1)
    return _ecdf(d, r)


def default_r_grid(n_points: int, window: StudyWindow, steps: int = DEFAULT_R_STEPS,
                   r_max: float | None = None) -> np.ndarray:
    """Evenly spaced radii up to where the CSR curve reaches 0.999.

    Capped at a quarter of the shorter window side.
    """
    if r_max is None:
        lam = intensity(n_points, window)
        r_max = min(math.sqrt(math.log(1000.0) / (lam * math.pi)),
                     0.25 * min(window.xmax - window.xmin, window.ymax - window.ymin))
    return np.linspace(r_max / steps, r_max, steps)


@dataclass
class EnvelopeResult:
    function_kind: str
    r_grid: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_simulations: int
    seed: int
    inside_fraction: float
    threshold: float
    intensity: float
    extra: dict = field(default_factory=dict)

    @property
    def rejected(self) -> bool:
        return self.inside_fraction < self.threshold

    @property
    def verdict(self) -> str:
        return "rejected" if self.rejected else "not rejected"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "empirical", "theoretical", "lower", "upper"])
            for row in zip(self.r_grid, self.empirical, self.theoretical, self.lower, self.upper):
                w.writerow([repr(float(v)) for v in row])


def csr_test(points, window: StudyWindow | None = None, kind: str = "G",
             n_sims: int = DEFAULT_SIMS, seed: int = 0, r_grid=None,
             m_reference: int = DEFAULT_REFERENCE, threshold: float = 0.95) -> EnvelopeResult:
    """Monte Carlo pointwise min/max envelope test against CSR.

    Simulation ``i`` draws from ``default_rng([seed, i])``, so results do not
    depend on evaluation order. The pattern is rejected when fewer than
    ``threshold`` of the radii have the empirical curve inside the envelope.
    """
    kind = kind.upper()
    if kind not in ("G", "F"):
        raise ValueError(f"kind must be G or F, not {kind!r}")
    if n_sims < MIN_SIMS:
        raise ValueError(f"n_sims must be at least {MIN_SIMS}")
    pts = np.asarray(points, dtype=float)
    window = window or StudyWindow.bounding_box(pts)
    if not np.all(window.contains(pts)):
        raise ValueError("window does not contain every event")
    r = _check_grid(default_r_grid(len(pts), window) if r_grid is None else r_grid)
    if kind == "G":
        fn = lambda p: g_function(p, window, r)  # noqa: E731
    else:
        fn = lambda p: f_function(p, window, r, m_reference)  # noqa: E731
    empirical = fn(pts)
    sims = np.empty((n_sims, len(r)))
    for i in range(n_sims):
        sims[i] = fn(window.sample_uniform(len(pts), np.random.default_rng([seed, i])))
    lower, upper = sims.min(axis=0), sims.max(axis=0)
    inside = (empirical >= lower) & (empirical <= upper)
    lam = intensity(len(pts), window)
    return EnvelopeResult(kind, r, empirical, csr_curve(r, lam), lower, upper, n_sims, seed,
                          float(inside.mean()), threshold, lam)


# ---------------------------------------------------------------- density

def quartic_kernel(u) -> float | np.ndarray:
    """3/pi * (1 - |u|^2)^2 on the open unit disc, 0 elsewhere.

    Accepts one 2-vector or an (..., 2) array.
    """
    u = np.asarray(u, dtype=float)
    q = np.sum(u * u, axis=-1)
    out = np.where(q < 1.0, 3.0 / np.pi * (1.0 - q) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class DensityRaster:
    """Grid of density values; row 0 is the southernmost row."""

    origin: tuple[float, float]
    cell_size: float
    n_cols: int
    n_rows: int
    bandwidth: float
    values: np.ndarray
    weight_label: str
    mode: str

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + (np.arange(self.n_cols) + 0.5) * self.cell_size
        ys = self.origin[1] + (np.arange(self.n_rows) + 0.5) * self.cell_size
        return xs, ys

    def write_ascii(self, path) -> None:
        """ESRI ASCII grid, rows written north to south."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"ncols {self.n_cols}\nnrows {self.n_rows}\n")
            fh.write(f"xllcorner {self.origin[0]!r}\nyllcorner {self.origin[1]!r}\n")
            fh.write(f"cellsize {self.cell_size!r}\nNODATA_value -9999\n")
            for row in self.values[::-1]:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")

    def write_csv(self, path) -> None:
        xs, ys = self.cell_centers()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["col", "row", "x_center", "y_center", "value"])
            for j in range(self.n_rows):
                for i in range(self.n_cols):
                    w.writerow([i, j, repr(float(xs[i])), repr(float(ys[j])),
                                repr(float(self.values[j, i]))])


def read_ascii_grid(path) -> tuple[dict, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = {}
        for _ in range(6):
            key, value = fh.readline().split()
            header[key.lower()] = float(value)
        values = np.loadtxt(fh, ndmin=2)
    return header, values[::-1]


def kde_raster(points, weights=None, window: StudyWindow | None = None,
               bandwidth: float = DEFAULT_BANDWIDTH, cell_size: float = DEFAULT_CELL,
               weight_label: str = "count") -> DensityRaster:
    """Quartic-kernel density surface sampled at cell centres.

    With ``weights`` the surface is the weighted intensity
    sum_i w_i K((x - X_i)/h) / h^2 (no 1/n). Without weights it is the
    probability density sum_i K((x - X_i)/h) / (n h^2). The grid covers the
    window padded by one bandwidth on every side.
    """
    if bandwidth <= 0 or cell_size <= 0:
        raise ValueError("bandwidth and cell_size must be positive")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if weights is None:
        mode = "density"
        w = np.full(len(pts), 1.0 / max(len(pts), 1))
    else:
        mode = "weighted"
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(pts),):
            raise ValueError("one weight per point required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
    window = window or StudyWindow.bounding_box(pts)
    x0, y0 = window.xmin - bandwidth, window.ymin - bandwidth
    n_cols = int(math.ceil((window.xmax - window.xmin + 2 * bandwidth) / cell_size))
    n_rows = int(math.ceil((window.ymax - window.ymin + 2 * bandwidth) / cell_size))
    xs = x0 + (np.arange(n_cols) + 0.5) * cell_size
    ys = y0 + (np.arange(n_rows) + 0.5) * cell_size
    grid = np.zeros((n_rows, n_cols))
    reach = int(math.ceil(bandwidth / cell_size)) + 1
    inv_h2 = 1.0 / (bandwidth * bandwidth)
    for (px, py), wi in zip(pts, w):
        if wi == 0.0:
            continue
        ci = int(math.floor((px - x0) / cell_size))
        cj = int(math.floor((py - y0) / cell_size))
        i0, i1 = max(ci - reach, 0), min(ci + reach + 1, n_cols)
        j0, j1 = max(cj - reach, 0), min(cj + reach + 1, n_rows)
        if i0 >= i1 or j0 >= j1:
            continue
        ux = (xs[i0:i1] - px) / bandwidth
        uy = (ys[j0:j1] - py) / bandwidth
        q = uy[:, None] ** 2 + ux[None, :] ** 2
        k = np.where(q < 1.0, (1.0 - q) ** 2, 0.0)
        grid[j0:j1, i0:i1] += (wi * 3.0 / np.pi * inv_h2) * k
    return DensityRaster((float(x0), float(y0)), float(cell_size), n_cols, n_rows,
                         float(bandwidth), grid, weight_label, mode)


@dataclass
class Hotspots:
    cells: list[tuple[int, int]]
    threshold: float


def hotspot_cells(raster: DensityRaster, percentile: float = 95.0) -> Hotspots:
    """Cells (col, row) at or above ``percentile`` of the nonzero values."""
    if not 0 < percentile < 100:
        raise ValueError("percentile must lie strictly between 0 and 100")
    nonzero = raster.values[raster.values > 0]
    if len(nonzero) == 0:
        raise ValueError("raster is entirely zero")
    threshold = float(np.percentile(nonzero, percentile))
    rows, cols = np.nonzero(raster.values >= threshold)
    return Hotspots([(int(c), int(r)) for r, c in zip(rows, cols)], threshold)
