"""Non-uniform state spaces clustered around spot and barrier levels.

Each region is a two-sided sinh-stretched subgrid: points concentrate
around a centre ``s`` and spread out towards the endpoints ``a`` and ``b``.
Small density parameters give strong clustering, large ones give nearly
uniform spacing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEDUP_RTOL = 1e-12


@dataclass(frozen=True)
class SubgridParams:
    a: float
    s: float
    b: float
    M: int
    g1: float
    g2: float

    def __post_init__(self):
        if not (self.a < self.s < self.b):
            raise ValueError(f"need a < s < b, got a={self.a}, s={self.s}, b={self.b}")
        if self.M < 4 or self.M % 2:
            raise ValueError(f"point count M must be even and >= 4, got {self.M}")
        if self.g1 <= 0 or self.g2 <= 0:
            raise ValueError("density parameters must be positive")


@dataclass(frozen=True)
class GridParams:
    """Inputs for the three-region grid.

    ``counts`` are the per-region point counts (N1, N2, N3) and
    ``densities`` the six parameters (d1-, d1+, d2-, d2+, d3-, d3+).
    A single-barrier contract is described with ``lower=0`` or
    ``upper=inf``; only the first two counts/density pairs are used then.
    """

    counts: tuple[int, int, int]
    densities: tuple[float, float, float, float, float, float]
    x1: float
    xN: float
    spot: float
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if len(self.counts) != 3 or len(self.densities) != 6:
            raise ValueError("need three counts and six density parameters")
        if any(d <= 0 for d in self.densities):
            raise ValueError("density parameters must be positive")
        if not (self.lower < self.spot < self.upper):
            raise ValueError(
                f"spot {self.spot} must lie strictly inside ({self.lower}, {self.upper})")
        if not (self.x1 < self.spot < self.xN):
            raise ValueError("spot must lie strictly inside (x1, xN)")
        if self.lower > 0 and self.x1 > self.lower:
            raise ValueError("x1 must not exceed the lower barrier")
        if math.isfinite(self.upper) and self.xN < self.upper:
            raise ValueError("xN must not be below the upper barrier")

    @classmethod
    def with_total(cls, N: int, densities, x1, xN, spot, lower=0.0, upper=math.inf):
        """Split a total of ``N`` grid points into even region counts."""
        return cls(split_counts(N, n_regions=_n_regions(lower, upper)),
                   tuple(densities), x1, xN, spot, lower, upper)


def _n_regions(lower, upper):
    return 1 + (lower > 0) + math.isfinite(upper)


def split_counts(N: int, n_regions: int = 3) -> tuple[int, int, int]:
    """Even per-region counts giving about ``N`` points once shared endpoints merge.

    Regions share endpoints, so the counts sum to ``N + n_regions - 1``
    (rounded to even counts); the middle region takes the remainder.
    """
    total = N + n_regions - 1
    if n_regions == 3:
        outer = max(4, 2 * round(total / 6))
        mid = max(4, 2 * round((total - 2 * outer) / 2))
        return (outer, mid, outer)
    if n_regions == 2:
        half = max(4, 2 * round(total / 4))
        return (half, max(4, 2 * round((total - half) / 2)), 0)
    return (max(4, 2 * round(N / 2)), 0, 0)


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    lower: float = 0.0
    upper: float = math.inf
    spot: float | None = None
    params: GridParams | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 3:
            raise ValueError("grid needs at least three points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.points)))

    @property
    def boundary(self) -> np.ndarray:
        return np.array([0, len(self.points) - 1])

    @property
    def interior(self) -> np.ndarray:
        return np.arange(1, len(self.points) - 1)

    @property
    def continuation(self) -> np.ndarray:
        """Boolean mask of the nodes strictly between the barriers."""
        return (self.points > self.lower) & (self.points < self.upper)

    def index_of(self, x: float) -> int:
        i = int(np.argmin(np.abs(self.points - x)))
        if not math.isclose(self.points[i], x, rel_tol=1e-12, abs_tol=0.0):
            raise KeyError(f"{x} is not a grid point")
        return i

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"])
            for x in self.points:
                w.writerow([repr(float(x))])

    @classmethod
    def from_csv(cls, path, **kw) -> "Grid":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["x"]:
            raise ValueError("grid CSV must have a single 'x' header")
        return cls(np.array([float(r[0]) for r in rows[1:]]), **kw)


def generate_subgrid(p: SubgridParams) -> np.ndarray:
    """Sinh-stretched points on [a, b] clustered at s; returns M points."""
    half = p.M // 2
    c1 = math.asinh((p.a - p.s) / p.g1)
    c2 = math.asinh((p.b - p.s) / p.g2)
    k = np.arange(1, half + 1)
    lower = p.s + p.g1 * np.sinh(c1 * (1.0 - (k - 1) / (half - 1)))
    upper = p.s + p.g2 * np.sinh(c2 * 2.0 * k / p.M)
    pts = np.concatenate([lower, upper])
    # pin the anchors exactly; sinh(asinh(z)) can be off by an ulp
    pts[0], pts[half - 1], pts[-1] = p.a, p.s, p.b
    if np.any(np.diff(pts) <= 0):
        raise ValueError("subgrid is not strictly increasing (density parameter too small?)")
    return pts


def _merge(parts) -> np.ndarray:
    pts = np.unique(np.concatenate(parts))
    keep = np.ones(len(pts), dtype=bool)
    scale = np.maximum(np.abs(pts[1:]), np.abs(pts[:-1]))
    keep[1:] = np.diff(pts) > DEDUP_RTOL * scale
    return pts[keep]


def build_grid(p: GridParams) -> Grid:
    """Concatenate the subgrids around the lower barrier, spot and upper barrier.

    With a single barrier (``lower == 0`` or ``upper == inf``) two regions
    are used; with no barrier one region centred at spot.
    """
    S0, lo, up = p.spot, p.lower, p.upper
    d = p.densities
    has_lo, has_up = lo > 0, math.isfinite(up)
    specs = []
    if has_lo and has_up:
        b1, b2 = (S0 + lo) / 2, (up + S0) / 2
        specs = [(p.x1, lo, b1, p.counts[0], d[0], d[1]),
                 (b1, S0, b2, p.counts[1], d[2], d[3]),
                 (b2, up, p.xN, p.counts[2], d[4], d[5])]
    elif has_up:
        b = (up + S0) / 2
        specs = [(p.x1, S0, b, p.counts[0], d[0], d[1]),
                 (b, up, p.xN, p.counts[1], d[2], d[3])]
    elif has_lo:
        b = (S0 + lo) / 2
        specs = [(p.x1, lo, b, p.counts[0], d[0], d[1]),
                 (b, S0, p.xN, p.counts[1], d[2], d[3])]
    else:
        specs = [(p.x1, S0, p.xN, p.counts[0], d[0], d[1])]
    if has_lo and p.x1 >= lo:
        raise ValueError("x1 must lie strictly below the lower barrier")
    if has_up and p.xN <= up:
        raise ValueError("xN must lie strictly above the upper barrier")

    pts = _merge([generate_subgrid(SubgridParams(*s)) for s in specs])
    grid = Grid(pts, lower=lo, upper=up, spot=S0, params=p)
    if has_lo and has_up and np.count_nonzero(grid.continuation) < 4:
        raise ValueError("fewer than 4 grid points strictly between the barriers")
    return grid


def single_barrier_grid(p: GridParams) -> Grid:
    """Two-region grid for a one-sided (or barrier-free) contract."""
    if p.lower > 0 and math.isfinite(p.upper):
        raise ValueError("single_barrier_grid needs lower == 0 or upper == inf")
    return build_grid(p)
