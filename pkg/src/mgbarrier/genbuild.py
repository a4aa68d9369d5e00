"""Generator matrices of the approximating Markov chain.

Two builders are provided:

* :func:`build_mm` - jump intensities from integrating the jump density
  over midpoint cells, plus a tri-diagonal part chosen so the chain
  matches the first two instantaneous moments of the price process;
* :func:`build_fd` - upwind finite differences for the diffusion and the
  small/large jump split of the error analysis (needs stable-type
  parameters for infinite-variation densities).

Boundary rows (smallest and largest grid point) are zero: those states
are absorbing.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .grid import Grid
from .model import ModelSpec, classify_case

log = logging.getLogger(__name__)

ROWSUM_RTOL = 1e-10
NEG_RTOL = 1e-13
MARTINGALE_RTOL = 1e-9


@dataclass
class BuildDiagnostics:
    tail_mass: float = 0.0
    mesh: float = float("nan")
    clamped_count: int = 0
    case: str = "O"
    martingale_residual: float = 0.0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


@dataclass
class GeneratorMatrix:
    """Dense intensity matrix on a grid.

    ``kind`` is ``"full"``, ``"killed"`` (restricted to the continuation
    nodes listed in ``index``) or ``"stopped"`` (same size as the grid,
    knock-out rows zeroed, continuation diagonal shifted by ``-discount``).
    """

    entries: np.ndarray
    grid: Grid
    kind: str = "full"
    discount: float = 0.0
    model: Optional[ModelSpec] = None
    index: Optional[np.ndarray] = None
    clamped: Optional[np.ndarray] = None
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if self.kind not in ("full", "killed", "stopped"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.index is None:
            self.index = np.arange(len(self.grid))

    @property
    def points(self) -> np.ndarray:
        return self.grid.points[self.index]

    def __len__(self):
        return self.entries.shape[0]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g")


def _row_moments(L: np.ndarray, pts: np.ndarray, rows=None, chunk: int = 256):
    """First and second moments sum_j L[i, j] (x_j - x_i)^p for p = 1, 2."""
    rows = np.arange(L.shape[0]) if rows is None else rows
    m1 = np.zeros(len(rows))
    m2 = np.zeros(len(rows))
    for s in range(0, len(rows), chunk):
        r = rows[s:s + chunk]
        d = pts[None, :] - pts[r, None]
        Lr = L[r]
        m1[s:s + chunk] = np.einsum("ij,ij->i", Lr, d)
        m2[s:s + chunk] = np.einsum("ij,ij->i", Lr, d * d)
    return m1, m2


# -- moment-matching builder ----------------------------------------------

def midpoint_cells(pts: np.ndarray, x: float):
    """Cell edges in relative-jump space for jumps from ``x`` to each grid point."""
    y = pts / x - 1.0
    mid = 0.5 * (y[:-1] + y[1:])
    lo = np.concatenate([[-1.0], mid])
    hi = np.concatenate([mid, [np.inf]])
    return lo, hi


def build_jump_mm(model: ModelSpec, grid: Grid) -> np.ndarray:
    """Jump intensities by integrating the density over midpoint cells."""
    pts = grid.points
    N = len(pts)
    LJ = np.zeros((N, N))
    if model.jump is None:
        return LJ
    for i in range(1, N - 1):
        x = pts[i]
        lo, hi = midpoint_cells(pts, x)
        others = np.arange(N) != i
        mass = model.jump.cell_mass(x, lo[others], hi[others], 0)
        if not np.all(np.isfinite(mass)):
            bad = np.flatnonzero(~np.isfinite(mass))[0]
            raise FloatingPointError(
                f"jump cell integral failed at x={x}, cell [{lo[others][bad]}, {hi[others][bad]}]")
        LJ[i, others] = mass
        LJ[i, i] = -mass.sum()
    return LJ


def build_diffusion_mm(model: ModelSpec, grid: Grid, LJ: np.ndarray):
    """Tri-diagonal part matching drift and variance given the jump part.

    Returns ``(LD, clamped)`` where ``clamped`` is an int array per node:
    0 exact, 1 variance equation dropped, 2 drift and variance dropped.
    """
    pts = grid.points
    N = len(pts)
    LD = np.zeros((N, N))
    clamped = np.zeros(N, dtype=int)
    i = np.arange(1, N - 1)
    x = pts[i]
    dm = x - pts[i - 1]
    dp = pts[i + 1] - x
    jm1, jm2 = _row_moments(LJ, pts, i)
    m2 = 0.0
    if model.jump is not None:
        m2 = np.array([model.jump.second_moment(xx) for xx in x])
    b = model.gamma * x - jm1
    v = x ** 2 * (model.vol(x) ** 2 + m2) - jm2
    lo = (v - b * dp) / (dm * (dm + dp))
    up = (v + b * dm) / (dp * (dm + dp))

    ljm, ljp = LJ[i, i - 1], LJ[i, i + 1]
    bad_lo = lo + ljm < 0
    bad_up = up + ljp < 0
    # repair the drift equation with the remaining neighbour
    only_lo = bad_lo & ~bad_up
    lo = np.where(only_lo, -ljm, lo)
    up = np.where(only_lo, (b + lo * dm) / dp, up)
    only_up = bad_up & ~bad_lo
    up = np.where(only_up, -ljp, up)
    lo = np.where(only_up, (up * dp - b) / dm, lo)
    clamped[i] = np.where(only_lo | only_up, 1, 0)
    still = (lo + ljm < 0) | (up + ljp < 0)
    lo = np.where(still, np.maximum(lo, -ljm), lo)
    up = np.where(still, np.maximum(up, -ljp), up)
    clamped[i] = np.where(still, 2, clamped[i])

    LD[i, i - 1] = lo
    LD[i, i + 1] = up
    LD[i, i] = -(lo + up)
    if np.any(clamped):
        log.info("moment matching clamped %d of %d nodes", np.count_nonzero(clamped), N - 2)
    return LD, clamped


def build_mm(model: ModelSpec, grid: Grid) -> GeneratorMatrix:
    LJ = build_jump_mm(model, grid)
    LD, clamped = build_diffusion_mm(model, grid, LJ)
    L = LJ + LD
    # off-diagonals that are zero up to roundoff after clamping
    L[np.abs(L) < 1e-300] = 0.0
    return GeneratorMatrix(L, grid, "full", model=model, clamped=clamped,
                           lower=grid.lower, upper=grid.upper)


# -- finite-difference builder ---------------------------------------------

def c_alpha(alpha: float, h: float) -> float:
    if alpha == 1:
        return -math.log(h)
    if 1 < alpha < 2:
        return (2 - alpha) / (alpha - 1)
    raise ValueError(f"window constant undefined for alpha={alpha}")


def window_constants(info, h: float, d_pm=None) -> tuple[float, float]:
    """C_+(h), C_-(h) for the excluded small-jump window."""
    if not info.has_stable_params:
        raise ValueError("stable-type parameters (alpha, kappa bounds) are required for case I/II")
    if d_pm is None:
        d_pm = (2 * info.kappa_upper[0] / info.kappa_lower[0],
                2 * info.kappa_upper[1] / info.kappa_lower[1])
    return (d_pm[0] * c_alpha(info.alpha_plus, h), d_pm[1] * c_alpha(info.alpha_minus, h))


def build_fd(model: ModelSpec, grid: Grid, d_pm=None) -> GeneratorMatrix:
    pts = grid.points
    N = len(pts)
    h = grid.mesh
    L = np.zeros((N, N))
    i = np.arange(1, N - 1)
    x = pts[i]
    dm = x - pts[i - 1]
    dp = pts[i + 1] - x
    s2 = model.vol(x) ** 2 * x ** 2
    g = model.gamma * x
    L[i, i - 1] += s2 / (dm * (dm + dp)) + np.maximum(-g, 0) / dm
    L[i, i + 1] += s2 / (dp * (dm + dp)) + np.maximum(g, 0) / dp

    jump = model.jump
    if jump is not None:
        case = classify_case(jump, grid.lower or pts[1], grid.upper if math.isfinite(grid.upper) else pts[-2])
        if case.tag not in ("O", "I", "II"):
            raise ValueError("finite-difference builder needs a classified jump density")
        if case.tag != "O":
            Cp, Cm = window_constants(case.info, h, d_pm)
        for ii in range(1, N - 1):
            xi = pts[ii]
            y = pts / xi - 1.0
            dmi, dpi = xi - pts[ii - 1], pts[ii + 1] - xi
            k_up = np.arange(ii + 1, N)
            k_dn = np.arange(0, ii)
            # cells: above x_i round up to x_k, below round up towards x_i
            lo_up, hi_up = y[k_up - 1], y[k_up]
            lo_dn, hi_dn = y[k_dn], y[k_dn + 1]
            big = pts[k_up] > 2 * xi
            if np.any(big):
                kb = k_up[big]
                c0 = jump.cell_mass(xi, lo_up[big], hi_up[big], 0)
                c1 = jump.cell_mass(xi, lo_up[big], hi_up[big], 1)
                L[ii, kb] += c0
                L[ii, ii - 1] += xi * c1.sum() / dmi
            ks_up = k_up[~big]
            if case.tag == "O":
                ks = np.concatenate([k_dn, ks_up])
                clo = np.concatenate([lo_dn, lo_up[~big]])
                chi = np.concatenate([hi_dn, hi_up[~big]])
                c1 = jump.cell_mass(xi, clo, chi, 1)
                L[ii, ks] += xi / np.abs(pts[ks] - xi) * c1
                a = jump.small_first_moment(xi)
                if a >= 0:
                    L[ii, ii - 1] += xi * a / dmi
                else:
                    L[ii, ii + 1] += -xi * a / dpi
            else:
                above = np.flatnonzero(pts >= xi + Cp * h)
                below = np.flatnonzero(pts <= xi - Cm * h)
                b_hi = above[0] if len(above) and above[0] > ii else N - 1
                b_lo = below[-1] if len(below) and below[-1] < ii else 0
                w_lo, w_hi = y[b_lo], y[b_hi]
                c2_ii = jump.cell_mass(xi, w_lo, w_hi, 2)[0]
                # outside-window cells, clipped to the complement of the window
                sel_up = ks_up[ks_up > b_hi]
                sel_dn = k_dn[k_dn < b_lo]
                clo = np.concatenate([y[sel_dn], np.maximum(y[sel_up - 1], w_hi)])
                chi = np.concatenate([np.minimum(y[sel_dn + 1], w_lo), y[sel_up]])
                ks = np.concatenate([sel_dn, sel_up])
                c2 = jump.cell_mass(xi, clo, chi, 2)
                w = (xi / (pts[ks] - xi)) ** 2 * c2
                D = np.sum(w * (pts[ks] - xi))
                L[ii, ks] += w
                L[ii, ii + 1] += c2_ii * xi ** 2 / (dpi * (dmi + dpi)) - D / (dmi + dpi)
                L[ii, ii - 1] += c2_ii * xi ** 2 / (dmi * (dmi + dpi)) + D / (dmi + dpi)
    np.fill_diagonal(L, 0.0)
    L[i, i] = -L[i].sum(axis=1)
    L[0] = 0.0
    L[-1] = 0.0
    return GeneratorMatrix(L, grid, "full", model=model, clamped=np.zeros(N, dtype=int),
                           lower=grid.lower, upper=grid.upper)


# -- restrictions -----------------------------------------------------------

def _continuation(G: GeneratorMatrix, lower, upper):
    pts = G.grid.points
    return (pts > lower) & (pts < upper)


def restrict_killed(G: GeneratorMatrix, lower: float = 0.0, upper: float = math.inf) -> GeneratorMatrix:
    """Sub-generator of the chain killed on leaving (lower, upper)."""
    if G.kind != "full":
        raise ValueError("restrict_killed expects a full generator")
    mask = _continuation(G, lower, upper)
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        raise ValueError("no grid points strictly between the barriers")
    return GeneratorMatrix(G.entries[np.ix_(idx, idx)].copy(), G.grid, "killed", 0.0, G.model, idx,
                           None if G.clamped is None else G.clamped[idx], lower, upper)


def restrict_stopped(G: GeneratorMatrix, lower: float = 0.0, upper: float = math.inf,
                     r: float = 0.0) -> GeneratorMatrix:
    """Generator of the chain stopped on entering the knock-out set and killed at rate r."""
    if G.kind != "full":
        raise ValueError("restrict_stopped expects a full generator")
    if r < 0:
        raise ValueError("discount rate must be non-negative")
    mask = _continuation(G, lower, upper)
    S = G.entries.copy()
    S[~mask] = 0.0
    idx = np.flatnonzero(mask)
    S[idx, idx] -= r
    return GeneratorMatrix(S, G.grid, "stopped", r, G.model, None, G.clamped, lower, upper)


# -- diagnostics ----------------------------------------------------------

def tail_mass(model: Optional[ModelSpec], grid: Grid, lower=None, upper=None) -> float:
    """Largest jump mass falling outside (x_2, x_{N-1}) from a node in [lower, upper]."""
    if model is None or model.jump is None:
        return 0.0
    pts = grid.points
    lower = grid.lower if lower is None else lower
    upper = grid.upper if upper is None else upper
    nodes = pts[1:-1]
    nodes = nodes[(nodes >= lower) & (nodes <= upper)]
    k = 0.0
    for x in nodes:
        m = model.jump.cell_mass(x, [-1.0, pts[-2] / x - 1.0], [pts[1] / x - 1.0, np.inf], 0)
        k = max(k, float(m.sum()))
    return k


def martingale_residual(G: GeneratorMatrix) -> float:
    """max |sum_y L(x, y)(y - x) - gamma x| over interior nodes where drift was matched."""
    if G.model is None:
        return float("nan")
    pts = G.grid.points
    rows = np.arange(1, len(pts) - 1)
    if G.clamped is not None:
        rows = rows[G.clamped[rows] < 2]
    m1, _ = _row_moments(G.entries, pts, rows)
    return float(np.max(np.abs(m1 - G.model.gamma * pts[rows]))) if len(rows) else 0.0


def validate(G: GeneratorMatrix, with_tail: bool = True) -> BuildDiagnostics:
    """Check the invariants of the generator's kind; never raises on violations."""
    A = G.entries
    viol = []
    n = A.shape[0]
    scale = np.max(np.abs(A), axis=1) if n else np.zeros(0)
    off = A - np.diag(np.diag(A))
    neg = off < -NEG_RTOL * np.maximum(scale[:, None], 1e-300)
    if np.any(neg):
        r, c = np.argwhere(neg)[0]
        viol.append(f"negative off-diagonal {A[r, c]:.3e} at ({r}, {c})")
    rs = A.sum(axis=1)
    tol = ROWSUM_RTOL * np.maximum(scale, 1e-300)
    if G.kind == "full":
        interior = np.arange(1, n - 1)
        bad = interior[np.abs(rs[interior]) > tol[interior]]
        if len(bad):
            viol.append(f"row sum {rs[bad[0]]:.3e} != 0 at row {bad[0]}")
        for b in (0, n - 1):
            if np.any(A[b] != 0):
                viol.append(f"boundary row {b} is not zero")
    elif G.kind == "killed":
        bad = np.flatnonzero(rs > tol)
        if len(bad):
            viol.append(f"row sum {rs[bad[0]]:.3e} > 0 at row {bad[0]}")
    else:
        mask = _continuation(G, G.lower, G.upper)
        if np.any(A[~mask] != 0):
            viol.append("knock-out rows are not zero")
        cont = np.flatnonzero(mask)
        cont = cont[(cont > 0) & (cont < n - 1)]
        bad = cont[np.abs(rs[cont] + G.discount) > tol[cont] + ROWSUM_RTOL * G.discount]
        if len(bad):
            viol.append(f"row sum {rs[bad[0]]:.3e} != -r at row {bad[0]}")

    diag = BuildDiagnostics(mesh=G.grid.mesh)
    diag.clamped_count = int(np.count_nonzero(G.clamped)) if G.clamped is not None else 0
    if G.model is not None:
        diag.case = classify_case(G.model.jump, G.grid.lower or G.grid.points[1],
                                  G.grid.upper if math.isfinite(G.grid.upper) else G.grid.points[-2]).tag
        if G.kind == "full":
            diag.martingale_residual = martingale_residual(G)
        if with_tail:
            diag.tail_mass = tail_mass(G.model, G.grid)
    diag.violations = viol
    return diag
