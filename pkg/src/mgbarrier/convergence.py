"""Empirical convergence studies over grid sizes."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .genbuild import tail_mass
from .grid import Grid
from .model import ModelSpec, classify_case, error_form

log = logging.getLogger(__name__)

NOISE_FACTOR = 10.0


@dataclass
class ConvergenceReport:
    sizes: list
    values: list
    errors: list
    slope: Optional[float]
    intercept: Optional[float]
    reference: float
    reference_source: str = "external"
    used: list = field(default_factory=list)
    predicted: Optional[str] = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None) -> str:
        s = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(s + "\n")
        return s

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "price", "error"])
            for row in zip(self.sizes, self.values, self.errors):
                w.writerow([row[0], repr(float(row[1])), repr(float(row[2]))])


def fit_slope(sizes, errors, floor: float = 0.0):
    """OLS slope and intercept of log|error| against log N, ignoring errors at or below ``floor``."""
    n = np.asarray(sizes, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    use = e > floor
    if use.sum() < 2:
        return None, None, use
    slope, icpt = np.polyfit(np.log(n[use]), np.log(e[use]), 1)
    return float(slope), float(icpt), use


def run_study(task: Callable[[int], float], sizes: Sequence[int], reference: float,
              reference_source: str = "external", tol: float = 1e-12,
              predicted: Optional[str] = None) -> ConvergenceReport:
    """Price with ``task(N)`` for each size and regress the errors against N.

    ``reference_source`` flags where the reference came from, e.g.
    ``"analytic"`` or ``"self:N=6400"`` for a high-resolution run.
    """
    sizes = list(sizes)
    if len(sizes) < 3:
        raise ValueError("a convergence study needs at least 3 sizes")
    values = [float(task(N)) for N in sizes]
    errors = [abs(v - reference) for v in values]
    slope, icpt, use = fit_slope(sizes, errors, NOISE_FACTOR * tol)
    if slope is None:
        log.warning("all errors below the noise floor; slope undefined")
    return ConvergenceReport(sizes, values, errors, slope, icpt, float(reference), reference_source,
                             [bool(u) for u in use], predicted)


def predicted_bound(model: ModelSpec, grid: Grid) -> Optional[str]:
    """The theoretical bound C1 E(h) + C2 k for the current grid, as text."""
    lo = grid.lower if grid.lower > 0 else grid.points[1]
    hi = grid.upper if math.isfinite(grid.upper) else grid.points[-2]
    case = classify_case(model.jump, lo, hi)
    E = error_form(case.tag)
    if E is None:
        return None
    h = grid.mesh
    k = tail_mass(model, grid)
    form = "h" if case.tag in ("O", "II") else "-h log h"
    return f"case {case.tag}: C1*E(h) + C2*k with E(h) = {form} = {E(h):.6g}, h = {h:.6g}, k = {k:.6g}"
