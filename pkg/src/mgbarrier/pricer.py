"""Barrier option prices from chain generators.

All pricing functions return a vector of values indexed by the full grid,
so one matrix exponential yields prices for every starting point.
Knocked-out nodes carry the value they would have at the barrier (zero
for knock-out claims, the rebate for stopped claims).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .genbuild import GeneratorMatrix, build_fd, build_mm, restrict_killed, restrict_stopped
from .grid import Grid
from .matexp import ExpmConfig, expm_action, expm_product_action
from .model import ModelSpec

CONTRACT_KINDS = ("knockout", "knockin", "rebate", "general", "european", "notouch", "onetouch")


@dataclass(frozen=True)
class Payoff:
    """``kind`` is ``call``, ``put``, ``constant`` or ``zero``."""

    kind: str = "call"
    strike: float = 0.0
    amount: float = 1.0

    def __post_init__(self):
        if self.kind not in ("call", "put", "constant", "zero"):
            raise ValueError(f"unknown payoff {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "call":
            return np.maximum(x - self.strike, 0.0)
        if self.kind == "put":
            return np.maximum(self.strike - x, 0.0)
        if self.kind == "constant":
            return np.full(x.shape, float(self.amount))
        return np.zeros(x.shape)


@dataclass(frozen=True)
class BarrierContract:
    kind: str
    maturity: float
    rate: float
    lower: float = 0.0
    upper: float = math.inf
    dividend: float = 0.0
    payoff: Payoff = field(default_factory=Payoff)
    rebate: Payoff = field(default_factory=lambda: Payoff("zero"))

    def __post_init__(self):
        if self.kind not in CONTRACT_KINDS:
            raise ValueError(f"unknown contract kind {self.kind!r}")
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if not (0 <= self.lower < self.upper):
            raise ValueError("need 0 <= lower < upper")


@dataclass
class PriceSurface:
    points: np.ndarray
    values: np.ndarray
    spot: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def at(self, x: float) -> float:
        i = int(np.argmin(np.abs(self.points - x)))
        if not math.isclose(self.points[i], x, rel_tol=1e-10):
            return float(np.interp(x, self.points, self.values))
        return float(self.values[i])

    @property
    def spot_price(self) -> float:
        if self.spot is None:
            raise ValueError("surface has no spot")
        return self.at(self.spot)

    def to_dict(self, digits: int = 9) -> dict:
        fmt = lambda v: float(f"{v:.{digits}g}")
        d = {"spot": self.spot, "price": fmt(self.spot_price) if self.spot is not None else None}
        d.update(self.meta)
        d["grid"] = [fmt(x) for x in self.points]
        d["values"] = [fmt(v) for v in self.values]
        return d

    def to_json(self, path=None, digits: int = 9) -> str:
        s = json.dumps(self.to_dict(digits), indent=2, sort_keys=False)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(s + "\n")
        return s

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in zip(self.points, self.values):
                w.writerow([repr(float(x)), repr(float(v))])


def _mask(grid: Grid, lower, upper):
    pts = grid.points
    return (pts > lower) & (pts < upper)


def _as_vector(f, pts):
    """Payoff values on ``pts``; a list of payoffs gives one column each."""
    if isinstance(f, (list, tuple)):
        return np.column_stack([_as_vector(g, pts) for g in f])
    return np.asarray(f(pts) if callable(f) else np.broadcast_to(f, pts.shape), dtype=float)


def _mask_rows(mask, v):
    return mask if v.ndim == 1 else mask[:, None]


def price_knockout(G: GeneratorMatrix, payoff, T: float, r: float, lower=0.0, upper=math.inf,
                   cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """e^{-rT} E[psi(X_T); no barrier crossing before T]."""
    K = restrict_killed(G, lower, upper)
    pts = G.grid.points
    v = _as_vector(payoff, pts[K.index])
    out = np.zeros((len(pts),) + v.shape[1:])
    out[K.index] = math.exp(-r * T) * expm_action(K.entries, v, T, cfg)
    return out


def price_stopped_general(G: GeneratorMatrix, phi, T: float, r: float, lower=0.0, upper=math.inf,
                          cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """exp(T L_r) phi for the chain stopped on the knock-out set, discounted while alive."""
    S = restrict_stopped(G, lower, upper, r)
    return expm_action(S.entries, _as_vector(phi, G.grid.points), T, cfg)


def price_rebate(G: GeneratorMatrix, rebate, T: float, r: float, lower=0.0, upper=math.inf,
                 cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """Rebate paid at the first exit time if it occurs before T."""
    pts = G.grid.points
    xi = _as_vector(rebate, pts)
    xi = xi * _mask_rows(~_mask(G.grid, lower, upper), xi)
    return price_stopped_general(G, xi, T, r, lower, upper, cfg)


def price_european(G: GeneratorMatrix, payoff, T: float, r: float,
                   cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    return math.exp(-r * T) * expm_action(G.entries, _as_vector(payoff, G.grid.points), T, cfg)


def price_knockin(G: GeneratorMatrix, payoff, T: float, r: float, lower=0.0, upper=math.inf,
                  cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """European value minus the knock-out value (zero knock-out value off the continuation set)."""
    return price_european(G, payoff, T, r, cfg) - price_knockout(G, payoff, T, r, lower, upper, cfg)


def no_touch(G: GeneratorMatrix, T: float, r: float, lower=0.0, upper=math.inf,
             cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    return price_knockout(G, 1.0, T, r, lower, upper, cfg)


def one_touch(G: GeneratorMatrix, T: float, r: float, lower=0.0, upper=math.inf,
              cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """One unit paid at the hitting time."""
    return price_rebate(G, 1.0, T, r, lower, upper, cfg)


def price_schedule(gens: Sequence[GeneratorMatrix], dts: Sequence[float], rates: Sequence[float],
                   payoff, lower=0.0, upper=math.inf, kind: str = "knockout",
                   cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """Piecewise-constant parameters: segment i has generator gens[i], length dts[i], rate rates[i].

    ``kind`` is ``knockout`` (payoff at maturity, killed on exit) or
    ``rebate`` (payoff paid at the exit time).
    """
    if not (len(gens) == len(dts) == len(rates)) or not gens:
        raise ValueError("need matching, non-empty generator/step/rate sequences")
    grid = gens[0].grid
    for g in gens[1:]:
        if len(g.grid) != len(grid) or not np.array_equal(g.grid.points, grid.points):
            raise ValueError("all segments must share one grid")
    pts = grid.points
    if kind == "knockout":
        ks = [restrict_killed(g, lower, upper) for g in gens]
        idx = ks[0].index
        v = _as_vector(payoff, pts[idx])
        out = np.zeros((len(pts),) + v.shape[1:])
        disc = math.exp(-sum(r * dt for r, dt in zip(rates, dts)))
        out[idx] = disc * expm_product_action([k.entries for k in ks], dts, v, cfg)
        return out
    if kind == "rebate":
        ss = [restrict_stopped(g, lower, upper, r).entries for g, r in zip(gens, rates)]
        xi = _as_vector(payoff, pts)
        xi = xi * _mask_rows(~_mask(grid, lower, upper), xi)
        return expm_product_action(ss, dts, xi, cfg)
    raise ValueError(f"unknown schedule kind {kind!r}")


def build_generator(model: ModelSpec, grid: Grid, builder: str = "mm") -> GeneratorMatrix:
    if builder == "mm":
        return build_mm(model, grid)
    if builder == "fd":
        return build_fd(model, grid)
    raise ValueError(f"unknown builder {builder!r}")


def price_contract(contract: BarrierContract, G: GeneratorMatrix,
                   cfg: Optional[ExpmConfig] = None) -> PriceSurface:
    c = contract
    T, r, lo, up = c.maturity, c.rate, c.lower, c.upper
    if c.kind == "knockout":
        v = price_knockout(G, c.payoff, T, r, lo, up, cfg)
        if c.rebate.kind != "zero":
            v = v + price_rebate(G, c.rebate, T, r, lo, up, cfg)
    elif c.kind == "knockin":
        v = price_knockin(G, c.payoff, T, r, lo, up, cfg)
    elif c.kind == "rebate":
        v = price_rebate(G, c.rebate, T, r, lo, up, cfg)
    elif c.kind == "general":
        v = price_stopped_general(G, c.payoff, T, r, lo, up, cfg)
    elif c.kind == "european":
        v = price_european(G, c.payoff, T, r, cfg)
    elif c.kind == "notouch":
        v = no_touch(G, T, r, lo, up, cfg)
    else:
        v = one_touch(G, T, r, lo, up, cfg)
    return PriceSurface(G.grid.points.copy(), v, G.grid.spot, {"kind": c.kind, "n": len(G.grid)})


def greeks(surface: PriceSurface, x: Optional[float] = None) -> dict:
    """Delta and gamma from a three-point stencil on the non-uniform grid."""
    x = surface.spot if x is None else x
    pts, v = surface.points, surface.values
    i = int(np.argmin(np.abs(pts - x)))
    if i == 0 or i == len(pts) - 1:
        raise ValueError("greeks need an interior grid point")
    hm, hp = pts[i] - pts[i - 1], pts[i + 1] - pts[i]
    delta = (-hp / (hm * (hm + hp)) * v[i - 1] + (hp - hm) / (hm * hp) * v[i]
             + hm / (hp * (hm + hp)) * v[i + 1])
    gamma = 2 * (v[i - 1] / (hm * (hm + hp)) - v[i] / (hm * hp) + v[i + 1] / (hp * (hm + hp)))
    return {"delta": float(delta), "gamma": float(gamma)}
