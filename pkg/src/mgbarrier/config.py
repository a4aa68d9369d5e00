"""JSON job configuration and the pricing setup it describes.

Example::

    {
      "model": {"type": "gbm", "sigma0": 0.2, "r": 0.02, "d": 0.0},
      "contract": {"kind": "knockout", "maturity": 1.0, "rate": 0.02,
                   "lower": 1.5, "upper": 2.5,
                   "payoff": {"kind": "call", "strike": 2.0}},
      "grid": {"N": 200, "x1": 0.2, "xN": 10.0, "spot": 2.0,
               "densities": [100, 1, 10, 10, 1, 100]},
      "builder": "mm",
      "expm": {"method": "auto", "tol": 1e-12}
    }

``model.type`` is one of ``gbm``, ``localvol``, ``kou_local`` or ``cgmy``.
An optional ``schedule`` is a list of segments ``{"dt": .., "rate": ..,
"model": {...}}`` whose model entries override the base model fields.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .genbuild import GeneratorMatrix, build_fd, build_mm
from .grid import Grid, GridParams, build_grid
from .matexp import ExpmConfig
from .model import (CGMYParams, KouLocalLevyParams, ModelSpec, cgmy, gbm, kou_local_levy,
                    localvol)
from .pricer import BarrierContract, Payoff, PriceSurface, price_contract, price_schedule


class ConfigError(ValueError):
    """Malformed or inconsistent job configuration."""


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing field '{key}'")
    return d[key]


def _num(x, where):
    if x is None:
        return math.inf
    if isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {x!r}") from None


def model_from_dict(d: dict, spot: Optional[float] = None) -> ModelSpec:
    t = _need(d, "type", "model")
    try:
        if t == "gbm":
            return gbm(float(_need(d, "sigma0", "model")), float(_need(d, "r", "model")),
                       float(d.get("d", 0.0)))
        if t == "localvol":
            return localvol(float(_need(d, "sigma0", "model")), float(_need(d, "r", "model")),
                            float(d.get("d", 0.0)), float(d.get("beta", 0.0)),
                            float(d.get("s_ref", spot or 1.0)))
        if t == "kou_local":
            return kou_local_levy(KouLocalLevyParams(
                S0=float(d.get("S0", spot)), sigma0=float(_need(d, "sigma0", "model")),
                lam=float(_need(d, "lam", "model")), p=float(_need(d, "p", "model")),
                eta1=float(_need(d, "eta1", "model")), eta2=float(_need(d, "eta2", "model")),
                beta=float(d.get("beta", 0.0)), r=float(_need(d, "r", "model")),
                d=float(d.get("d", 0.0))))
        if t == "cgmy":
            return cgmy(CGMYParams(C=float(_need(d, "C", "model")), G=float(_need(d, "G", "model")),
                                   M=float(_need(d, "M", "model")), Y=float(_need(d, "Y", "model")),
                                   r=float(_need(d, "r", "model")), d=float(d.get("d", 0.0)),
                                   sigma_extra=float(d.get("sigma_extra", 0.0))))
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"model: {e}") from e
    raise ConfigError(f"model: unknown type {t!r}")


def payoff_from_dict(d) -> Payoff:
    if d is None:
        return Payoff("zero")
    try:
        return Payoff(d.get("kind", "call"), float(d.get("strike", 0.0)), float(d.get("amount", 1.0)))
    except ValueError as e:
        raise ConfigError(f"payoff: {e}") from e


def contract_from_dict(d: dict) -> BarrierContract:
    try:
        return BarrierContract(
            kind=_need(d, "kind", "contract"),
            maturity=_num(_need(d, "maturity", "contract"), "contract.maturity"),
            rate=_num(_need(d, "rate", "contract"), "contract.rate"),
            lower=_num(d.get("lower", 0.0), "contract.lower"),
            upper=_num(d.get("upper", math.inf), "contract.upper"),
            dividend=_num(d.get("dividend", 0.0), "contract.dividend"),
            payoff=payoff_from_dict(d.get("payoff", {"kind": "call"})),
            rebate=payoff_from_dict(d.get("rebate")))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"contract: {e}") from e


@dataclass
class Setup:
    """A model, a contract and grid inputs; grids are built per size N."""

    name: str
    model: ModelSpec
    contract: BarrierContract
    spot: float
    x1: float
    xN: float
    densities: tuple
    N: int = 200
    counts: Optional[tuple] = None
    builder: str = "mm"
    expm: ExpmConfig = field(default_factory=ExpmConfig)
    schedule: Optional[list] = None

    def grid_params(self, N: Optional[int] = None) -> GridParams:
        c = self.contract
        if self.counts is not None and N is None:
            return GridParams(tuple(self.counts), tuple(self.densities), self.x1, self.xN,
                              self.spot, c.lower, c.upper)
        return GridParams.with_total(N or self.N, self.densities, self.x1, self.xN, self.spot,
                                     c.lower, c.upper)

    def grid(self, N: Optional[int] = None) -> Grid:
        return build_grid(self.grid_params(N))

    def generator(self, N: Optional[int] = None, builder: Optional[str] = None,
                  model: Optional[ModelSpec] = None, grid: Optional[Grid] = None) -> GeneratorMatrix:
        builder = builder or self.builder
        grid = grid or self.grid(N)
        model = model or self.model
        if builder == "mm":
            return build_mm(model, grid)
        if builder == "fd":
            return build_fd(model, grid)
        raise ConfigError(f"unknown builder {builder!r}")

    def surface(self, N: Optional[int] = None, builder: Optional[str] = None) -> PriceSurface:
        if self.schedule:
            return self._schedule_surface(N, builder)
        G = self.generator(N, builder)
        return price_contract(self.contract, G, self.expm)

    def price(self, N: Optional[int] = None, builder: Optional[str] = None) -> float:
        return self.surface(N, builder).spot_price

    def _schedule_surface(self, N, builder) -> PriceSurface:
        c = self.contract
        if c.kind not in ("knockout", "rebate"):
            raise ConfigError("schedules support knockout and rebate contracts only")
        grid = self.grid(N)
        gens, dts, rates = [], [], []
        for seg in self.schedule:
            gens.append(self.generator(builder=builder, model=seg["model"], grid=grid))
            dts.append(seg["dt"])
            rates.append(seg["rate"])
        pay = c.payoff if c.kind == "knockout" else c.rebate
        v = price_schedule(gens, dts, rates, pay, c.lower, c.upper, c.kind, self.expm)
        return PriceSurface(grid.points.copy(), v, grid.spot, {"kind": c.kind, "n": len(grid)})


def setup_from_dict(cfg: dict, name: str = "job") -> Setup:
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    g = _need(cfg, "grid", "config")
    spot = _num(_need(g, "spot", "grid"), "grid.spot")
    base_model = dict(_need(cfg, "model", "config"))
    model = model_from_dict(base_model, spot)
    contract = contract_from_dict(_need(cfg, "contract", "config"))
    dens = tuple(float(x) for x in g.get("densities", (100, 1, 10, 10, 1, 100)))
    if len(dens) != 6:
        raise ConfigError("grid.densities: need six values")
    builder = cfg.get("builder", "mm")
    if builder not in ("mm", "fd"):
        raise ConfigError(f"builder: expected 'mm' or 'fd', got {builder!r}")
    e = cfg.get("expm", {})
    try:
        ecfg = ExpmConfig(e.get("method", "auto"), float(e.get("tol", 1e-12)),
                          int(e.get("max_terms", 20000)))
    except ValueError as err:
        raise ConfigError(f"expm: {err}") from err
    schedule = None
    if cfg.get("schedule"):
        schedule = []
        for k, seg in enumerate(cfg["schedule"]):
            where = f"schedule[{k}]"
            m = dict(base_model)
            m.update(seg.get("model", {}))
            schedule.append({"dt": _num(_need(seg, "dt", where), where + ".dt"),
                             "rate": _num(seg.get("rate", contract.rate), where + ".rate"),
                             "model": model_from_dict(m, spot)})
        total = sum(s["dt"] for s in schedule)
        if not math.isclose(total, contract.maturity, rel_tol=1e-9):
            raise ConfigError(f"schedule: segment lengths sum to {total}, maturity is {contract.maturity}")
    counts = tuple(int(c) for c in g["counts"]) if "counts" in g else None
    try:
        setup = Setup(name, model, contract, spot, _num(_need(g, "x1", "grid"), "grid.x1"),
                      _num(_need(g, "xN", "grid"), "grid.xN"), dens, int(g.get("N", 200)), counts,
                      builder, ecfg, schedule)
        setup.grid_params()
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(f"grid: {err}") from err
    return setup


def load_config(path) -> tuple[Setup, dict]:
    """Read a JSON job file; returns the setup and the raw dict (echoed into outputs)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from e
    return setup_from_dict(raw, name=str(path)), raw
