"""Independent reference values used to check the chain prices.

* a closed-form image series for double knock-out calls and puts under
  geometric Brownian motion with flat barriers, and an eigenfunction
  expansion of the same price as a second analytic route;
* an Euler-type product of one-step matrices for exit problems on tiny
  chains (independent of any matrix exponential routine);
* a seeded Monte Carlo estimator with Brownian-bridge barrier checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .model import CGMYJumps, KouJumps, ModelSpec


def gbm_double_barrier(S: float, X: float, L: float, U: float, T: float, r: float, sigma: float,
                       b: Optional[float] = None, kind: str = "call", n_terms: int = 10) -> float:
    """Double knock-out call/put with continuous monitoring; ``b`` is the cost of carry (r - q)."""
    if not (L < S < U):
        return 0.0
    b = r if b is None else b
    sq = sigma * math.sqrt(T)
    mu = 2 * b / sigma ** 2 + 1
    carry = (b + sigma ** 2 / 2) * T
    N = ndtr
    s1 = s2 = 0.0
    if kind == "call":
        lo_strike, hi_strike = X, U
    elif kind == "put":
        lo_strike, hi_strike = L, X
    else:
        raise ValueError("kind must be 'call' or 'put'")
    for n in range(-n_terms, n_terms + 1):
        a = (U / L) ** n
        c = L ** (n + 1) / (U ** n * S)
        d1 = (math.log(S * U ** (2 * n) / (lo_strike * L ** (2 * n))) + carry) / sq
        d2 = (math.log(S * U ** (2 * n) / (hi_strike * L ** (2 * n))) + carry) / sq
        d3 = (math.log(L ** (2 * n + 2) / (lo_strike * S * U ** (2 * n))) + carry) / sq
        d4 = (math.log(L ** (2 * n + 2) / (hi_strike * S * U ** (2 * n))) + carry) / sq
        s1 += a ** mu * (N(d1) - N(d2)) - c ** mu * (N(d3) - N(d4))
        s2 += a ** (mu - 2) * (N(d1 - sq) - N(d2 - sq)) - c ** (mu - 2) * (N(d3 - sq) - N(d4 - sq))
    v = S * math.exp((b - r) * T) * s1 - X * math.exp(-r * T) * s2
    return float(v if kind == "call" else -v)


def _exp_sin_integral(beta, w, a, b):
    """Integral of e^(beta y) sin(w y) over [a, b]."""
    F = lambda y: np.exp(beta * y) * (beta * np.sin(w * y) - w * np.cos(w * y)) / (beta ** 2 + w ** 2)
    return F(b) - F(a)


def gbm_double_barrier_spectral(S: float, X: float, L: float, U: float, T: float, r: float,
                                sigma: float, b: Optional[float] = None, kind: str = "call",
                                n_modes: int = 400) -> float:
    """Double knock-out call/put from the sine expansion of the killed log-price density."""
    if not (L < S < U):
        return 0.0
    b = r if b is None else b
    a = math.log(U / L)
    mu = b - sigma ** 2 / 2
    al = mu / sigma ** 2
    y0, k = math.log(S / L), math.log(X / L)
    w = np.arange(1, n_modes + 1) * math.pi / a
    decay = np.exp(-(mu ** 2 / (2 * sigma ** 2) + sigma ** 2 * w ** 2 / 2) * T)
    if kind == "call":
        c = L * _exp_sin_integral(al + 1, w, k, a) - X * _exp_sin_integral(al, w, k, a)
    elif kind == "put":
        c = X * _exp_sin_integral(al, w, 0.0, k) - L * _exp_sin_integral(al + 1, w, 0.0, k)
    else:
        raise ValueError("kind must be 'call' or 'put'")
    tot = np.sum(decay * np.sin(w * y0) * c)
    return float(math.exp(-r * T) * 2 / a * math.exp(-al * y0) * tot)


def tiny_chain_exit_oracle(Q: np.ndarray, cont: np.ndarray, phi: np.ndarray, T: float, r: float = 0.0,
                           squarings: int = 20) -> np.ndarray:
    """Approximate exp(T Q_r) phi for the chain stopped outside ``cont``.

    One step of length dt = T / 2^squarings moves with I + dt Q inside the
    continuation set (discounted by e^{-r dt}) and stays put outside it;
    the step matrix is then squared ``squarings`` times.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    Ibar = np.diag(np.asarray(cont, dtype=float))
    dt = T / 2 ** squarings
    M = np.eye(n) - Ibar + Ibar @ (math.exp(-r * dt) * (np.eye(n) + dt * Q))
    for _ in range(squarings):
        M = M @ M
    return M @ np.asarray(phi, dtype=float)


@dataclass(frozen=True)
class MCResult:
    price: float
    stderr: float
    n_paths: int


def _bridge_survival(x0, x1, lo, hi, var):
    """Probability a Brownian bridge in log space stays inside (lo, hi); single-barrier terms."""
    p = np.ones_like(x0)
    if np.isfinite(hi):
        p *= 1 - np.exp(np.clip(-2 * (hi - x0) * (hi - x1) / var, -700, 0))
    if np.isfinite(lo):
        p *= 1 - np.exp(np.clip(-2 * (x0 - lo) * (x1 - lo) / var, -700, 0))
    return np.clip(p, 0, 1)


def mc_price(model: ModelSpec, S0: float, payoff, T: float, r: float, lower: float = 0.0,
             upper: float = math.inf, kind: str = "knockout", n_paths: int = 100_000,
             n_steps: int = 250, seed: int = 0) -> MCResult:
    """Monte Carlo barrier price under the model's diffusion plus (Kou) jumps.

    GBM steps are exact; local volatility and jumps use a log-Euler step.
    Barrier crossings between steps are accounted for with the Brownian
    bridge survival probability. ``kind`` is ``knockout`` or ``knockin``.
    """
    if isinstance(model.jump, CGMYJumps):
        raise NotImplementedError("Monte Carlo is only available for diffusions and Kou-type jumps")
    rng = np.random.default_rng(seed)
    dt = T / n_steps
    lo = math.log(lower) if lower > 0 else -np.inf
    hi = math.log(upper) if math.isfinite(upper) else np.inf
    x = np.full(n_paths, math.log(S0))
    alive = np.ones(n_paths)
    jump: Optional[KouJumps] = model.jump
    for _ in range(n_steps):
        S = np.exp(x)
        sig = model.vol(S)
        drift = model.gamma - 0.5 * sig ** 2
        if jump is not None:
            lam = jump.lam * jump.scale(S)
            drift = drift - lam * jump.zeta
        xn = x + drift * dt + sig * math.sqrt(dt) * rng.standard_normal(n_paths)
        alive *= _bridge_survival(x, xn, lo, hi, np.maximum(sig ** 2 * dt, 1e-300))
        if jump is not None:
            hit = rng.random(n_paths) < lam * dt
            k = int(hit.sum())
            if k:
                up = rng.random(k) < jump.p
                sizes = np.where(up, rng.exponential(1 / jump.eta1, k), -rng.exponential(1 / jump.eta2, k))
                xn[hit] += sizes
        alive *= (xn > lo) & (xn < hi)
        x = xn
    pay = np.asarray(payoff(np.exp(x)) if callable(payoff) else np.full(n_paths, payoff), dtype=float)
    w = alive if kind == "knockout" else 1 - alive
    vals = math.exp(-r * T) * pay * w
    return MCResult(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths)), n_paths)
