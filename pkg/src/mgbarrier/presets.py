"""Built-in setups and stored reference values for the reproduction runs."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import Setup
from .model import CGMYParams, KouLocalLevyParams, cgmy, gbm, kou_local_levy
from .pricer import BarrierContract, Payoff

BASE_DENSITIES = (100.0, 1.0, 10.0, 10.0, 1.0, 100.0)


@dataclass(frozen=True)
class Reference:
    label: str
    value: float
    tol: float
    relative: bool = False

    def ok(self, computed: float) -> bool:
        err = abs(computed - self.value)
        return err <= (self.tol * abs(self.value) if self.relative else self.tol)


# -- double knock-out calls under geometric Brownian motion -----------------

# (sigma, r, strike, lower, upper, stored chain value, series value)
TABLE1_COLUMNS = (
    (0.2, 0.02, 2.0, 1.5, 2.5, 0.041082, 0.041089),
    (0.5, 0.05, 2.0, 1.5, 3.0, 0.017856, 0.017856),
    (0.5, 0.05, 1.75, 1.0, 3.0, 0.076165, 0.076172),
)


def table1_setup(col: int, N: int = 200) -> Setup:
    sig, r, K, lo, up, _, _ = TABLE1_COLUMNS[col]
    c = BarrierContract("knockout", 1.0, r, lo, up, payoff=Payoff("call", K))
    return Setup(f"t1-col{col + 1}", gbm(sig, r), c, 2.0, 0.2, 10.0, BASE_DENSITIES, N)


FIG3_REFERENCE = 1.4583798
FIG3_SIZES = (100, 200, 400, 800, 1600)


def fig3_setup(N: int = 3000) -> Setup:
    c = BarrierContract("knockout", 1.0, 0.1, 90.0, 140.0, payoff=Payoff("call", 100.0))
    return Setup("fig3", gbm(0.25, 0.1), c, 95.0, 9.5, 475.0, BASE_DENSITIES, N)


# -- CGMY double knock-out put and double no-touch --------------------------

CGMY_PARAMS = CGMYParams(C=1.0, G=9.0, M=8.0, Y=0.5, r=0.03, d=0.0)
CGMY_DENSITIES = (100.0, 10.0, 100.0, 100.0, 10.0, 100.0)
CGMY_X1, CGMY_XN = 300.0, 40000.0

# spot in % of 3500: (knock-out put, double no-touch), chain values at N=800
TABLE2_ROWS = (
    (82, 301.07, 0.5757), (85, 370.38, 0.8004), (88, 341.78, 0.8880), (91, 280.41, 0.9280),
    (94, 208.30, 0.9465), (97, 137.24, 0.9529), (100, 78.74, 0.9507), (101, 64.53, 0.9483),
    (104, 37.18, 0.9352), (107, 22.84, 0.9113), (110, 14.65, 0.8709), (113, 9.64, 0.8019),
    (116, 6.32, 0.6767), (119, 3.54, 0.4049),
)
TABLE2_PUT_RTOL = 1.5e-3
TABLE2_DNT_ATOL = 2e-3

FIG5_REFERENCE = (78.752, 0.9508)
FIG5_REFERENCE_N = 6400
FIG5_SIZES = (100, 200, 400, 800, 1600, 3200)


def table2_setup(spot_pct: float, kind: str = "put", N: int = 800) -> Setup:
    S0 = 3500.0 * spot_pct / 100.0
    if kind == "put":
        c = BarrierContract("knockout", 0.1, 0.03, 2800.0, 4200.0, payoff=Payoff("put", 3500.0))
    elif kind == "dnt":
        c = BarrierContract("notouch", 0.1, 0.03, 2800.0, 4200.0)
    else:
        raise ValueError("kind must be 'put' or 'dnt'")
    return Setup(f"t2-{spot_pct:g}-{kind}", cgmy(CGMY_PARAMS), c, S0, CGMY_X1, CGMY_XN,
                 CGMY_DENSITIES, N)


# -- up-and-in call under the Kou local Levy model --------------------------

KOU_X1, KOU_XN = 30.0, 300.0
# two-region grid: (spot pair, upper-barrier pair); the last pair is unused
KOU_DENSITIES = (10.0, 10.0, 1.0, 100.0, 1.0, 1.0)

# (beta, lambda, N=400, N=800, N=1200, closed-form reference for beta = 0)
TABLE3_ROWS = (
    (0.0, 3.0, 10.0528, 10.0530, 10.0530, 10.05307),
    (0.0, 0.01, 9.2768, 9.2771, 9.2772, 9.27724),
    (-1.0, 3.0, 9.7685, 9.7688, 9.7688, None),
    (-1.0, 0.01, 8.9572, 8.9575, 8.9575, None),
    (-3.0, 3.0, 9.0185, 9.0187, 9.0188, None),
    (-3.0, 0.01, 8.0855, 8.0858, 8.0858, None),
)
TABLE3_SIZES = (400, 800, 1200)
TABLE3_TOL = 5e-4

FIG6_REFERENCE = 9.768837
FIG6_REFERENCE_N = 5000
FIG6_SIZES = (100, 200, 400, 800, 1600)


def kou_params(beta: float, lam: float) -> KouLocalLevyParams:
    return KouLocalLevyParams(S0=100.0, sigma0=0.2, lam=lam, p=0.3, eta1=50.0, eta2=25.0,
                              beta=beta, r=0.05, d=0.0)


def table3_setup(beta: float, lam: float, N: int = 800, xN: float = KOU_XN) -> Setup:
    c = BarrierContract("knockin", 1.0, 0.05, 0.0, 120.0, payoff=Payoff("call", 100.0))
    return Setup(f"t3-b{beta:g}-l{lam:g}", kou_local_levy(kou_params(beta, lam)), c, 100.0,
                 KOU_X1, xN, KOU_DENSITIES, N)


def fig6_setup(N: int = FIG6_REFERENCE_N, xN: float = KOU_XN) -> Setup:
    return table3_setup(-1.0, 3.0, N, xN)
