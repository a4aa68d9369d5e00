import math

import numpy as np
import pytest
import scipy.linalg
from scipy.stats import norm

from mgbarrier.model import CGMYParams, KouLocalLevyParams, cgmy, gbm, kou_local_levy
from mgbarrier.oracle import _bridge_survival, gbm_double_barrier, gbm_double_barrier_spectral, mc_price, tiny_chain_exit_oracle
from mgbarrier.genbuild import build_mm
from mgbarrier.grid import GridParams, build_grid
from mgbarrier.presets import BASE_DENSITIES
from mgbarrier.pricer import Payoff, no_touch


def bs(S, K, T, r, sig, kind):
    d1 = (math.log(S / K) + (r + sig ** 2 / 2) * T) / (sig * math.sqrt(T))
    d2 = d1 - sig * math.sqrt(T)
    if kind == "call":
        return S * norm.cdf(d1) - K * math.exp(-r * T) * norm.cdf(d2)
    return K * math.exp(-r * T) * norm.cdf(-d2) - S * norm.cdf(-d1)


@pytest.mark.parametrize("kind", ["call", "put"])
def test_series_tends_to_black_scholes_for_remote_barriers(kind):
    v = gbm_double_barrier(100, 100, 1e-3, 1e5, 0.5, 0.05, 0.2, kind=kind)
    assert v == pytest.approx(bs(100, 100, 0.5, 0.05, 0.2, kind), rel=1e-10)


def test_series_converges_in_terms_and_vanishes_outside():
    a = gbm_double_barrier(2.0, 2.0, 1.5, 2.5, 1.0, 0.02, 0.2, n_terms=5)
    b = gbm_double_barrier(2.0, 2.0, 1.5, 2.5, 1.0, 0.02, 0.2, n_terms=30)
    assert a == pytest.approx(b, abs=1e-15)
    assert gbm_double_barrier(1.4, 2.0, 1.5, 2.5, 1.0, 0.02, 0.2) == 0.0
    with pytest.raises(ValueError):
        gbm_double_barrier(2.0, 2.0, 1.5, 2.5, 1.0, 0.02, 0.2, kind="digital")


def test_series_calls_and_puts_struck_at_barriers_give_no_touch():
    # on survival (S_T - L) + (U - S_T) = U - L, so c + p = (U - L) x no-touch price
    c = gbm_double_barrier(2.0, 1.5, 1.5, 2.5, 1.0, 0.05, 0.3)
    p = gbm_double_barrier(2.0, 2.5, 1.5, 2.5, 1.0, 0.05, 0.3, kind="put")
    grid = build_grid(GridParams.with_total(800, BASE_DENSITIES, 0.2, 10.0, 2.0, 1.5, 2.5))
    nt = no_touch(build_mm(gbm(0.3, 0.05), grid), 1.0, 0.05, 1.5, 2.5)[grid.index_of(2.0)]
    assert c + p == pytest.approx(1.0 * nt, abs=1e-4)


@pytest.mark.parametrize("args", [(2.0, 2.0, 1.5, 2.5, 1.0, 0.02, 0.2), (2.0, 2.0, 1.5, 3.0, 1.0, 0.05, 0.5),
                                  (2.0, 1.75, 1.0, 3.0, 1.0, 0.05, 0.5), (95, 100, 90, 140, 1.0, 0.1, 0.25)])
@pytest.mark.parametrize("kind", ["call", "put"])
def test_image_series_and_spectral_expansion_agree(args, kind):
    a = gbm_double_barrier(*args, kind=kind)
    b = gbm_double_barrier_spectral(*args, kind=kind)
    assert a == pytest.approx(b, rel=1e-11, abs=1e-14)


def small_stopped(rng, n=4, r=0.05):
    Q = rng.exponential(2.0, (n, n))
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    cont = np.zeros(n, bool)
    cont[1:-1] = True
    S = Q.copy()
    S[~cont] = 0.0
    S[cont, cont] -= r
    return Q, cont, S


def test_tiny_chain_oracle_matches_exponential():
    rng = np.random.default_rng(0)
    Q, cont, S = small_stopped(rng)
    phi = rng.random(4)
    ref = scipy.linalg.expm(0.8 * S) @ phi
    np.testing.assert_allclose(tiny_chain_exit_oracle(Q, cont, phi, 0.8, 0.05), ref, atol=1e-5)


def test_bridge_survival_single_barrier():
    # P(max of bridge from 0 to 0 over var 1 stays below b) = 1 - exp(-2 b^2)
    p = _bridge_survival(np.zeros(1), np.zeros(1), -np.inf, 0.5, 1.0)
    assert p[0] == pytest.approx(1 - math.exp(-0.5))


def test_mc_matches_series_for_gbm():
    m = gbm(0.25, 0.1)
    res = mc_price(m, 95.0, Payoff("call", 100.0), 1.0, 0.1, 90.0, 140.0, n_paths=40000,
                   n_steps=50, seed=1)
    ref = gbm_double_barrier(95.0, 100.0, 90.0, 140.0, 1.0, 0.1, 0.25)
    assert abs(res.price - ref) < 4 * res.stderr + 1e-3


def test_mc_is_seeded_and_knockin_complements():
    m = kou_local_levy(KouLocalLevyParams(100, 0.2, 3.0, 0.3, 50, 25, r=0.05))
    args = (m, 100.0, Payoff("call", 100.0), 1.0, 0.05, 0.0, 120.0)
    a = mc_price(*args, n_paths=4000, n_steps=20, seed=3)
    b = mc_price(*args, n_paths=4000, n_steps=20, seed=3)
    assert a == b
    ki = mc_price(*args, kind="knockin", n_paths=4000, n_steps=20, seed=3)
    eu = mc_price(m, 100.0, Payoff("call", 100.0), 1.0, 0.05, n_paths=4000, n_steps=20, seed=3)
    assert a.price + ki.price == pytest.approx(eu.price, rel=1e-12)


def test_mc_rejects_cgmy():
    with pytest.raises(NotImplementedError):
        mc_price(cgmy(CGMYParams(1, 9, 8, 0.5)), 100.0, 1.0, 1.0, 0.0, 90.0, 110.0, n_paths=10)
