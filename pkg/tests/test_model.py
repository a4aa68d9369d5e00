import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from mgbarrier.model import (CGMYJumps, CGMYParams, CaseInfo, KouJumps, KouLocalLevyParams,
                             StableLikeJumps, cgmy, classify_case, error_form, gbm,
                             kou_local_levy, localvol, upper_gamma)


def quad_mass(jump, x, a, b, p=0):
    f = lambda y: abs(y) ** p * float(jump.density(x, y))
    pts = [0.0] if a < 0 < b else None
    return integrate.quad(f, a, b, points=pts, epsabs=1e-14, epsrel=1e-12, limit=500)[0]


def test_kou_cell_example():
    # lambda=1, p=1, eta1=2 at x=1 on [0.25, 0.75]: 1/1.25^2 - 1/1.75^2
    j = KouJumps(1.0, 1.0, 2.0, 1.0)
    assert j.cell_mass(1.0, 0.25, 0.75, 0)[0] == pytest.approx(1 / 1.25 ** 2 - 1 / 1.75 ** 2, rel=1e-13)


@given(a=st.floats(-0.99, 3.0), w=st.floats(1e-4, 2.0), p=st.sampled_from([0, 1, 2]),
       x=st.floats(50.0, 200.0))
def test_kou_closed_form_matches_quadrature(a, w, p, x):
    j = KouJumps(3.0, 0.3, 50.0, 25.0, S0=100.0, beta=-1.0)
    b = a + w
    got = j.cell_mass(x, a, b, p)[0]
    assert got == pytest.approx(quad_mass(j, x, a, b, p), rel=1e-8, abs=1e-10)


def test_kou_second_moment_and_mean():
    j = KouJumps(3.0, 0.3, 50.0, 25.0, S0=100.0, beta=-1.0)
    x = 80.0
    m2 = quad_mass(j, x, -1, 0, 2) + quad_mass(j, x, 0, np.inf, 2)
    assert j.second_moment(x) == pytest.approx(m2, rel=1e-10)
    m1 = quad_mass(j, x, 0, np.inf, 1) - quad_mass(j, x, -1, 0, 1)
    assert j.lam * j.scale(x) * j.zeta == pytest.approx(m1, rel=1e-10)


@given(a=st.floats(-0.9, 1.0), m=st.floats(0.01, 1.0), c=st.floats(0.01, 1.0))
def test_cell_mass_is_additive(a, m, c):
    j = CGMYJumps(1.0, 9.0, 8.0, 0.5)
    b, e = a + m, a + m + c
    whole = j.cell_mass(3500.0, a, e, 0)[0]
    parts = j.cell_mass(3500.0, [a, b], [b, e], 0).sum()
    assert whole == pytest.approx(parts, rel=1e-9)


@pytest.mark.parametrize("Y", [0.0, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("cell", [(0.01, 0.2), (-0.3, -0.02), (0.4, np.inf), (-1.0, -0.6)])
def test_cgmy_cell_mass_matches_quadrature(Y, cell):
    j = CGMYJumps(1.0, 9.0, 8.0, Y)
    assert j.cell_mass(1.0, *cell, 0)[0] == pytest.approx(quad_mass(j, 1.0, *cell), rel=1e-9)


def test_upper_gamma_negative_order():
    for s in (-0.5, -1.5, -1.0, 0.0, 0.7):
        for x in (0.01, 0.5, 3.0):
            f = lambda t: t ** (s - 1) * math.exp(-t)
            ref = (integrate.quad(f, x, x + 1, epsabs=0, epsrel=1e-13)[0]
                   + integrate.quad(f, x + 1, np.inf, epsabs=0, epsrel=1e-13)[0])
            assert upper_gamma(s, x) == pytest.approx(ref, rel=1e-10)


def test_cgmy_mean_jump_matches_levy_exponent():
    # mean relative jump = psi(1) = C Gamma(-Y) [(M-1)^Y - M^Y + (G+1)^Y - G^Y]
    C, G, M, Y = 1.0, 9.0, 8.0, 0.5
    j = CGMYJumps(C, G, M, Y)
    mean = j.cell_mass(1.0, 0, np.inf, 1)[0] - j.cell_mass(1.0, -1, 0, 1)[0]
    psi1 = C * special.gamma(-Y) * ((M - 1) ** Y - M ** Y + (G + 1) ** Y - G ** Y)
    assert mean == pytest.approx(psi1, rel=1e-8)
    # drift of the log price r - psi(1) for r = 3%
    assert 0.03 - psi1 == pytest.approx(-0.0423, abs=5e-5)


@pytest.mark.parametrize("Y", [0.5, 1.0, 1.3])
def test_cgmy_second_moment(Y):
    j = CGMYJumps(1.0, 9.0, 8.0, Y)
    ref = quad_mass(j, 1.0, -1, 0, 2) + quad_mass(j, 1.0, 0, np.inf, 2)
    assert j.second_moment(1.0) == pytest.approx(ref, rel=1e-8)


def test_classification():
    assert CGMYJumps(1, 9, 8, 0.5).case.tag == "O"
    assert CGMYJumps(1, 9, 8, 1.0).case.tag == "I"
    info = CGMYJumps(1, 9, 8, 1.5).case
    assert info.tag == "II" and info.has_stable_params
    assert info.kappa_lower[0] <= info.kappa_upper[0]
    assert KouJumps(1, 0.5, 10, 10).case.tag == "O"
    assert classify_case(None).tag == "O"


def test_classification_from_density_slope():
    stable = StableLikeJumps(lambda x, y: np.where(y != 0, np.abs(y) ** -2.5, 0.0))
    assert classify_case(stable, 1.0, 2.0).tag == "II"
    cauchy = StableLikeJumps(lambda x, y: np.where(y != 0, np.abs(y) ** -2.0, 0.0))
    assert classify_case(cauchy, 1.0, 2.0).tag == "I"
    assert classify_case(cauchy, 1.0, 2.0).error_form(0.1) == pytest.approx(-0.1 * math.log(0.1))


def test_error_forms():
    assert error_form("O")(0.01) == 0.01
    assert error_form("II")(0.01) == 0.01
    assert error_form("unclassified") is None


def test_model_constructors():
    m = gbm(0.2, 0.05, 0.01)
    assert m.gamma == pytest.approx(0.04) and m.jump is None
    np.testing.assert_allclose(m.vol([1.0, 2.0]), 0.2)
    lv = localvol(0.2, 0.05, beta=-1.0, s_ref=100.0)
    assert lv.vol(50.0) == pytest.approx(0.4)
    k = kou_local_levy(KouLocalLevyParams(100, 0.2, 3.0, 0.3, 50, 25, beta=-1.0, r=0.05))
    assert k.vol(200.0) == pytest.approx(0.1)
    assert k.jump.second_moment(100.0) == pytest.approx(
        2 * 3 * (0.3 / (49 * 48) + 0.7 / (26 * 27)), rel=1e-14)
    assert kou_local_levy(KouLocalLevyParams(100, 0.2, 0.0, 0.3, 50, 25)).jump is None
    assert cgmy(CGMYParams(1, 9, 8, 0.5, r=0.03)).jump.case.tag == "O"


@pytest.mark.parametrize("kw", [dict(eta1=2.0), dict(p=1.5), dict(lam=-1.0)])
def test_kou_rejects_bad_params(kw):
    base = dict(S0=100, sigma0=0.2, lam=3.0, p=0.3, eta1=50, eta2=25)
    base.update(kw)
    with pytest.raises(ValueError):
        KouLocalLevyParams(**base)


@pytest.mark.parametrize("kw", [dict(M=2.0), dict(Y=2.0), dict(C=-1.0)])
def test_cgmy_rejects_bad_params(kw):
    base = dict(C=1.0, G=9.0, M=8.0, Y=0.5)
    base.update(kw)
    with pytest.raises(ValueError):
        CGMYParams(**base)
