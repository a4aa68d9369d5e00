"""Random model and grid configurations shared by the property tests."""

import math

from hypothesis import strategies as st

from mgbarrier.grid import GridParams, build_grid
from mgbarrier.model import CGMYParams, KouLocalLevyParams, cgmy, gbm, kou_local_levy, localvol


@st.composite
def models(draw):
    kind = draw(st.sampled_from(["gbm", "localvol", "kou", "cgmy"]))
    r = draw(st.floats(0.0, 0.1))
    sig = draw(st.floats(0.1, 0.6))
    if kind == "gbm":
        return gbm(sig, r)
    if kind == "localvol":
        return localvol(sig, r, beta=draw(st.floats(-2.0, 0.0)), s_ref=100.0)
    if kind == "kou":
        return kou_local_levy(KouLocalLevyParams(
            100.0, sig, draw(st.floats(0.0, 5.0)), draw(st.floats(0.0, 1.0)),
            draw(st.floats(3.0, 60.0)), draw(st.floats(3.0, 60.0)),
            beta=draw(st.floats(-3.0, 0.0)), r=r))
    return cgmy(CGMYParams(draw(st.floats(0.1, 2.0)), draw(st.floats(3.0, 12.0)),
                           draw(st.floats(3.0, 12.0)), draw(st.sampled_from([0.0, 0.3, 0.5, 0.8])),
                           r=r, sigma_extra=draw(st.sampled_from([0.0, 0.1]))))


@st.composite
def grids(draw, n_max=120):
    N = draw(st.integers(30, n_max))
    lo = draw(st.sampled_from([0.0, 70.0, 85.0]))
    up = draw(st.sampled_from([math.inf, 115.0, 130.0]))
    dens = tuple(draw(st.floats(1.0, 100.0)) for _ in range(6))
    return build_grid(GridParams.with_total(N, dens, 20.0, 400.0, 100.0, lo, up))
