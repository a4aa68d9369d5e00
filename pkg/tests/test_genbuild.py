import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgbarrier.genbuild import (GeneratorMatrix, _row_moments, build_fd, build_mm, c_alpha,
                                martingale_residual, midpoint_cells, restrict_killed,
                                restrict_stopped, tail_mass, validate, window_constants)
from mgbarrier.grid import GridParams, build_grid
from mgbarrier.matexp import expm
from mgbarrier.model import CGMYParams, KouJumps, cgmy, gbm
from mgbarrier.presets import table1_setup, table3_setup

from strategies import grids, models


def drift_ok(G):
    """Per-node drift match, relative to the size of the terms being summed."""
    pts = G.grid.points
    rows = np.arange(1, len(pts) - 1)
    rows = rows[G.clamped[rows] < 2]
    m1, _ = _row_moments(G.entries, pts, rows)
    scale = np.abs(G.entries[rows]) @ np.abs(pts) + np.abs(G.entries[rows, rows]) * pts[rows]
    return np.abs(m1 - G.model.gamma * pts[rows]) <= 1e-9 * np.maximum(scale, 1e-300)


@settings(max_examples=100)
@given(model=models(), grid=grids())
def test_mm_generator_invariants_random(model, grid):
    G = build_mm(model, grid)
    d = validate(G, with_tail=False)
    assert d.ok, d.violations
    A = G.entries
    assert np.all(A[0] == 0) and np.all(A[-1] == 0)
    off = A - np.diag(np.diag(A))
    assert off.min() >= -1e-13 * np.abs(A).max()
    assert drift_ok(G).all()


@settings(max_examples=30)
@given(model=models(), grid=grids(80))
def test_restrictions_keep_their_invariants(model, grid):
    G = build_mm(model, grid)
    lo, up = grid.lower, grid.upper
    K = restrict_killed(G, lo, up)
    assert validate(K, with_tail=False).ok
    assert np.all(K.entries.sum(axis=1) <= 1e-10 * np.abs(K.entries).max(axis=1))
    S = restrict_stopped(G, lo, up, 0.05)
    assert validate(S, with_tail=False).ok


def test_variance_matched_for_gbm():
    s = table1_setup(0)
    G = build_mm(s.model, s.grid())
    pts = G.grid.points
    rows = np.arange(1, len(pts) - 1)
    assert not G.clamped.any()
    m1, m2 = _row_moments(G.entries, pts, rows)
    np.testing.assert_allclose(m1, 0.02 * pts[rows], rtol=1e-9, atol=1e-14)
    np.testing.assert_allclose(m2, (0.2 * pts[rows]) ** 2, rtol=1e-9)


def test_jump_cells_drop_own_node_and_cover_line():
    pts = np.array([1.0, 2.0, 3.0, 5.0])
    lo, hi = midpoint_cells(pts, 3.0)
    assert lo[0] == -1.0 and hi[-1] == np.inf
    np.testing.assert_allclose(lo[1:], hi[:-1])
    assert lo[2] < 0 < hi[2]


def test_jump_intensities_are_cell_masses():
    grid = build_grid(GridParams.with_total(60, (10, 1, 10, 10, 1, 10), 30, 300, 100, 80, 120))
    m = cgmy(CGMYParams(1.0, 9.0, 8.0, 0.5, r=0.03))
    G = build_mm(m, grid)
    pts = grid.points
    i = 20
    lo, hi = midpoint_cells(pts, pts[i])
    far = [0, 5, 45, 59]
    # the diffusion part only touches the two neighbours
    np.testing.assert_allclose(G.entries[i, far], m.jump.cell_mass(pts[i], lo[far], hi[far], 0),
                               rtol=1e-12)


def test_mm_clamps_and_flags_nodes_when_jumps_dominate():
    # strongly negative elasticity: small-price nodes carry more jump variance than the
    # process has, so the variance equation is dropped there
    G = table3_setup(-3.0, 3.0, 100).generator()
    assert validate(G, with_tail=False).ok
    assert G.clamped.any()
    assert drift_ok(G).all()


def test_tail_mass_grows_when_grid_is_truncated():
    m = cgmy(CGMYParams(1.0, 9.0, 8.0, 0.5, r=0.03))
    wide = build_grid(GridParams.with_total(60, (10,) * 6, 300, 40000, 3500, 2800, 4200))
    narrow = build_grid(GridParams.with_total(60, (10,) * 6, 2000, 6000, 3500, 2800, 4200))
    assert tail_mass(m, narrow) > 100 * tail_mass(m, wide)
    assert tail_mass(gbm(0.2, 0.0), wide) == 0.0


@pytest.mark.parametrize("col", [0, 1, 2])
def test_fd_builder_is_a_generator(col):
    s = table1_setup(col)
    G = build_fd(s.model, s.grid())
    assert validate(G).ok


def test_fd_builder_with_jumps_is_a_generator():
    grid = build_grid(GridParams.with_total(120, (10, 10, 1, 100, 1, 1), 30, 300, 100, 0.0, 120.0))
    for m in (cgmy(CGMYParams(1, 9, 8, 0.5, r=0.03)), cgmy(CGMYParams(1, 9, 8, 1.0, r=0.03)),
              cgmy(CGMYParams(1, 9, 8, 1.5, r=0.03))):
        assert validate(build_fd(m, grid), with_tail=False).ok


def test_window_constants():
    assert c_alpha(1.0, 0.01) == pytest.approx(math.log(100))
    assert c_alpha(1.5, 0.01) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        c_alpha(0.5, 0.1)
    info = cgmy(CGMYParams(1, 9, 8, 1.5)).jump.case
    cp, cm = window_constants(info, 0.1, d_pm=(2.0, 3.0))
    assert (cp, cm) == pytest.approx((2.0, 3.0))
    with pytest.raises(ValueError):
        window_constants(KouJumps(1, .5, 10, 10).case, 0.1)


def test_validate_reports_violations():
    s = table1_setup(0)
    G = build_mm(s.model, s.grid())
    bad = GeneratorMatrix(G.entries.copy(), G.grid, model=G.model)
    bad.entries[5, 7] = -1.0
    bad.entries[0, 1] = 1.0
    v = validate(bad).violations
    assert any("negative" in x for x in v)
    assert any("boundary" in x for x in v)
    assert any("row sum" in x for x in v)
    assert not validate(bad).ok


def test_stopped_exponential_is_stochastic():
    s = table1_setup(1)
    G = build_mm(s.model, s.grid(80))
    S = restrict_stopped(G, 1.5, 3.0, 0.0)
    P = expm(1.0 * S.entries)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-10)
    assert P.min() > -1e-12


def test_restriction_rejects_wrong_kind():
    s = table1_setup(0)
    G = build_mm(s.model, s.grid(60))
    K = restrict_killed(G, 1.5, 2.5)
    with pytest.raises(ValueError):
        restrict_killed(K)
    with pytest.raises(ValueError):
        restrict_stopped(G, 1.5, 2.5, -0.1)
    with pytest.raises(ValueError):
        GeneratorMatrix(G.entries, G.grid, kind="odd")
