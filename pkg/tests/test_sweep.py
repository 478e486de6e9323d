from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial.distance import directed_hausdorff

from hybridqnd import sweep
from hybridqnd.interferometer import REFERENCE_LOSSY, REFERENCE_N_BETA
from hybridqnd.metrics import qnd_correlation

AXIS = np.linspace(0, 1, 101)
LOSSLESS = replace(REFERENCE_LOSSY, d1=1.0, d2=1.0)


@pytest.fixture(scope="module")
def reference_grid():
    return sweep.sweep_c(REFERENCE_LOSSY, REFERENCE_N_BETA, AXIS, AXIS)


def c_at(params, g2=None):
    if g2 is not None:
        params = replace(params, g2=g2)
    return float(qnd_correlation(params, REFERENCE_N_BETA, "exact", lossy=True)[1])


# --- golden section -------------------------------------------------------------


def test_golden_section_scalar():
    x, fx = sweep.golden_section_max(lambda x: -(x - 1.234) ** 2, 0.0, 3.0)
    assert x == pytest.approx(1.234, abs=1e-6) and fx == pytest.approx(0.0, abs=1e-11)


def test_golden_section_vectorised():
    centres = np.array([0.2, 0.5, 0.9])
    x, _ = sweep.golden_section_max(lambda x: -np.abs(x - centres), np.zeros(3), np.ones(3), tol=1e-8)
    assert np.allclose(x, centres, atol=1e-8)


# --- sweeps ---------------------------------------------------------------------


def test_sweep_shape_and_corner(reference_grid):
    assert reference_grid.values.shape == (101, 101)
    assert reference_grid.values[-1, -1] == pytest.approx(0.6166, abs=1e-3)
    assert np.all((reference_grid.values >= 0) & (reference_grid.values <= 1))


def test_sweep_matches_pointwise(reference_grid):
    for i, j in [(0, 0), (100, 0), (37, 81), (100, 100)]:
        p = replace(REFERENCE_LOSSY, eta1=AXIS[i], eta2=AXIS[j])
        assert reference_grid.values[i, j] == pytest.approx(c_at(p), rel=1e-13)


def test_sweep_is_deterministic(reference_grid):
    again = sweep.sweep_c(REFERENCE_LOSSY, REFERENCE_N_BETA, AXIS, AXIS)
    assert np.array_equal(again.values, reference_grid.values)


@pytest.mark.parametrize("axis", [[], [0.5, 0.2], [-0.1, 0.5], [0.5, 1.5]])
def test_bad_axes(axis):
    with pytest.raises(ValueError):
        sweep.sweep_c(REFERENCE_LOSSY, REFERENCE_N_BETA, axis, AXIS)


def test_linearized_sweep_agrees(reference_grid):
    lin = sweep.sweep_c(REFERENCE_LOSSY, REFERENCE_N_BETA, AXIS, AXIS, method="linearized")
    assert np.allclose(lin.values, reference_grid.values, rtol=1e-3)


# --- optimisation ---------------------------------------------------------------


def test_lossless_optimum_on_upper_bound():
    res = sweep.optimize_g2(LOSSLESS, REFERENCE_N_BETA, (0.3, 30.0), lossy=False)
    assert res.g2_star == pytest.approx(30.0, abs=1e-5)
    assert res.at_boundary
    assert res.C_star > c_at(LOSSLESS)


def test_degenerate_bounds():
    g2, c = sweep.optimize_g2(REFERENCE_LOSSY, REFERENCE_N_BETA, (3.0, 3.0))
    assert g2 == 3.0 and c == pytest.approx(c_at(REFERENCE_LOSSY), rel=1e-15)


@pytest.mark.parametrize("bounds", [(-1.0, 2.0), (4.0, 3.0), (0.0, float("inf"))])
def test_invalid_bounds(bounds):
    with pytest.raises(ValueError):
        sweep.optimize_g2(REFERENCE_LOSSY, REFERENCE_N_BETA, bounds)


def test_external_loss_improves_with_readout_gain():
    p = replace(REFERENCE_LOSSY, eta2=0.7)
    res = sweep.optimize_g2(p, REFERENCE_N_BETA)
    assert res.C_star > c_at(p)


@pytest.mark.xfail(strict=True, reason="C keeps rising with g2 at eta2 = 0.7; the maximum sits on the upper bound")
def test_external_loss_of_thirty_percent_has_interior_optimum():
    res = sweep.optimize_g2(replace(REFERENCE_LOSSY, eta2=0.7), REFERENCE_N_BETA)
    assert not res.at_boundary


def test_interior_optimum_under_heavy_external_loss():
    p = replace(REFERENCE_LOSSY, eta2=0.5)
    res = sweep.optimize_g2(p, REFERENCE_N_BETA)
    assert not res.at_boundary
    assert res.C_star > c_at(p)
    # the optimum really is a local maximum
    for dx in (-1e-3, 1e-3):
        assert c_at(p, res.g2_star + dx) <= res.C_star + 1e-12


def test_default_bounds():
    assert sweep.default_g2_bounds(3.0) == (0.3, 30.0)


def test_optimized_grid_dominates():
    axis = np.linspace(0, 1, 21)
    grid = sweep.optimized_ratio_grid(REFERENCE_LOSSY, REFERENCE_N_BETA, axis, axis)
    assert np.all(grid.c_opt >= grid.values - 1e-12)
    assert np.array_equal(grid.ratio, grid.g2_opt / 3.0)
    lo, hi = sweep.default_g2_bounds(3.0)
    assert np.all((grid.g2_opt >= lo) & (grid.g2_opt <= hi))


# --- contours -------------------------------------------------------------------


def test_constant_grid_has_no_contour():
    g = sweep.SweepGrid(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.full((2, 2), 0.5), 3.0)
    assert sweep.extract_contour(g, 0.6).polylines == []


def test_two_by_two_midline():
    g = sweep.SweepGrid(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([[0.0, 0.0], [1.0, 1.0]]), 3.0)
    (line,) = sweep.extract_contour(g, 0.5).polylines
    assert np.allclose(line[:, 0], 0.5)
    assert sorted(line[:, 1]) == pytest.approx([0.0, 1.0])


def test_missing_field_is_reported(reference_grid):
    with pytest.raises(ValueError):
        sweep.extract_contour(reference_grid, 0.6, "C_opt")
    with pytest.raises(KeyError):
        reference_grid.field("nope")


def test_contour_points_lie_on_level(reference_grid):
    contours = sweep.extract_contour(reference_grid, 0.6)
    assert len(contours.polylines) == 1
    interp = reference_grid.interpolator()
    for line in contours.polylines:
        assert np.all((line >= 0) & (line <= 1))
        assert np.max(np.abs(interp(line) - 0.6)) <= 1e-9


def test_contour_stable_under_refinement(reference_grid):
    coarse_axis = np.linspace(0, 1, 51)
    coarse = sweep.sweep_c(REFERENCE_LOSSY, REFERENCE_N_BETA, coarse_axis, coarse_axis)
    (a,) = sweep.extract_contour(coarse, 0.6).polylines
    (b,) = sweep.extract_contour(reference_grid, 0.6).polylines
    distance = max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])
    assert distance < coarse_axis[1] - coarse_axis[0]
