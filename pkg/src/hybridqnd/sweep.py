"""Transmission sweeps of the correlation coefficient, readout-gain
optimisation and level-set extraction.

All evaluations are vectorised over the (eta1, eta2) grid: the closed-form
coefficients broadcast over array-valued parameters, so a full grid is a
handful of numpy calls rather than a loop over points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from skimage import measure

from .interferometer import InterferometerParams
from .metrics import qnd_correlation

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
SCAN_POINTS = 64
GOLDEN_TOL = 1e-6


@dataclass(frozen=True)
class SweepGrid:
    """C over a rectangular transmission grid, ``values[i, j]`` at
    ``(eta1_axis[i], eta2_axis[j])``.  Optimised grids also carry the best
    readout gain and the corresponding C."""

    eta1_axis: np.ndarray
    eta2_axis: np.ndarray
    values: np.ndarray
    g1: float
    g2_opt: np.ndarray | None = None
    c_opt: np.ndarray | None = None

    @property
    def ratio(self) -> np.ndarray | None:
        return None if self.g2_opt is None else self.g2_opt / self.g1

    def field(self, name: str) -> np.ndarray:
        fields = {"C": self.values, "C_opt": self.c_opt, "g2_opt": self.g2_opt, "ratio": self.ratio}
        if name not in fields:
            raise KeyError(f"unknown grid field {name!r}; choose from {sorted(fields)}")
        if fields[name] is None:
            raise ValueError(f"grid has no {name!r} values; run the optimised sweep")
        return fields[name]

    def interpolator(self, name: str = "C") -> RegularGridInterpolator:
        """Bilinear interpolant of a grid field."""
        return RegularGridInterpolator((self.eta1_axis, self.eta2_axis), self.field(name))


@dataclass(frozen=True)
class ContourSet:
    level: float
    polylines: list[np.ndarray]


@dataclass(frozen=True)
class OptimizeResult:
    """Best readout gain and its C; unpacks as ``(g2_star, C_star)``."""

    g2_star: float
    C_star: float
    at_boundary: bool

    def __iter__(self):
        return iter((self.g2_star, self.C_star))


def _check_axis(name: str, axis) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array")
    if np.any(np.diff(axis) <= 0):
        raise ValueError(f"{name} must be strictly ascending")
    if axis[0] < 0 or axis[-1] > 1:
        raise ValueError(f"{name} must lie in [0, 1]")
    return axis


def _mesh(params_base: InterferometerParams, eta1_axis, eta2_axis) -> InterferometerParams:
    e1, e2 = np.meshgrid(eta1_axis, eta2_axis, indexing="ij")
    return replace(params_base, eta1=e1, eta2=e2)


def _correlation(params, N_beta, method, lossy):
    return np.asarray(qnd_correlation(params, N_beta, method, lossy)[1], dtype=float)


def sweep_c(
    params_base: InterferometerParams, N_beta, eta1_axis, eta2_axis, method: str = "exact"
) -> SweepGrid:
    """Lossy C on the (eta1, eta2) grid; the other parameters come from
    ``params_base``."""
    a1, a2 = _check_axis("eta1_axis", eta1_axis), _check_axis("eta2_axis", eta2_axis)
    values = _correlation(_mesh(params_base, a1, a2), N_beta, method, True)
    return SweepGrid(a1, a2, values, float(params_base.g1))


def default_g2_bounds(g1: float) -> tuple[float, float]:
    return g1 / 10.0, 10.0 * g1


def _scan_points(lo: float, hi: float) -> np.ndarray:
    if lo > 0:
        return np.geomspace(lo, hi, SCAN_POINTS)
    return np.linspace(lo, hi, SCAN_POINTS)


def golden_section_max(f, lo, hi, tol: float = GOLDEN_TOL):
    """Maximise ``f`` on [lo, hi] by golden-section search.

    ``lo`` and ``hi`` may be arrays; ``f`` is then evaluated elementwise on
    arrays of the same shape and every interval is shrunk below ``tol``.
    Returns the abscissa of the best interior probe and its value.
    """
    a, b = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    width = float(np.max(b - a))
    steps = 0 if width <= tol else int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        left = fc >= fd  # the maximum lies in [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new = np.where(left, b - INV_PHI * (b - a), a + INV_PHI * (b - a))
        fnew = f(new)
        c, d, fc, fd = (
            np.where(left, new, d),
            np.where(left, c, new),
            np.where(left, fnew, fd),
            np.where(left, fc, fnew),
        )
    take_c = fc >= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def _maximize_g2(params: InterferometerParams, N_beta, lo, hi, method, lossy):
    """Vectorised core of the g2 optimisation; ``params`` may carry array fields."""

    def objective(g2):
        return _correlation(replace(params, g2=g2), N_beta, method, lossy)

    scan = _scan_points(lo, hi)
    scores = np.stack([objective(np.full(np.shape(params.eta1), x)) for x in scan])
    k = np.argmax(scores, axis=0)
    best_x, best_c = scan[k], np.take_along_axis(scores, k[None], 0)[0]

    left = scan[np.maximum(k - 1, 0)]
    right = scan[np.minimum(k + 1, SCAN_POINTS - 1)]
    x, cx = golden_section_max(objective, left, right)
    better = cx > best_c
    best_x, best_c = np.where(better, x, best_x), np.where(better, cx, best_c)

    # the symmetric configuration is always a candidate
    g1 = float(np.asarray(params.g1))
    if lo <= g1 <= hi:
        c_sym = objective(np.full(np.shape(best_x), g1))
        better = c_sym > best_c
        best_x, best_c = np.where(better, g1, best_x), np.where(better, c_sym, best_c)

    edge = 2.0 * GOLDEN_TOL * max(1.0, hi)
    at_boundary = (np.abs(best_x - lo) <= edge) | (np.abs(best_x - hi) <= edge)
    return best_x, best_c, at_boundary


def _check_bounds(bounds, g1) -> tuple[float, float]:
    lo, hi = default_g2_bounds(g1) if bounds is None else map(float, bounds)
    if not (0 <= lo <= hi) or not math.isfinite(hi):
        raise ValueError(f"g2 bounds must satisfy 0 <= lo <= hi, got ({lo}, {hi})")
    return lo, hi


def optimize_g2(
    params_base: InterferometerParams,
    N_beta,
    g2_bounds: tuple[float, float] | None = None,
    method: str = "exact",
    lossy: bool = True,
) -> OptimizeResult:
    """Readout gain g2 maximising C at fixed g1 (default bounds g1/10 .. 10 g1).

    A 64-point scan brackets the maximum, golden-section search refines it.
    ``at_boundary`` flags optima that sit on a search bound.
    """
    lo, hi = _check_bounds(g2_bounds, params_base.g1)
    if lo == hi:
        c = float(_correlation(replace(params_base, g2=lo), N_beta, method, lossy))
        return OptimizeResult(lo, c, True)
    x, c, edge = _maximize_g2(params_base, N_beta, lo, hi, method, lossy)
    return OptimizeResult(float(x), float(c), bool(edge))


def optimized_ratio_grid(
    params_base: InterferometerParams,
    N_beta,
    eta1_axis,
    eta2_axis,
    g2_bounds: tuple[float, float] | None = None,
    method: str = "exact",
) -> SweepGrid:
    """Baseline C plus the optimised g2 and C at every grid point."""
    base = sweep_c(params_base, N_beta, eta1_axis, eta2_axis, method)
    lo, hi = _check_bounds(g2_bounds, params_base.g1)
    mesh = _mesh(params_base, base.eta1_axis, base.eta2_axis)
    if lo == hi:
        g2 = np.full(base.values.shape, lo)
        c = _correlation(replace(mesh, g2=g2), N_beta, method, True)
    else:
        g2, c, _ = _maximize_g2(mesh, N_beta, lo, hi, method, True)
    return replace(base, g2_opt=g2, c_opt=c)


def extract_contour(grid: SweepGrid, level: float, field: str = "C") -> ContourSet:
    """Level set of a grid field by marching squares with linear edge
    interpolation; polylines are returned as (k, 2) arrays of (eta1, eta2)."""
    values = grid.field(field)
    if values.size == 0:
        raise ValueError("empty grid")
    if values.shape[0] < 2 or values.shape[1] < 2:
        return ContourSet(float(level), [])
    lines = []
    for line in measure.find_contours(values, level):
        e1 = np.interp(line[:, 0], np.arange(len(grid.eta1_axis)), grid.eta1_axis)
        e2 = np.interp(line[:, 1], np.arange(len(grid.eta2_axis)), grid.eta2_axis)
        lines.append(np.column_stack([e1, e2]))
    return ContourSet(float(level), lines)
