"""Two-dimensional interpolant of the primary envelope.

Replacing the phase {n phi} by a free variable y turns the quasi-periodic
F1_bar into the restriction of a function on the torus,
Upsilon(x, y) = min_n chi_n(x, y), sampled along the line y = {phi x}.
Its extrema bound F1_bar from both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .splitting import HarmonicParams, cc


def torus_indices(params: HarmonicParams) -> np.ndarray:
    """Indices n that can be dominant for x in [0, 1): [-N- - 1, 1 + N+ + 1]."""
    wm, wp = params.window_ints
    return np.arange(-wm - 1, wp + 3)


def chi(x, y, n, params: HarmonicParams):
    """chi_n(x, y) = cc(x; n + Lg beta, beta) with beta = beta(y - phi x + {n phi})."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b = params.beta(y - params.phi * x + params.frac_nphi(n))
    return cc(x, n + params.Lg(b), b, params.lam)


def upsilon(x, y, params: HarmonicParams, with_label: bool = False):
    """min over n of chi_n, for any real x (shifted into [0, 1) via chi_n(x+1, y) = chi_{n-1}(x, y))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    shift = np.floor(x)
    xr = x - shift
    ns = torus_indices(params)
    vals = np.stack([chi(xr, y, int(n), params) for n in ns], axis=-1)
    j = np.argmin(vals, axis=-1)
    v = np.take_along_axis(vals, j[..., None], axis=-1)[..., 0]
    if with_label:
        return v, ns[j] + shift.astype(np.int64)
    return v


@dataclass(frozen=True)
class TorusGrid:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # indexed [iy, ix]
    labels: np.ndarray

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def argmax(self) -> tuple[float, float]:
        iy, ix = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.x[ix]), float(self.y[iy])

    def argmin(self) -> tuple[float, float]:
        iy, ix = np.unravel_index(np.argmin(self.values), self.values.shape)
        return float(self.x[ix]), float(self.y[iy])


def torus_grid(params: HarmonicParams, res: int = 1024) -> TorusGrid:
    """Upsilon on a res x res grid of [0, 1)^2."""
    g = np.arange(res) / res
    X, Y = np.meshgrid(g, g)
    v, lab = upsilon(X, Y, params, with_label=True)
    return TorusGrid(g, g, v, lab)


def torus_min_point(params: HarmonicParams) -> tuple[float, float]:
    """Location of min Upsilon = (1 - delta)^{1/3}, reduced to [0, 1)^2."""
    lg = float(params.Lg(1 - params.delta))
    x = lg % 1.0
    y = ((math.pi - 2 * params.psi_hat + params.theta) / (2 * math.pi) + params.phi * lg) % 1.0
    return x, y


def crossing_curve(n: int, m: int, y0, params: HarmonicParams):
    """x*_{n,m}(y0): where chi_n and chi_m meet on the line y = y0 + phi x."""
    lam = params.lam
    bn = params.beta(y0 + params.frac_nphi(n))
    bm = params.beta(y0 + params.frac_nphi(m))
    xn = n + params.Lg(bn)
    xm = m + params.Lg(bm)
    Z = xm - xn
    W = np.cbrt(bm / bn)
    lz = lam ** Z
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = 2 * lz * (W * lam ** (Z / 2) - 1) / (lz - W)
        return xn + 2 * np.log(ratio) / (3 * math.log(lam))


@dataclass(frozen=True)
class SharpBound:
    value: float
    x: float
    y: float
    labels: tuple[int, ...]
    grid_value: float
    zoom_value: float
    curve_value: float


def _active_labels(x: float, y: float, params: HarmonicParams, tol: float) -> tuple[int, ...]:
    xr = x - math.floor(x)
    ns = torus_indices(params)
    vals = np.array([float(chi(xr, y, int(n), params)) for n in ns])
    lo = vals.min()
    return tuple(int(n) + int(math.floor(x)) for n, v in zip(ns, vals) if v - lo <= tol)


def j1_star(params: HarmonicParams, grid: TorusGrid | None = None, res: int = 1024,
            zoom: int = 401) -> SharpBound:
    """Maximum of Upsilon, i.e. the sharp upper bound for F1_bar.

    The coarse grid maximum is refined on a zoomed grid and then along the
    crossing curves of the dominant pairs near it, where the maximum of a
    minimum of smooth functions has to lie.
    """
    grid = grid or torus_grid(params, res)
    x0, y0 = grid.argmax()
    h = 2.0 / len(grid.x)
    zx = np.linspace(x0 - h, x0 + h, zoom)
    zy = np.linspace(y0 - h, y0 + h, zoom)
    ZX, ZY = np.meshgrid(zx, zy)
    zv = upsilon(ZX, ZY, params)
    iy, ix = np.unravel_index(np.argmax(zv), zv.shape)
    xz, yz = float(zx[ix]), float(zy[iy])
    zoom_val = float(zv[iy, ix])

    labels = _active_labels(xz, yz, params, tol=1e-3)
    best = (zoom_val, xz, yz)
    curve_best = -np.inf
    line0 = yz - params.phi * xz
    for i, n in enumerate(labels):
        for m in labels[i + 1:]:
            def neg(c, n=n, m=m):
                x = float(crossing_curve(n, m, c, params))
                if not np.isfinite(x):
                    return np.inf
                return -float(upsilon(x, c + params.phi * x, params))

            res_ = minimize_scalar(neg, bounds=(line0 - 4 * h, line0 + 4 * h), method="bounded",
                                   options={"xatol": 1e-13})
            if np.isfinite(res_.fun) and -res_.fun > curve_best:
                curve_best = -res_.fun
                x = float(crossing_curve(n, m, res_.x, params))
                if curve_best > best[0]:
                    best = (curve_best, x, res_.x + params.phi * x)
    value, x, y = best
    final_labels = _active_labels(x, y, params, tol=1e-6)
    return SharpBound(float(value), float(x) % 1.0, float(y) % 1.0, final_labels, grid.max,
                      zoom_val, float(curve_best))
