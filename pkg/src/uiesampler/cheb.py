"""Chebyshev spectral toolkit on a finite interval.

Functions on ``[a, b]`` are represented either by their values on the
endpoint-including Chebyshev grid

    x_j = cos(pi * j / (m - 1)),  j = m-1, ..., 0   (mapped to [a, b])

or by coefficients in the Chebyshev-T basis of the mapped variable. Series
may be vector valued: ``coeffs`` of shape ``(..., L)`` hold one series per
leading index, and every operation here acts along the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .exceptions import InvalidArgumentError, NoConvergenceError

__all__ = [
    "Interval",
    "ChebGrid",
    "ChebSeries",
    "cheb_points",
    "vals_to_coeffs",
    "coeffs_to_vals",
    "clenshaw",
    "clenshaw_eval",
    "barycentric_weights",
    "barycentric_eval",
    "multiply",
    "cumsum",
    "definite_integral",
    "cc_weights",
    "adaptive_fit",
]

#: Trailing-coefficient threshold used by :func:`adaptive_fit`.
TOL_REL = 1e-14


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise InvalidArgumentError(f"interval endpoints must be finite, got [{a}, {b}]",
                                       field="interval")
        if not a < b:
            raise InvalidArgumentError(f"interval needs a < b, got [{a}, {b}]", field="interval")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.b - self.a)

    @property
    def width(self) -> float:
        return self.b - self.a

    def to_unit(self, x):
        """Affine pullback of ``x`` from ``[a, b]`` to ``[-1, 1]``."""
        return (np.asarray(x, dtype=float) - self.center) / self.half_width

    def from_unit(self, t):
        return self.center + self.half_width * np.asarray(t, dtype=float)

    def as_tuple(self):
        return (self.a, self.b)


@dataclass(frozen=True, eq=False)
class ChebGrid:
    interval: Interval
    m: int
    points: np.ndarray = field(repr=False)

    @property
    def unit_points(self) -> np.ndarray:
        return _unit_points(self.m)


@dataclass(frozen=True, eq=False)
class ChebSeries:
    """Chebyshev-T series ``sum_j coeffs[..., j] T_j(t)`` in the mapped variable."""

    interval: Interval
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 0:
            c = c.reshape(1)
        if c.shape[-1] == 0:
            raise InvalidArgumentError("a Chebyshev series needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.shape[-1]

    def __call__(self, x):
        return clenshaw_eval(self, x)

    def __getitem__(self, idx):
        """Select component series of a vector-valued series."""
        return ChebSeries(self.interval, self.coeffs[idx])


def _unit_points(m):
    # sin form keeps the grid exactly symmetric and exactly +-1 at the ends
    j = np.arange(m)
    return np.sin(np.pi * (2 * j - (m - 1)) / (2 * (m - 1)))


def cheb_points(interval: Interval, m: int) -> ChebGrid:
    """The ``m``-point endpoint-including Chebyshev grid on ``interval``, ascending."""
    if int(m) != m or m < 2:
        raise InvalidArgumentError(f"grid size must be an integer >= 2, got {m}", field="m")
    m = int(m)
    pts = interval.from_unit(_unit_points(m))
    pts[0], pts[-1] = interval.a, interval.b
    pts.setflags(write=False)
    return ChebGrid(interval, m, pts)


def _dct_coeffs(values):
    # values ordered by ascending x, i.e. descending angle
    v = np.asarray(values, dtype=float)[..., ::-1]
    n = v.shape[-1] - 1
    c = scipy.fft.dct(v, type=1, axis=-1) / n
    c[..., 0] *= 0.5
    c[..., -1] *= 0.5
    return c


def _direct_coeffs(values):
    v = np.asarray(values, dtype=float)[..., ::-1]
    n = v.shape[-1] - 1
    j = np.arange(n + 1)
    cos = np.cos(np.pi * np.outer(j, j) / n)
    wts = np.ones(n + 1)
    wts[[0, -1]] = 0.5
    c = (v * wts) @ cos.T * (2.0 / n)
    c[..., 0] *= 0.5
    c[..., -1] *= 0.5
    return c


def _dct_values(coeffs):
    c = np.array(coeffs, dtype=float)
    c[..., 1:-1] *= 0.5
    return scipy.fft.dct(c, type=1, axis=-1)[..., ::-1]


def vals_to_coeffs(values, grid: ChebGrid, method: str = "dct") -> ChebSeries:
    """Chebyshev coefficients of the interpolant through ``(grid.points, values)``.

    ``method="direct"`` uses the O(m^2) cosine sum instead of the fast DCT-I.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.m:
        raise InvalidArgumentError(
            f"got {values.shape[-1]} values for a grid of {grid.m} points", field="values")
    if method == "dct":
        c = _dct_coeffs(values)
    elif method == "direct":
        c = _direct_coeffs(values)
    else:
        raise InvalidArgumentError(f"unknown transform method {method!r}", field="method")
    return ChebSeries(grid.interval, c)


def coeffs_to_vals(series: ChebSeries, grid: ChebGrid) -> np.ndarray:
    """Values of ``series`` at the points of ``grid``."""
    L = len(series)
    if L <= grid.m and series.interval == grid.interval:
        c = series.coeffs
        if L < grid.m:
            pad = [(0, 0)] * (c.ndim - 1) + [(0, grid.m - L)]
            c = np.pad(c, pad)
        return _dct_values(c)
    return clenshaw_eval(series, grid.points)


def clenshaw(coeffs, t):
    """Evaluate ``sum_j coeffs[..., j] T_j(t)`` by Clenshaw's recurrence.

    The result has shape ``coeffs.shape[:-1] + np.shape(t)``.
    """
    c = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    tt = t.reshape(-1)
    lead = c.shape[:-1]
    c2 = c.reshape(-1, c.shape[-1])
    b1 = np.zeros((c2.shape[0], tt.size))
    b2 = np.zeros_like(b1)
    two_t = 2.0 * tt
    for k in range(c2.shape[1] - 1, 0, -1):
        b1, b2 = c2[:, k:k + 1] + two_t * b1 - b2, b1
    out = c2[:, :1] + tt * b1 - b2
    return out.reshape(lead + t.shape)


def clenshaw_eval(series: ChebSeries, x):
    """Evaluate a series at ``x`` (scalar or array) in the original variable."""
    out = clenshaw(series.coeffs, series.interval.to_unit(x))
    if out.ndim == 0:
        return float(out)
    return out


def barycentric_weights(m: int) -> np.ndarray:
    w = np.ones(m)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def barycentric_eval(values, grid: ChebGrid, x):
    """Barycentric interpolation of grid ``values`` (shape ``(..., m)``) at ``x``."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.m:
        raise InvalidArgumentError(
            f"got {values.shape[-1]} values for a grid of {grid.m} points", field="values")
    x = np.asarray(x, dtype=float)
    xx = x.reshape(-1)
    diff = xx[:, None] - grid.points[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    r = barycentric_weights(grid.m) / diff
    out = np.tensordot(values, r, axes=([-1], [1])) / r.sum(axis=1)
    rows, cols = np.nonzero(hit)
    if rows.size:
        out[..., rows] = values[..., cols]
    out = out.reshape(values.shape[:-1] + x.shape)
    if out.ndim == 0:
        return float(out)
    return out


def multiply(s1: ChebSeries, s2: ChebSeries) -> ChebSeries:
    """Pointwise product, exact in coefficient space up to rounding."""
    if s1.interval != s2.interval:
        raise InvalidArgumentError("cannot multiply series on different intervals",
                                   field="interval")
    L = len(s1) + len(s2) - 1
    grid = cheb_points(s1.interval, max(L, 2))
    prod = coeffs_to_vals(s1, grid) * coeffs_to_vals(s2, grid)
    return ChebSeries(s1.interval, vals_to_coeffs(prod, grid).coeffs[..., :L])


def cumsum(series: ChebSeries) -> ChebSeries:
    """Indefinite integral ``G`` with ``G(a) = 0``; one coefficient longer than the input."""
    c = series.coeffs
    L = c.shape[-1]
    cp = np.zeros(c.shape[:-1] + (L + 2,))
    cp[..., :L] = c
    b = np.zeros(c.shape[:-1] + (L + 1,))
    b[..., 1] = cp[..., 0] - 0.5 * cp[..., 2]
    if L >= 2:
        k = np.arange(2, L + 1)
        b[..., 2:] = (cp[..., 1:L] - cp[..., 3:L + 2]) / (2.0 * k)
    b *= series.interval.half_width
    signs = np.ones(L + 1)
    signs[1::2] = -1.0
    b[..., 0] = -np.sum(b[..., 1:] * signs[1:], axis=-1)
    return ChebSeries(series.interval, b)


def definite_integral(series: ChebSeries):
    """Integral over the whole interval."""
    c = series.coeffs
    k = np.arange(0, c.shape[-1], 2)
    out = series.interval.half_width * np.sum(c[..., ::2] * (2.0 / (1.0 - k * k)), axis=-1)
    if np.ndim(out) == 0:
        return float(out)
    return out


def cc_weights(grid: ChebGrid) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights for ``grid``.

    ``cc_weights(grid) @ f(grid.points)`` equals ``definite_integral`` of the
    interpolant, so it is exact for polynomials of degree ``< grid.m``.
    """
    n = grid.m - 1
    k = np.arange(n + 1)
    mom = np.zeros(n + 1)
    mom[::2] = 2.0 / (1.0 - k[::2] ** 2)
    h = np.ones(n + 1)
    h[[0, -1]] = 0.5
    d = np.full(n + 1, 2.0)
    d[[0, -1]] = 1.0
    w = d * scipy.fft.dct(h * mom / n / d, type=1)
    return w[::-1] * grid.interval.half_width


def _call_vectorized(f, x):
    try:
        y = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        y = None
    if y is None or y.shape != x.shape:
        y = np.array([float(f(xi)) for xi in x])
    return y


def adaptive_fit(f, interval: Interval, tol: float = TOL_REL, max_size: int = 2**20,
                 trim_tol: float | None = None) -> ChebSeries:
    """Resolve ``f`` on ``interval`` by doubling the grid from 17 points.

    Stops at the first size whose last eight coefficients are all below
    ``tol * max|coeff|`` and trims trailing coefficients below
    ``trim_tol * max|coeff|`` (default ``tol / 10``).
    """
    if trim_tol is None:
        trim_tol = tol / 10
    m = 17
    while m <= max_size + 1:
        grid = cheb_points(interval, m)
        vals = _call_vectorized(f, grid.points)
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError(
                f"function {_fname(f)} is not finite on [{interval.a}, {interval.b}]", field="f")
        c = _dct_coeffs(vals)
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return ChebSeries(interval, np.zeros(1))
        if np.all(np.abs(c[-8:]) < tol * scale):
            keep = np.nonzero(np.abs(c) >= trim_tol * scale)[0]
            return ChebSeries(interval, c[:keep[-1] + 1])
        m = 2 * m - 1
    raise NoConvergenceError(
        f"adaptive Chebyshev fit of {_fname(f)} did not converge with {max_size} points")


def _fname(f):
    return getattr(f, "__name__", None) or repr(f)
