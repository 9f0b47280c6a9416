"""Monte Carlo statistics for sampled spectra.

Empirical distribution functions use the strict indicator ``1{lambda < x}``.
Kolmogorov-Smirnov distances are sups over every jump point, evaluated from
both sides, plus a fine grid over the combined support.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .cheb import ChebSeries, Interval, cumsum
from .eqmeasure import C_V_HIGHER_ORDER, EquilibriumMeasure, edge_constant
from .exceptions import DegenerateEdgeError, InvalidArgumentError
from .orthopoly import WeightedOPBasis, kernel_diagonal

__all__ = [
    "EmpiricalCDF",
    "SeriesCDF",
    "KSReport",
    "empirical_cdf",
    "spectral_cdf",
    "ks_distance",
    "ks_report",
    "edge_statistic",
    "bulk_statistic",
    "histogram_density",
    "write_eigenvalues_csv",
    "read_eigenvalues_csv",
    "write_values_csv",
    "write_cdf_csv",
]

REFINEMENT_POINTS = 10_000


class EmpiricalCDF:
    """``F(x) = #{values < x} / count``; left-continuous step function."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise InvalidArgumentError("empirical CDF needs at least one sample", field="samples")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("samples must be finite", field="samples")
        self.values = v
        self.count = v.size

    def __call__(self, x):
        out = np.searchsorted(self.values, x, side="left") / self.count
        return float(out) if np.ndim(out) == 0 else out

    def right_limit(self, x):
        """``F(x+) = #{values <= x} / count``."""
        out = np.searchsorted(self.values, x, side="right") / self.count
        return float(out) if np.ndim(out) == 0 else out

    @property
    def support(self):
        lo, hi = self.values[0], self.values[-1]
        return Interval(lo, hi) if hi > lo else Interval(lo - 1.0, lo + 1.0)


def empirical_cdf(samples) -> EmpiricalCDF:
    return EmpiricalCDF(samples)


class SeriesCDF:
    """CDF given by a Chebyshev series on an interval; 0 to the left, its end value to the right."""

    def __init__(self, series: ChebSeries):
        self.series = series
        self.support = series.interval

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        iv = self.support
        out = self.series(np.clip(x, iv.a, iv.b))
        out = np.where(x < iv.a, 0.0, out)
        return float(out) if out.ndim == 0 else out


def spectral_cdf(basis: WeightedOPBasis) -> SeriesCDF:
    """``F_n(x) = (1/n) int_a^x K_n(y, y) dy``."""
    return SeriesCDF(ChebSeries(basis.interval, cumsum(kernel_diagonal(basis)).coeffs / basis.n))


def _sides(F):
    """``(left(x), right(x), jumps, support)`` for any supported CDF object."""
    if isinstance(F, EmpiricalCDF):
        return F, F.right_limit, F.values, F.support
    if isinstance(F, EquilibriumMeasure):
        return F.cdf, F.cdf, None, F.support
    if callable(F):
        def ev(x):
            return np.asarray(F(x), dtype=float) * np.ones_like(x)
        return ev, ev, None, getattr(F, "support", None)
    raise InvalidArgumentError(f"cannot use {type(F).__name__} as a CDF", field="F")


def ks_distance(F1, F2, support: tuple | None = None) -> float:
    """``sup_x |F1(x) - F2(x)|`` for empirical or continuous CDFs.

    Each side is evaluated at every jump point of either function (left and
    right limits) and on a refinement grid over the combined support.
    ``support`` is needed only when neither argument carries one.
    """
    l1, r1, j1, s1 = _sides(F1)
    l2, r2, j2, s2 = _sides(F2)
    spans = [s for s in (s1, s2) if s is not None]
    if support is not None:
        spans.append(Interval(*support))
    if not spans:
        raise InvalidArgumentError("ks_distance needs a support for two plain callables",
                                   field="support")
    lo = min(s.a for s in spans)
    hi = max(s.b for s in spans)
    pts = [np.linspace(lo, hi, REFINEMENT_POINTS)]
    pts += [j for j in (j1, j2) if j is not None]
    x = np.unique(np.concatenate(pts))
    d = max(np.abs(l1(x) - l2(x)).max(), np.abs(r1(x) - r2(x)).max())
    return float(min(d, 1.0))


@dataclass(frozen=True)
class KSReport:
    """``E_nm`` against the spectral CDF ``F_n`` and ``E_inf_nm`` against the limit ``F``."""

    E_nm: float
    E_inf_nm: float
    n: int
    m: int
    ks_Fn_F: float | None = None

    def to_dict(self):
        return asdict(self)


def ks_report(draws, basis: WeightedOPBasis, mu: EquilibriumMeasure | None = None) -> KSReport:
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    emp = EmpiricalCDF(draws)
    Fn = spectral_cdf(basis)
    e = ks_distance(emp, Fn)
    if mu is None:
        return KSReport(e, float("nan"), basis.n, draws.shape[0])
    return KSReport(e, ks_distance(emp, mu), basis.n, draws.shape[0], ks_distance(Fn, mu))


def edge_statistic(draws, mu: EquilibriumMeasure, n: int, higher_order: bool = False,
                   constant: str = "sqrt"):
    """Rescaled largest eigenvalues ``c n^p (lambda_max - b_V)`` per draw.

    ``(c, p) = (c_V, 2/3)`` for square-root edges and ``(5^{-2/7}, 2/7)`` for
    the higher-order potential. ``constant`` picks the square-root edge
    constant: ``"sqrt"`` (from ``sum_k k V_k``, Tracy-Widom normalized) or
    ``"printed"`` (from ``sum_k V_k``).
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if higher_order:
        if not mu.is_higher_order:
            raise InvalidArgumentError("no higher-order edge constant for this potential",
                                       field="higher_order")
        c, p = C_V_HIGHER_ORDER, 2 / 7
    else:
        try:
            sc = edge_constant(mu)
        except DegenerateEdgeError as exc:
            raise InvalidArgumentError(str(exc), field="higher_order") from exc
        if constant == "sqrt":
            c = sc.c_V_sqrt
        elif constant == "printed":
            c = sc.c_V
        else:
            raise InvalidArgumentError(f"unknown edge constant {constant!r}", field="constant")
        if c is None or not np.isfinite(c):
            raise InvalidArgumentError("edge constant unavailable; the edge is degenerate",
                                       field="higher_order")
        p = 2 / 3
    return c * n**p * (draws.max(axis=1) - mu.b)


def bulk_statistic(draws, mu: EquilibriumMeasure, n: int, psi0: float | None = None):
    """``n psi(0) |lambda|`` for the eigenvalue of smallest modulus in each draw."""
    if psi0 is None:
        if not mu.a < 0.0 < mu.b:
            raise InvalidArgumentError("0 lies outside the support", field="mu")
        psi0 = mu.density(0.0)
    if not psi0 > 0:
        raise InvalidArgumentError("the density vanishes at 0", field="mu")
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    return n * psi0 * np.abs(draws).min(axis=1)


def histogram_density(samples, bins: int, range: tuple | None = None):
    """``(edges, heights)`` with heights integrating to one."""
    if int(bins) != bins or bins < 1:
        raise InvalidArgumentError(f"bins must be a positive integer, got {bins}", field="bins")
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InvalidArgumentError("no samples", field="samples")
    heights, edges = np.histogram(samples, bins=int(bins), range=range, density=True)
    return edges, heights


# ---------------------------------------------------------------------------
# CSV

def write_eigenvalues_csv(fh, draws):
    """Header ``lambda_1,...,lambda_n``, then one sorted draw per row."""
    draws = np.atleast_2d(draws)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"lambda_{j + 1}" for j in range(draws.shape[1])])
    for row in draws:
        w.writerow([repr(float(v)) for v in row])


def read_eigenvalues_csv(fh):
    rows = list(csv.reader(fh))
    if not rows or not rows[0] or not rows[0][0].startswith("lambda_"):
        raise InvalidArgumentError("missing eigenvalue header", field="file")
    return np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(rows[0]))


def write_values_csv(fh, values, name="value"):
    """One value per row under a single header."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([name])
    for v in np.ravel(values):
        w.writerow([repr(float(v))])


def write_cdf_csv(fh, x, F):
    """Rows of ``x,F``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "F"])
    for a, b in zip(np.ravel(x), np.ravel(F)):
        w.writerow([repr(float(a)), repr(float(b))])
