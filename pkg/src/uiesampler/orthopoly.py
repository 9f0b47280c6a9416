"""Weighted orthonormal functions ``phi_k = p_k * sqrt(w)`` as Chebyshev interpolants.

The orthonormal polynomials satisfy

    beta_{k-1} p_{k-1}(x) + alpha_k p_k(x) + beta_k p_{k+1}(x) = x p_k(x),

with closed-form coefficients for the classical weights and coefficients from a
discretized Stieltjes procedure otherwise. The recurrence is run directly on
``phi_k`` values at a Chebyshev grid, since the common ``sqrt(w)`` factor
rides along.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .cheb import (
    ChebGrid,
    ChebSeries,
    Interval,
    adaptive_fit,
    barycentric_eval,
    cc_weights,
    cheb_points,
    coeffs_to_vals,
    vals_to_coeffs,
)
from .exceptions import (
    DegeneracyError,
    IllConditionedError,
    InvalidArgumentError,
    UnboundedWeightError,
)

__all__ = [
    "WeightSpec",
    "RecurrenceCoefficients",
    "WeightedOPBasis",
    "classical_recurrence",
    "stieltjes_recurrence",
    "build_basis",
    "kernel_diagonal",
]

KINDS = ("poly", "scaled-poly", "cosh", "hermite", "laguerre", "jacobi")
CLASSICAL = ("hermite", "laguerre", "jacobi")

# Q - min(Q) at the initial truncation points; e^{-40} ~ 4e-18
_INITIAL_DECAY = 40.0
# sqrt(w) at the endpoints must fall below this fraction of its maximum
_SQRT_W_TAIL = 1e-16
_ENDPOINT_TOL = 1e-10
_GRAM_TOL = 1e-8
_GRAM_FAIL = 1e-6
_MAX_WIDENINGS = 60


@dataclass(frozen=True)
class WeightSpec:
    """A weight ``w = exp(-Q)`` on its natural support.

    ``coeffs`` are ascending polynomial coefficients ``q_0, q_1, ...`` of ``Q``
    (kind ``"poly"``) or of ``V`` with ``Q = n V`` (kind ``"scaled-poly"``).
    The classical kinds are ``hermite`` (``e^{-x^2}``), ``laguerre``
    (``x^alpha e^{-x}`` on ``[0, inf)``) and ``jacobi``
    (``(1-x)^alpha (1+x)^beta`` on ``[-1, 1]``).
    """

    kind: str
    coeffs: tuple = ()
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(
                f"unknown weight kind {self.kind!r}; expected one of {', '.join(KINDS)}",
                field="kind")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if self.kind in ("poly", "scaled-poly"):
            c = np.trim_zeros(np.asarray(self.coeffs), "b")
            deg = len(c) - 1
            if deg < 2 or deg % 2 or c[-1] <= 0:
                raise InvalidArgumentError(
                    "polynomial potential needs even degree >= 2 and a positive leading "
                    "coefficient", field="coeffs")
            object.__setattr__(self, "coeffs", tuple(c))
        if self.kind in ("laguerre", "jacobi") and self.alpha <= -1:
            raise InvalidArgumentError("alpha must exceed -1", field="alpha")
        if self.kind == "jacobi" and self.beta <= -1:
            raise InvalidArgumentError("beta must exceed -1", field="beta")

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise InvalidArgumentError("weight specification must be a JSON object",
                                       field="weight")
        if "kind" not in d:
            raise InvalidArgumentError("weight specification is missing 'kind'", field="kind")
        kind = d["kind"]
        if kind in ("poly", "scaled-poly"):
            coeffs = d.get("coeffs")
            if not isinstance(coeffs, (list, tuple)) or not all(
                    isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
                raise InvalidArgumentError("'coeffs' must be a list of numbers", field="coeffs")
        else:
            coeffs = ()
        for key in ("alpha", "beta"):
            if key in d and (not isinstance(d[key], (int, float)) or isinstance(d[key], bool)):
                raise InvalidArgumentError(f"'{key}' must be a number", field=key)
        return cls(kind, tuple(coeffs), d.get("alpha", 0.0), d.get("beta", 0.0))

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"weight is not valid JSON: {exc}", field="weight") from exc
        return cls.from_dict(d)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.coeffs:
            d["coeffs"] = list(self.coeffs)
        if self.kind in ("laguerre", "jacobi"):
            d["alpha"] = self.alpha
        if self.kind == "jacobi":
            d["beta"] = self.beta
        return d

    @property
    def natural_support(self):
        return {"laguerre": "half", "jacobi": "unit"}.get(self.kind, "real")

    @property
    def is_even(self):
        if self.kind in ("poly", "scaled-poly"):
            return all(c == 0 for c in self.coeffs[1::2])
        if self.kind == "jacobi":
            return self.alpha == self.beta
        return self.kind in ("cosh", "hermite")

    def potential(self, x, n=1):
        """``Q(x)``; scaled potentials are multiplied by the matrix size ``n``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(x, self.coeffs)
        if self.kind == "scaled-poly":
            return n * np.polynomial.polynomial.polyval(x, self.coeffs)
        if self.kind == "cosh":
            return np.cosh(x)
        if self.kind == "hermite":
            return x * x
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "laguerre":
                return x - self.alpha * np.log(x) if self.alpha else x.copy()
            q = np.zeros_like(x)
            if self.alpha:
                q -= self.alpha * np.log1p(-x)
            if self.beta:
                q -= self.beta * np.log1p(x)
            return q

    def sqrt_weight(self, x, n=1):
        x = np.asarray(x, dtype=float)
        if self.kind == "laguerre":
            return np.where(x >= 0, np.abs(x) ** (self.alpha / 2) * np.exp(-x / 2), 0.0)
        if self.kind == "jacobi":
            inside = np.abs(x) <= 1
            xc = np.clip(x, -1, 1)
            return np.where(inside, (1 - xc) ** (self.alpha / 2) * (1 + xc) ** (self.beta / 2),
                            0.0)
        return np.exp(-0.5 * self.potential(x, n))


@dataclass(frozen=True)
class RecurrenceCoefficients:
    alphas: np.ndarray
    betas: np.ndarray
    weight_mass: float

    def __post_init__(self):
        a = np.array(self.alphas, dtype=float)
        b = np.array(self.betas, dtype=float)
        if a.shape != b.shape:
            raise InvalidArgumentError("alphas and betas must have equal length")
        if np.any(b <= 0):
            raise InvalidArgumentError("betas must be strictly positive", field="betas")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "weight_mass", float(self.weight_mass))

    def __len__(self):
        return len(self.alphas)

    def jacobi_matrix(self, n=None):
        """Symmetric tridiagonal Jacobi matrix of order ``n``."""
        n = len(self) if n is None else n
        return (np.diag(self.alphas[:n]) + np.diag(self.betas[:n - 1], 1)
                + np.diag(self.betas[:n - 1], -1))


@dataclass(frozen=True, eq=False)
class WeightedOPBasis:
    """``n`` weighted orthonormal functions sampled on a shared Chebyshev grid.

    ``values[k]`` holds ``phi_k`` at ``grid.points`` and ``coeffs[k]`` its
    Chebyshev coefficients; ``m_tilde`` is the resolved length of ``phi_0``.
    """

    weight: WeightSpec
    n: int
    interval: Interval
    grid: ChebGrid
    values: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    rec: RecurrenceCoefficients = field(repr=False)
    m_tilde: int
    gram_error: float

    @property
    def m(self):
        return self.grid.m

    @property
    def series(self) -> ChebSeries:
        return ChebSeries(self.interval, self.coeffs)

    def __call__(self, x):
        """Values ``phi_k(x)``, shape ``(n,) + np.shape(x)``."""
        return barycentric_eval(self.values, self.grid, x)

    def gram(self):
        w = cc_weights(self.grid)
        return (self.values * w) @ self.values.T

    def recurrence_residual(self, x=None):
        """Max of ``|beta_{k-1} phi_{k-1} + alpha_k phi_k + beta_k phi_{k+1} - x phi_k|``
        over rows ``k < n - 1``, relative to ``max|phi|``; grid points by default."""
        if x is None:
            x, phi = self.grid.points, self.values
        else:
            x = np.asarray(x, dtype=float)
            phi = self(x)
        a, b = self.rec.alphas, self.rec.betas
        res = 0.0
        for k in range(self.n - 1):
            r = a[k] * phi[k] + b[k] * phi[k + 1] - x * phi[k]
            if k:
                r += b[k - 1] * phi[k - 1]
            res = max(res, np.abs(r).max())
        return res / np.abs(self.values).max()


def classical_recurrence(kind, n, alpha=0.0, beta=0.0) -> RecurrenceCoefficients:
    """Closed-form orthonormal recurrence coefficients ``k = 0..n-1``.

    ``kind`` is ``"hermite"`` (weight ``e^{-x^2}``), ``"laguerre"``
    (``x^alpha e^{-x}``) or ``"jacobi"`` (``(1-x)^alpha (1+x)^beta``), or a
    :class:`WeightSpec` of one of those kinds.
    """
    if isinstance(kind, WeightSpec):
        kind, alpha, beta = kind.kind, kind.alpha, kind.beta
    if n < 1:
        raise InvalidArgumentError("n must be at least 1", field="n")
    k = np.arange(n, dtype=float)
    if kind == "hermite":
        return RecurrenceCoefficients(np.zeros(n), np.sqrt((k + 1) / 2), math.sqrt(math.pi))
    if kind == "laguerre":
        if alpha <= -1:
            raise InvalidArgumentError("alpha must exceed -1", field="alpha")
        return RecurrenceCoefficients(2 * k + alpha + 1, np.sqrt((k + 1) * (k + alpha + 1)),
                                      math.exp(gammaln(alpha + 1)))
    if kind == "jacobi":
        if alpha <= -1 or beta <= -1:
            raise InvalidArgumentError("alpha and beta must exceed -1", field="alpha")
        s = alpha + beta
        t = 2 * k + s
        with np.errstate(divide="ignore", invalid="ignore"):
            alphas = (beta**2 - alpha**2) / (t * (t + 2))
            num = 4 * (k + 1) * (k + alpha + 1) * (k + beta + 1) * (k + s + 1)
            betas = np.sqrt(num / ((t + 2) ** 2 * (t + 1) * (t + 3)))
        # k = 0 limits when alpha + beta is 0 or -1
        alphas[0] = (beta - alpha) / (s + 2)
        betas[0] = math.sqrt(4 * (alpha + 1) * (beta + 1) / ((s + 2) ** 2 * (s + 3)))
        log_mass = ((s + 1) * math.log(2) + gammaln(alpha + 1) + gammaln(beta + 1)
                    - gammaln(s + 2))
        return RecurrenceCoefficients(alphas, betas, math.exp(log_mass))
    raise InvalidArgumentError(f"no closed-form recurrence for weight kind {kind!r}",
                               field="kind")


def stieltjes_recurrence(weight: WeightSpec, interval: Interval, n: int, n_quad=None,
                         scale_n=None) -> RecurrenceCoefficients:
    """Recurrence coefficients by the Stieltjes procedure on a discretized measure.

    The measure ``w(x) dx`` on ``interval`` is replaced by Clenshaw-Curtis
    nodes and weights (``8 (n + m_tilde)`` points unless ``n_quad`` is given).
    The procedure is run as Lanczos on the nodes with full
    reorthogonalization, which is the modified Gram-Schmidt form of Stieltjes.
    ``scale_n`` is the matrix size used for scaled potentials (default ``n``).
    """
    if n < 1:
        raise InvalidArgumentError("n must be at least 1", field="n")
    scale_n = n if scale_n is None else scale_n
    if n_quad is None:
        m_tilde = len(adaptive_fit(lambda x: weight.sqrt_weight(x, scale_n), interval))
        n_quad = 8 * (n + m_tilde)
    grid = cheb_points(interval, max(int(n_quad), n + 2))
    x = grid.points
    lam = cc_weights(grid) * weight.sqrt_weight(x, scale_n) ** 2
    mass = math.fsum(lam)
    if not mass > 0:
        raise DegeneracyError("weight has zero mass on the truncation interval")
    scale = max(abs(interval.a), abs(interval.b))
    V = np.zeros((n + 1, x.size))
    V[0] = np.sqrt(lam / mass)
    alphas = np.zeros(n)
    betas = np.zeros(n)
    for k in range(n):
        u = x * V[k]
        alphas[k] = math.fsum(V[k] * u)
        u -= alphas[k] * V[k]
        if k:
            u -= betas[k - 1] * V[k - 1]
        for _ in range(2):
            u -= V[:k + 1].T @ (V[:k + 1] @ u)
        betas[k] = math.sqrt(math.fsum(u * u))
        if betas[k] < 1e-13 * scale:
            raise DegeneracyError(f"Stieltjes procedure broke down at k = {k}")
        V[k + 1] = u / betas[k]
    if weight.is_even and np.isclose(interval.a, -interval.b):
        alphas[:] = 0.0
    return RecurrenceCoefficients(alphas, betas, mass)


def _recurrence_values(phi0, x, rec, rows):
    a, b = rec.alphas, rec.betas
    vals = np.empty((rows, x.size))
    vals[0] = phi0
    if rows > 1:
        vals[1] = (x - a[0]) * phi0 / b[0]
    for k in range(1, rows - 1):
        vals[k + 1] = ((x - a[k]) * vals[k] - b[k - 1] * vals[k - 1]) / b[k]
    return vals


def _initial_interval(weight: WeightSpec, n: int) -> tuple[Interval, float]:
    """Interval where ``Q - min Q`` first reaches 40 on each side, and the center."""
    if weight.kind == "jacobi":
        return Interval(-1.0, 1.0), 0.0

    def Q(x):
        return weight.potential(x, n)

    lo_bound = 0.0 if weight.kind == "laguerre" else None
    L = 1.0
    ref = Q(0.5) if lo_bound is not None else Q(0.0)
    for _ in range(200):
        right = Q(L) - ref
        left = np.inf if lo_bound is not None else Q(-L) - ref
        if right > _INITIAL_DECAY and left > _INITIAL_DECAY:
            break
        L *= 2.0
        if not np.isfinite(L) or L > 1e150:
            break
    else:
        raise UnboundedWeightError(f"weight {weight.kind} does not decay")
    if not (np.isfinite(L) and L <= 1e150):
        raise UnboundedWeightError(f"weight {weight.kind} does not decay")
    lo = 0.0 if lo_bound is not None else -L
    xs = np.linspace(lo, L, 4001)
    with np.errstate(invalid="ignore", over="ignore"):
        qs = Q(xs)
    qs = np.where(np.isfinite(qs), qs, np.inf)
    i_min = int(np.argmin(qs))
    q_min, x_min = qs[i_min], xs[i_min]
    level = q_min + _INITIAL_DECAY

    def crossing(i_in, i_out):
        u, v = xs[i_in], xs[i_out]
        for _ in range(100):
            mid = 0.5 * (u + v)
            if Q(mid) < level:
                u = mid
            else:
                v = mid
        return v

    below = np.nonzero(qs < level)[0]
    b = crossing(below[-1], min(below[-1] + 1, xs.size - 1))
    if lo_bound is not None:
        a = 0.0
    else:
        a = crossing(below[0], max(below[0] - 1, 0))
    return Interval(a, b), x_min


def _widen(interval, center, hard_left):
    a = interval.a if hard_left else center - 1.2 * (center - interval.a)
    b = center + 1.2 * (interval.b - center)
    return Interval(a, b)


def _build(weight, n, interval, n_quad_factor=1):
    def sqrt_w(x):
        return weight.sqrt_weight(x, n)

    fit = adaptive_fit(sqrt_w, interval)
    m_tilde = len(fit)
    if weight.kind in CLASSICAL:
        rec = classical_recurrence(weight, n + 1)
    else:
        rec = stieltjes_recurrence(weight, interval, n + 1, n_quad=8 * (n + 1 + m_tilde)
                                   * n_quad_factor, scale_n=n)
    m = 2 * (m_tilde + n)
    grid = cheb_points(interval, m)
    phi0 = sqrt_w(grid.points) / math.sqrt(rec.weight_mass)
    vals = _recurrence_values(phi0, grid.points, rec, n + 1)
    values = vals[:n].copy()
    values.setflags(write=False)
    coeffs = vals_to_coeffs(values, grid).coeffs
    w = cc_weights(grid)
    gram_err = float(np.abs((values * w) @ values.T - np.eye(n)).max())
    return WeightedOPBasis(weight, n, interval, grid, values, coeffs, rec, m_tilde, gram_err)


def _endpoints_negligible(basis, check_left, check_right):
    scale = np.abs(basis.values).max()
    ok = True
    if check_left:
        ok &= bool(np.abs(basis.values[:, 0]).max() < _ENDPOINT_TOL * scale)
    if check_right:
        ok &= bool(np.abs(basis.values[:, -1]).max() < _ENDPOINT_TOL * scale)
    return ok


def build_basis(weight: WeightSpec, n: int, interval_hint: Interval | None = None
                ) -> WeightedOPBasis:
    """Construct ``phi_0..phi_{n-1}`` for ``weight`` as Chebyshev interpolants.

    Without a hint the truncation interval starts where ``Q - min Q = 40`` and
    is widened by 20% until ``sqrt(w)`` and every ``phi_k`` are negligible at
    the free endpoints. Compactly supported weights keep their natural
    endpoints.
    """
    if isinstance(weight, dict):
        weight = WeightSpec.from_dict(weight)
    if int(n) != n or n < 1:
        raise InvalidArgumentError("n must be a positive integer", field="n")
    n = int(n)
    if weight.kind in ("laguerre", "jacobi"):
        exps = [weight.alpha] + ([weight.beta] if weight.kind == "jacobi" else [])
        if any(e < 0 or e % 2 for e in exps):
            raise InvalidArgumentError(
                "basis construction needs a smooth sqrt(w); classical exponents must be even "
                "nonnegative integers", field="alpha")
    check_left = weight.natural_support == "real"
    check_right = weight.natural_support != "unit"

    if interval_hint is not None:
        basis = _build(weight, n, interval_hint)
        if not _endpoints_negligible(basis, check_left, check_right):
            warnings.warn("basis functions are not negligible at the hinted interval endpoints",
                          stacklevel=2)
    else:
        interval, center = _initial_interval(weight, n)
        if check_right:
            for _ in range(_MAX_WIDENINGS):
                sw = weight.sqrt_weight(np.array([interval.a, interval.b, center]), n)
                peak = max(sw[2], np.abs(weight.sqrt_weight(
                    np.linspace(interval.a, interval.b, 2001), n)).max())
                tail_ok = sw[1] < _SQRT_W_TAIL * peak and (
                    not check_left or sw[0] < _SQRT_W_TAIL * peak)
                if tail_ok:
                    break
                interval = _widen(interval, center, not check_left)
            else:
                raise UnboundedWeightError("could not find an interval where sqrt(w) is negligible")
        for _ in range(_MAX_WIDENINGS):
            basis = _build(weight, n, interval)
            if _endpoints_negligible(basis, check_left, check_right):
                break
            interval = _widen(interval, center, not check_left)
        else:
            raise UnboundedWeightError(
                f"phi_{n - 1} is not negligible on any tried truncation interval")

    factor = 1
    while basis.gram_error > _GRAM_TOL and weight.kind not in CLASSICAL and factor < 8:
        factor *= 2
        basis = _build(weight, n, basis.interval, n_quad_factor=factor)
    if basis.gram_error > _GRAM_FAIL:
        raise IllConditionedError(
            f"Gram matrix deviates from identity by {basis.gram_error:.2e}; "
            "try a larger quadrature or a narrower interval")
    if basis.gram_error > _GRAM_TOL:
        warnings.warn(f"basis orthonormality error {basis.gram_error:.2e} exceeds {_GRAM_TOL}",
                      stacklevel=2)
    return basis


def kernel_diagonal(basis: WeightedOPBasis) -> ChebSeries:
    """Chebyshev series of ``K_n(x, x) = sum_k phi_k(x)^2``."""
    grid = cheb_points(basis.interval, 2 * basis.m - 1)
    vals = coeffs_to_vals(basis.series, grid)
    return vals_to_coeffs(np.sum(vals * vals, axis=0), grid)
