"""Single-interval equilibrium measures of a potential ``V``.

On the support ``[a, b] = [c - h, c + h]`` write ``V'(c + h t) = sum_k V_k T_k(t)``.
The density is

    psi(c + h t) = sqrt(1 - t^2) / (2 pi) * sum_{k>=1} V_k U_{k-1}(t),

and the endpoints solve ``V_0 = 0`` (no hard edge) together with
``(b - a) V_1 / 8 = 1`` (unit mass).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from .cheb import Interval, adaptive_fit
from .exceptions import (
    DegenerateEdgeError,
    InvalidArgumentError,
    MultiIntervalSupportError,
    NoConvergenceError,
)

__all__ = [
    "EquilibriumMeasure",
    "ScalingConstants",
    "HIGHER_ORDER_POTENTIAL",
    "C_V_HIGHER_ORDER",
    "equilibrium_measure",
    "density_eval",
    "limiting_cdf",
    "edge_constant",
    "cosh_potential",
]

#: V(x) = x^4/20 - 4x^3/15 + x^2/5 + 8x/5, whose measure decays like (2 - x)^{5/2}.
#: Kept exact: rounding the coefficients to binary moves the degenerate
#: right endpoint by ~1e-5.
HIGHER_ORDER_POTENTIAL = (Fraction(0), Fraction(8, 5), Fraction(1, 5), Fraction(-4, 15),
                          Fraction(1, 20))
C_V_HIGHER_ORDER = 5.0 ** (-2 / 7)

_MAX_NEWTON = 100
_MP_DPS = 60
_MAX_MP_NEWTON = 300


@dataclass(frozen=True, eq=False)
class EquilibriumMeasure:
    support: Interval
    u_coeffs: np.ndarray = field(repr=False)
    t_coeffs: np.ndarray = field(repr=False)
    total_mass: float
    potential: object = field(default=None, repr=False)
    residuals: tuple = (0.0, 0.0)

    @property
    def a(self):
        return self.support.a

    @property
    def b(self):
        return self.support.b

    def density(self, x):
        return density_eval(self, x)

    def cdf(self, x):
        return limiting_cdf(self, x)

    def potential_value(self, x):
        V = self.potential
        if callable(V):
            return V(np.asarray(x, dtype=float))
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float),
                                                [float(v) for v in V])

    @property
    def is_higher_order(self):
        V = self.potential
        if callable(V) or V is None:
            return False
        c = np.zeros(max(len(V), 5))
        c[:len(V)] = [float(v) for v in V]
        ref = [float(v) for v in HIGHER_ORDER_POTENTIAL]
        return len(np.trim_zeros(c, "b")) == 5 and np.allclose(c[:5], ref, rtol=0, atol=1e-12)

    def to_dict(self):
        return {
            "support": [self.a, self.b],
            "u_coeffs": [float(v) for v in self.u_coeffs],
            "mass": self.total_mass,
        }


@dataclass(frozen=True)
class ScalingConstants:
    """Universality scaling constants of an equilibrium measure.

    ``c_V`` follows the closed-form expression in ``sum_k V_k``; ``c_V_sqrt``
    is derived from the square-root edge coefficient ``sum_k k V_k`` and is
    what makes ``c n^{2/3} (lambda_max - b)`` Tracy-Widom distributed (it
    gives ``sqrt(2)`` for ``V = x^2``). ``c_V_HO`` is only set for the
    higher-order potential.
    """

    c_V: float
    c_V_sqrt: float | None
    c_V_HO: float | None = None
    psi_at: dict = field(default_factory=dict)
    degenerate_edge: bool = False


def cosh_potential(n):
    """``(V, V')`` for ``V(x) = cosh(x) / n``."""
    return (lambda x: np.cosh(x) / n), (lambda x: np.sinh(x) / n)


def _as_potential(V, dV):
    if callable(V):
        if dV is None:
            raise InvalidArgumentError("a callable potential needs its derivative dV",
                                       field="dV")
        return V, dV
    coeffs = list(V)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) < 3:
        raise InvalidArgumentError("polynomial potential must have degree >= 2", field="V")
    return tuple(coeffs), None


def _mpf(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(float(v))


def _derivative_cheb(V, dV, c, h):
    if dV is None:
        d = Polynomial([float(v) for v in V]).deriv()
        return d(Polynomial([c, h])).convert(kind=Chebyshev).coef
    return adaptive_fit(lambda t: dV(c + h * t), Interval(-1.0, 1.0)).coeffs


def _residual(V, dV, c, h):
    vk = _derivative_cheb(V, dV, c, h)
    v1 = vk[1] if vk.size > 1 else 0.0
    return np.array([vk[0], h * v1 / 4.0 - 1.0]), vk


def _initial_guess(V, dV):
    # center at the minimizer of V, then solve the mass condition for h
    if dV is None:
        Vf = [float(v) for v in V]
        crit = Polynomial(Vf).deriv().roots()
        crit = crit[np.abs(crit.imag) < 1e-9].real
        c = float(crit[np.argmin(np.polynomial.polynomial.polyval(crit, Vf))])
    else:
        xs = np.linspace(-50, 50, 20001)
        with np.errstate(over="ignore"):
            c = float(xs[np.argmin(V(xs))])
    lo, hi = 1e-8, 1.0
    while _residual(V, dV, c, hi)[0][1] < 0:
        hi *= 2
        if hi > 1e8:
            raise NoConvergenceError("could not bracket the support width")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _residual(V, dV, c, mid)[0][1] < 0:
            lo = mid
        else:
            hi = mid
    return c, 0.5 * (lo + hi)


def _mp_cheb_of_composition(coeffs, c, h):
    """Chebyshev-T coefficients in t of ``sum_j coeffs[j] (c + h t)^j``, in mpmath."""
    deg = len(coeffs) - 1
    # power coefficients of p(c + h t) in t, by Horner
    pw = [mpmath.mpf(0)] * (deg + 1)
    for a in reversed(coeffs):
        new = [mpmath.mpf(0)] * (deg + 1)
        for j in range(deg + 1):
            new[j] += c * pw[j]
            if j + 1 <= deg:
                new[j + 1] += h * pw[j]
        new[0] += a
        pw = new
    # t^j in the T basis via t T_k = (T_{k+1} + T_{k-1}) / 2
    out = [mpmath.mpf(0)] * (deg + 1)
    tj = [mpmath.mpf(1)] + [mpmath.mpf(0)] * deg
    for j in range(deg + 1):
        for k in range(j + 1):
            out[k] += pw[j] * tj[k]
        nxt = [mpmath.mpf(0)] * (deg + 1)
        for k in range(j + 1):
            if tj[k] == 0 or k + 1 > deg:
                continue
            if k == 0:
                nxt[1] += tj[0]
            else:
                nxt[k + 1] += tj[k] / 2
                nxt[k - 1] += tj[k] / 2
        tj = nxt
    return out


def _refine_mp(V, c, h):
    """Polish polynomial-potential endpoints with Newton in extended precision.

    Near a degenerate (faster than square-root) edge the endpoint residual is
    of high order in the endpoint error, so double precision cannot resolve
    the support beyond ~1e-5.
    """
    with mpmath.workdps(_MP_DPS):
        d1 = [j * _mpf(V[j]) for j in range(1, len(V))]
        d2 = [mpmath.mpf(j) * d1[j] for j in range(1, len(d1))] or [mpmath.mpf(0)]
        c, h = mpmath.mpf(c), mpmath.mpf(h)

        def resid(c, h):
            vk = _mp_cheb_of_composition(d1, c, h) + [mpmath.mpf(0)]
            return mpmath.matrix([vk[0], h * vk[1] / 4 - 1]), vk

        r, vk = resid(c, h)
        floor = mpmath.mpf(10) ** (-(_MP_DPS - 8))
        for _ in range(_MAX_MP_NEWTON):
            if mpmath.norm(r) < floor:
                break
            A = _mp_cheb_of_composition(d2, c, h) + [mpmath.mpf(0)] * 2
            # t V''(c + h t) in T coefficients
            B = [mpmath.mpf(0)] * (len(A) + 1)
            for k, a in enumerate(A):
                if k == 0:
                    B[1] += a
                else:
                    B[k + 1] += a / 2
                    B[k - 1] += a / 2
            J = mpmath.matrix([[A[0], B[0]], [h * A[1] / 4, vk[1] / 4 + h * B[1] / 4]])
            try:
                step = mpmath.lu_solve(J, -r)
            except ZeroDivisionError:
                break
            lam = mpmath.mpf(1)
            for _ in range(60):
                cn, hn = c + lam * step[0], h + lam * step[1]
                if hn > 0:
                    rn, vkn = resid(cn, hn)
                    if mpmath.norm(rn) < mpmath.norm(r):
                        break
                lam /= 2
            else:
                break
            c, h, r, vk = cn, hn, rn, vkn
        return float(c), float(h)


def equilibrium_measure(V, guess: Interval | None = None, dV=None,
                        tol: float = 1e-14) -> EquilibriumMeasure:
    """Equilibrium measure of ``V`` assuming a single-interval support.

    ``V`` is a sequence of ascending polynomial coefficients, or a callable
    together with its derivative ``dV``. The endpoints come from damped
    Newton iteration on the two endpoint conditions.
    """
    V, dV = _as_potential(V, dV)
    if guess is None:
        c, h = _initial_guess(V, dV)
    else:
        c, h = guess.center, guess.half_width

    r, vk = _residual(V, dV, c, h)
    norm = np.linalg.norm(r)
    for _ in range(_MAX_NEWTON):
        if norm < tol:
            break
        J = np.empty((2, 2))
        for j, (dc, dh) in enumerate(((1, 0), (0, 1))):
            eps = 1e-7 * max(1.0, abs(c), h)
            rp = _residual(V, dV, c + dc * eps, h + dh * eps)[0]
            rm = _residual(V, dV, c - dc * eps, h - dh * eps)[0]
            J[:, j] = (rp - rm) / (2 * eps)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        for _ in range(40):
            c_new, h_new = c + lam * step[0], h + lam * step[1]
            if h_new > 0:
                r_new, vk_new = _residual(V, dV, c_new, h_new)
                if np.linalg.norm(r_new) < norm:
                    break
            lam *= 0.5
        else:
            break
        c, h, r, vk = c_new, h_new, r_new, vk_new
        norm = np.linalg.norm(r)
    if norm > 1e-11:
        raise NoConvergenceError(
            f"equilibrium endpoint Newton iteration stalled with residuals {r.tolist()}")
    if dV is None:
        c, h = _refine_mp(V, c, h)
        r, vk = _residual(V, dV, c, h)

    support = Interval(c - h, c + h)
    mu = EquilibriumMeasure(support, np.array(vk[1:]), np.array(vk), h * vk[1] / 4.0,
                            V, tuple(float(v) for v in r))
    t = np.cos(np.pi * (np.arange(1000) + 0.5) / 1000)
    raw = _density_raw(mu, support.from_unit(t))
    if raw.min() < -1e-10 * max(1.0, np.abs(raw).max()):
        raise MultiIntervalSupportError(
            "equilibrium density is negative inside the computed interval; "
            "the support is not a single interval")
    return mu


def _u_series(coeffs, t):
    """``sum_j coeffs[j] U_j(t)`` by Clenshaw's recurrence."""
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    for a in coeffs[::-1]:
        b1, b2 = a + 2 * t * b1 - b2, b1
    return b1


def _density_raw(mu, x):
    x = np.asarray(x, dtype=float)
    t = mu.support.to_unit(x)
    inside = np.abs(t) < 1
    tc = np.where(inside, t, 0.0)
    val = np.sqrt(1 - tc * tc) / (2 * np.pi) * _u_series(mu.u_coeffs, tc)
    return np.where(inside, val, 0.0)


def density_eval(mu: EquilibriumMeasure, x):
    """Density ``psi(x)``; zero outside the support."""
    out = np.maximum(_density_raw(mu, x), 0.0)
    return float(out) if out.ndim == 0 else out


def limiting_cdf(mu: EquilibriumMeasure, x):
    """``mu((-inf, x])`` in closed form through ``t = cos(theta)``."""
    x = np.asarray(x, dtype=float)
    t = np.clip(mu.support.to_unit(x), -1.0, 1.0)
    theta = np.arccos(t)
    vk = mu.u_coeffs
    acc = vk[0] * 0.5 * (np.pi - theta + 0.5 * np.sin(2 * theta))
    for k in range(2, vk.size + 1):
        acc = acc - vk[k - 1] * 0.5 * (np.sin((k - 1) * theta) / (k - 1)
                                       - np.sin((k + 1) * theta) / (k + 1))
    F = np.clip(mu.support.half_width / (2 * np.pi) * acc, 0.0, 1.0)
    F = np.where(x >= mu.b, 1.0, np.where(x <= mu.a, 0.0, F))
    return float(F) if F.ndim == 0 else F


def edge_constant(mu: EquilibriumMeasure, bulk_points=(0.0,)) -> ScalingConstants:
    """Edge scaling constants at the right endpoint ``b_V``.

    Raises :class:`DegenerateEdgeError` when the density has no square-root
    edge, except for the higher-order potential whose constant is known.
    """
    vk = mu.u_coeffs
    width = mu.support.width
    total = float(np.sum(vk))
    c_v = width ** (-1 / 3) * (2 * np.pi * total) ** (2 / 3) if total > 0 else math.nan
    edge = float(np.sum(np.arange(1, vk.size + 1) * vk))
    degenerate = abs(edge) <= 1e-8 * max(1.0, float(np.abs(vk).sum()))
    c_sqrt = None if degenerate else width ** (-1 / 3) * edge ** (2 / 3)
    psi_at = {float(p): density_eval(mu, p) for p in bulk_points}
    c_ho = C_V_HIGHER_ORDER if mu.is_higher_order else None
    if degenerate and c_ho is None:
        raise DegenerateEdgeError(
            "equilibrium density vanishes faster than a square root at the right edge")
    if degenerate:
        warnings.warn("degenerate edge: use the higher-order constant c_V_HO", stacklevel=2)
    return ScalingConstants(c_v, c_sqrt, c_ho, psi_at, degenerate)
