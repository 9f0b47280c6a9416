"""Sampling the eigenvalue point process by sequential deflation.

The ``n`` eigenvalues of a unitary invariant ensemble form a projection
determinantal point process with kernel ``K_n(x, y) = sum_k phi_k(x) phi_k(y)``.
Starting from ``q_n = phi``, each step draws ``r_k`` from ``q_k^T q_k / k``
by inverse-transform sampling and projects ``q_k`` onto the orthogonal
complement of ``q_k(r_k)`` with a Householder reflector.

All work happens on the values of ``q_k`` at the basis grid, so many draws
can be advanced together as a ``(batch, k, m)`` array.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cheb import (
    ChebGrid,
    ChebSeries,
    Interval,
    _dct_coeffs,
    _dct_values,
    _unit_points,
    barycentric_weights,
    cheb_points,
    vals_to_coeffs,
)
from .exceptions import DegeneracyError, InvalidArgumentError
from .orthopoly import WeightedOPBasis

__all__ = [
    "SeededRng",
    "DeflationState",
    "sample_density_1d",
    "deflate",
    "initial_state",
    "sample_eigenvalues",
    "sample_eigenvalues_batch",
    "joint_density_identity_check",
]

BISECTION_STEPS = 60
LOCAL_NODES = 16
CHUNK_SIZE = 64
MIN_MASS = 1e-12
MIN_NORM = 1e-13


@dataclass(frozen=True)
class SeededRng:
    """A 64-bit seed with one independent PCG64 stream per draw index.

    Stream ``i`` depends only on ``(seed, i)``, so results do not depend on
    how draws are split across workers.
    """

    seed: int
    algorithm: str = "PCG64"

    def __post_init__(self):
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidArgumentError(f"seed must be an integer in [0, 2^64), got {self.seed}",
                                       field="seed")
        if self.algorithm != "PCG64":
            raise InvalidArgumentError(f"unsupported generator {self.algorithm!r}",
                                       field="algorithm")

    def stream(self, index: int, sub: int | None = None) -> np.random.Generator:
        """Generator for draw ``index``; ``sub`` selects an extra independent stream."""
        key = (int(index),) if sub is None else (int(index), int(sub))
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.stream(0)
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# batched kernels

def _cumsum_coeffs(c, half_width):
    """Coefficients of the antiderivative vanishing at the left end, along the last axis."""
    L = c.shape[-1]
    cp = np.zeros(c.shape[:-1] + (L + 2,))
    cp[..., :L] = c
    b = np.zeros(c.shape[:-1] + (L + 1,))
    b[..., 1] = cp[..., 0] - 0.5 * cp[..., 2]
    k = np.arange(2, L + 1)
    b[..., 2:] = (cp[..., 1:L] - cp[..., 3:L + 2]) / (2.0 * k)
    b *= half_width
    signs = np.ones(L + 1)
    signs[1::2] = -1.0
    b[..., 0] = -np.sum(b[..., 1:] * signs[1:], axis=-1)
    return b


def _bary(nodes, weights, vals, x):
    """Row-wise barycentric interpolation: nodes/vals ``(B, p)`` or ``(p,)``, x ``(B, q)``."""
    diff = x[..., :, None] - nodes[..., None, :]
    hit = diff == 0.0
    diff = np.where(hit, 1.0, diff)
    r = weights / diff
    out = np.einsum("bqp,bp->bq", r, np.broadcast_to(vals, (x.shape[0], vals.shape[-1])))
    out /= r.sum(axis=-1)
    if hit.any():
        b, q, j = np.nonzero(hit)
        out[b, q] = np.broadcast_to(vals, (x.shape[0], vals.shape[-1]))[b, j]
    return out


def _invert_cdf(dens_vals, interval: Interval, u):
    """Solve ``F(x) = u`` row by row for densities given by grid values.

    ``dens_vals`` has shape ``(B, m)`` on the Chebyshev grid of ``interval``.
    The CDF is a polynomial of degree ``m``; its exact values on the
    ``(m + 1)``-point grid bracket the root in one cell, where a
    ``LOCAL_NODES``-point interpolant (accurate to rounding, since the cell is
    a fraction of a wavelength) carries the fixed-count bisection.
    Returns ``(x, mass)`` where ``mass`` is the raw integral of each row.
    """
    dens_vals = np.maximum(dens_vals, 0.0)
    G = _cumsum_coeffs(_dct_coeffs(dens_vals), interval.half_width)
    mass = G.sum(axis=-1)
    if np.any(mass < MIN_MASS):
        raise DegeneracyError(f"density has total mass {mass.min():.3g} < {MIN_MASS}")
    M = G.shape[-1]
    Gv = _dct_values(G)
    t = _unit_points(M)
    target = (u * mass)[:, None]
    i = np.clip(np.sum(Gv[:, 1:-1] <= target, axis=1), 0, M - 2)
    lo, hi = t[i], t[i + 1]

    # local Chebyshev nodes on [lo, hi]; the end nodes are grid points
    p = LOCAL_NODES
    s = _unit_points(p)
    nodes = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * s
    nodes[:, 0], nodes[:, -1] = lo, hi
    rows = np.arange(len(i))
    local = np.empty((len(i), p))
    local[:, 0], local[:, -1] = Gv[rows, i], Gv[rows, i + 1]
    local[:, 1:-1] = _bary(t, barycentric_weights(M), Gv, nodes[:, 1:-1])
    c = _dct_coeffs(local)
    j = np.arange(p)

    # bisection in the local angle: s = cos(phi), phi = 0 at the right end
    tgt = target[:, 0]
    a = np.zeros(len(i))
    b = np.full(len(i), np.pi)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (a + b)
        F = np.einsum("bp,bp->b", c, np.cos(mid[:, None] * j))
        above = F > tgt
        a = np.where(above, mid, a)
        b = np.where(above, b, mid)
    sl = np.cos(0.5 * (a + b))
    x = interval.from_unit(0.5 * (lo + hi) + 0.5 * (hi - lo) * sl)
    return np.clip(x, interval.a, interval.b), mass


def _eval_at(values, grid: ChebGrid, x):
    """Barycentric values ``q(x_b)`` for ``values`` of shape ``(B, k, m)`` and ``x`` of shape ``(B,)``."""
    diff = x[:, None] - grid.points[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    r = barycentric_weights(grid.m) / diff
    out = np.einsum("bkm,bm->bk", values, r) / r.sum(axis=1)[:, None]
    rows, cols = np.nonzero(hit)
    if rows.size:
        out[rows] = values[rows, :, cols]
    return out


def _householder_deflate(values, f):
    """Return ``Q^T values`` where ``Q`` spans the complement of ``f`` in each batch row."""
    nf = np.linalg.norm(f, axis=1)
    if np.any(nf < MIN_NORM):
        raise DegeneracyError(
            f"deflation vector has norm {nf.min():.3g}; the point sits at a density zero")
    s = np.where(f[:, 0] >= 0, 1.0, -1.0)
    u = f.copy()
    u[:, 0] += s * nf
    beta = 2.0 / np.einsum("bk,bk->b", u, u)
    proj = np.einsum("bk,bkm->bm", u, values)
    out = values - (beta[:, None] * u)[:, :, None] * proj[:, None, :]
    return out[:, 1:, :]


def _sample_block(phi_vals, grid: ChebGrid, U):
    """Draw ``len(U)`` samples; row ``b`` consumes uniforms ``U[b, 0], U[b, 1], ...``."""
    B, n = U.shape
    vals = np.broadcast_to(phi_vals, (B,) + phi_vals.shape).copy()
    out = np.empty((B, n))
    mass_err = 0.0
    for step, k in enumerate(range(n, 0, -1)):
        dens = np.einsum("bkm,bkm->bm", vals, vals) / k
        x, mass = _invert_cdf(dens, grid.interval, U[:, step])
        mass_err = max(mass_err, float(np.abs(mass - 1.0).max()))
        out[:, step] = x
        if k > 1:
            vals = _householder_deflate(vals, _eval_at(vals, grid, x))
    out.sort(axis=1)
    return out, mass_err


# ---------------------------------------------------------------------------
# single-sample API

@dataclass
class DeflationState:
    """The frame ``q_k`` of one in-flight sample, held as grid values (``k x m``)."""

    values: np.ndarray = field(repr=False)
    grid: ChebGrid = field(repr=False)
    drawn: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def interval(self) -> Interval:
        return self.grid.interval

    @property
    def coeff_matrix(self) -> np.ndarray:
        return _dct_coeffs(self.values)

    @property
    def series(self) -> ChebSeries:
        return ChebSeries(self.interval, self.coeff_matrix)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return _eval_at(np.broadcast_to(self.values, (x.size,) + self.values.shape),
                        self.grid, x).T

    def density(self) -> ChebSeries:
        """``q_k^T q_k / k`` as a Chebyshev series."""
        return vals_to_coeffs(np.sum(self.values**2, axis=0) / self.k, self.grid)


def initial_state(basis: WeightedOPBasis) -> DeflationState:
    return DeflationState(np.array(basis.values), basis.grid, [])


def deflate(state: DeflationState, r: float, check: bool = False) -> DeflationState:
    """Project ``q_k`` onto the complement of ``f = q_k(r)``; ``k`` drops by one.

    With ``check=True`` the reflector is verified to annihilate ``f`` and to
    have orthonormal columns.
    """
    if state.k < 2:
        raise InvalidArgumentError("cannot deflate a frame with fewer than two rows", field="k")
    r = float(r)
    f = _eval_at(state.values[None], state.grid, np.array([r]))
    new = _householder_deflate(state.values[None], f)[0]
    if check:
        nf = np.linalg.norm(f)
        s = 1.0 if f[0, 0] >= 0 else -1.0
        u = f[0].copy()
        u[0] += s * nf
        H = np.eye(state.k) - 2.0 * np.outer(u, u) / (u @ u)
        Q = H[:, 1:]
        if np.abs(Q.T @ f[0]).max() > 1e-12 * nf:
            raise DegeneracyError("Householder kernel basis does not annihilate f")
        if np.abs(Q.T @ Q - np.eye(state.k - 1)).max() > 1e-12:
            raise DegeneracyError("Householder kernel basis is not orthonormal")
    return DeflationState(new, state.grid, state.drawn + [r])


def sample_density_1d(density: ChebSeries, rng=None, u=None) -> float:
    """Inverse-transform sample from a nonnegative Chebyshev density.

    Negative rounding noise is clamped to zero and the CDF is divided by its
    value at the right end before the bisection solve. Pass ``u`` to invert a
    given uniform variate instead of drawing one.
    """
    if u is None:
        u = _as_generator(rng).random()
    if not 0.0 <= u <= 1.0:
        raise InvalidArgumentError(f"uniform variate must lie in [0, 1], got {u}", field="u")
    c = np.asarray(density.coeffs, dtype=float)
    if c.ndim != 1:
        raise InvalidArgumentError("expected a scalar-valued density", field="density")
    m = max(c.size, 2)
    vals = _dct_values(np.pad(c, (0, m - c.size)))
    grid = cheb_points(density.interval, m)
    x, _ = _invert_cdf(vals[None], grid.interval, np.array([float(u)]))
    return float(x[0])


def sample_eigenvalues(basis: WeightedOPBasis, rng=None) -> np.ndarray:
    """One draw of the ``n`` eigenvalues, sorted ascending."""
    U = _as_generator(rng).random(basis.n)[None]
    out, _ = _sample_block(basis.values, basis.grid, U)
    return out[0]


def sample_eigenvalues_batch(basis: WeightedOPBasis, samples: int, seed: int = 0,
                             threads: int = 1, return_mass_error: bool = False,
                             sub: int | None = None):
    """``samples`` independent draws, shape ``(samples, n)``, rows sorted.

    Draw ``i`` uses stream ``i`` of :class:`SeededRng` ``(seed)``, and draws
    are processed in fixed chunks, so the output does not depend on ``threads``.
    ``sub`` switches every draw to the given sub-stream.
    """
    if int(samples) != samples or samples < 1:
        raise InvalidArgumentError(f"samples must be a positive integer, got {samples}",
                                   field="samples")
    if int(threads) != threads or threads < 1:
        raise InvalidArgumentError(f"threads must be a positive integer, got {threads}",
                                   field="threads")
    samples = int(samples)
    rng = SeededRng(seed)
    U = np.stack([rng.stream(i, sub).random(basis.n) for i in range(samples)])
    starts = range(0, samples, CHUNK_SIZE)

    def run(s):
        return _sample_block(basis.values, basis.grid, U[s:s + CHUNK_SIZE])

    if threads == 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(run, starts))
    out = np.concatenate([p[0] for p in parts])
    if return_mass_error:
        return out, max(p[1] for p in parts)
    return out


def joint_density_identity_check(basis: WeightedOPBasis, points) -> tuple[float, float]:
    """``(prod_j |q_j(x_j)|^2, det[K_n(x_i, x_j)])`` for the chain deflated at ``points``.

    ``points[0]`` plays the role of ``r_n``. The two numbers agree for any
    choice of kernel basis, which makes this the sampler's correctness check.
    """
    pts = np.asarray(points, dtype=float).reshape(-1)
    if pts.size != basis.n:
        raise InvalidArgumentError(f"need {basis.n} points, got {pts.size}", field="points")
    phi = np.atleast_2d(basis(pts))
    K = phi.T @ phi
    det = float(np.linalg.det(K))
    state = initial_state(basis)
    prod = 1.0
    for j, x in enumerate(pts):
        f = state(x)[:, 0]
        nf2 = float(f @ f)
        prod *= nf2
        if j < pts.size - 1:
            if math.sqrt(nf2) < MIN_NORM:
                return 0.0, det
            state = deflate(state, x)
    return prod, det
