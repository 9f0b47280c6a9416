"""Full Hermitian matrices from unitary invariant ensembles.

A draw is ``V diag(r) V^*`` with ``r`` from the eigenvalue sampler and ``V``
Haar distributed. Also provides the independent-entry GUE, a Hermitian
eigensolver, sums of independent ensembles and matrix file formats.

GUE here means the weight ``exp(-x^2)`` on eigenvalues, i.e. the density
``exp(-Tr H^2)``: diagonal entries have variance 1/2 and the real and
imaginary parts of off-diagonal entries variance 1/4.
"""

from __future__ import annotations

import csv
import json
import math
import struct

import numpy as np

from .dpp import SeededRng, _as_generator, sample_eigenvalues, sample_eigenvalues_batch
from .exceptions import InvalidArgumentError, NoConvergenceError
from .orthopoly import WeightedOPBasis, WeightSpec, build_basis

__all__ = [
    "haar_unitary",
    "direct_gue",
    "sample_uie_matrix",
    "sample_uie_matrices",
    "hermitian_eigenvalues",
    "hermitian_eigh",
    "sample_sum",
    "sample_sum_batch",
    "check_hermitian",
    "check_unitary",
    "write_matrices_binary",
    "read_matrices_binary",
    "write_matrices_csv",
    "write_matrices_json",
]

HERMITIAN_TOL = 1e-13
UNITARY_TOL = 1e-12
MAGIC = b"UIEM"
_MAX_QL_SWEEPS = 60


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}", field="n")
    return int(n)


def check_hermitian(M, tol=HERMITIAN_TOL):
    """Raise unless ``M`` is square, conjugate symmetric and has a real diagonal."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {M.shape}", field="M")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.conj().T).max(initial=0.0) > tol * scale:
        raise InvalidArgumentError("matrix is not Hermitian", field="M")
    if np.abs(np.imag(np.diag(M))).max(initial=0.0) > tol * scale:
        raise InvalidArgumentError("Hermitian matrix has a non-real diagonal", field="M")
    return M


def check_unitary(U, tol=UNITARY_TOL):
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {U.shape}", field="U")
    if np.abs(U @ U.conj().T - np.eye(U.shape[0])).max() > tol:
        raise InvalidArgumentError("matrix is not unitary", field="U")
    return U


# ---------------------------------------------------------------------------
# random matrices

def haar_unitary(n, rng=None):
    """Haar-distributed ``n x n`` unitary from the QR factors of a complex Ginibre matrix.

    Plain QR is not Haar; column ``j`` of ``Q`` is multiplied by
    ``conj(R_jj) / |R_jj|`` to fix the phases.
    """
    n = _check_n(n)
    rng = _as_generator(rng)
    while True:
        Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
        Q, R = np.linalg.qr(Z)
        d = np.diag(R)
        if np.abs(d).min() > 1e-10 * np.abs(d).max():
            break
    return Q * (d.conj() / np.abs(d))


def direct_gue(n, rng=None):
    """GUE matrix for the weight ``exp(-x^2)`` from independent Gaussian entries."""
    n = _check_n(n)
    rng = _as_generator(rng)
    s = math.sqrt(0.5)
    A = s * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    H = 0.5 * (A + A.conj().T)
    H[np.diag_indices(n)] = H.diagonal().real
    return H


def _assemble(r, V):
    M = (V * r) @ V.conj().T
    M = 0.5 * (M + M.conj().T)
    M[np.diag_indices(len(r))] = M.diagonal().real
    return M


def sample_uie_matrix(basis: WeightedOPBasis, rng=None, return_eigenvalues=False):
    """One matrix ``V diag(r) V^*``; the eigenvalue draw ``r`` is returned on request."""
    rng = _as_generator(rng)
    r = sample_eigenvalues(basis, rng)
    M = _assemble(r, haar_unitary(basis.n, rng))
    return (M, r) if return_eigenvalues else M


def sample_uie_matrices(basis: WeightedOPBasis, samples: int, seed: int = 0, threads: int = 1):
    """``samples`` matrices, shape ``(samples, n, n)``, plus their eigenvalue draws.

    Draw ``i`` reuses the eigenvalues of ``sample_eigenvalues_batch`` row ``i``
    and takes its unitary from sub-stream 1 of draw ``i``.
    """
    R = sample_eigenvalues_batch(basis, samples, seed=seed, threads=threads)
    rng = SeededRng(seed)
    M = np.stack([_assemble(r, haar_unitary(basis.n, rng.stream(i, 1)))
                  for i, r in enumerate(R)])
    return M, R


# ---------------------------------------------------------------------------
# eigensolver

def _tridiagonalize(A, want_q):
    """Householder reduction ``A = Q T Q^*`` with ``T`` real symmetric tridiagonal.

    Returns ``(d, e, Q)`` with ``e[i] = T[i + 1, i] >= 0``.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    vs = []
    sub = np.zeros(n, dtype=complex)
    for k in range(n - 2):
        x = A[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            vs.append(None)
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        alpha = -phase * nx
        v = x
        v[0] -= alpha
        v /= np.linalg.norm(v)
        vs.append(v)
        B = A[k + 1:, k + 1:]
        p = B @ v
        w = p - np.vdot(v, p).real * v
        B -= 2.0 * (np.outer(v, w.conj()) + np.outer(w, v.conj()))
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
        A[k + 1, k] = alpha
        A[k, k + 1] = np.conj(alpha)
    d = A.diagonal().real.copy()
    if n > 1:
        sub[:n - 1] = A.diagonal(-1)
    # diagonal unitary scaling makes the off-diagonal real and nonnegative
    phases = np.ones(n, dtype=complex)
    for k in range(n - 1):
        mag = abs(sub[k])
        phases[k + 1] = phases[k] * (sub[k] / mag if mag > 0 else 1.0)
    e = np.abs(sub)
    e[-1] = 0.0
    if not want_q:
        return d, e, None
    Q = np.eye(n, dtype=complex)
    for k in range(len(vs) - 1, -1, -1):
        v = vs[k]
        if v is None:
            continue
        blk = Q[k + 1:, k + 1:]
        blk -= 2.0 * np.outer(v, v.conj() @ blk)
    return d, e, Q * phases


def _tridiagonal_ql(d, e, Z=None):
    """Implicit-shift QL on the symmetric tridiagonal ``(d, e)``, in place.

    ``e[i]`` couples rows ``i`` and ``i + 1``. Rotations are accumulated
    into the columns of ``Z`` when given.
    """
    n = len(d)
    d = [float(v) for v in d]
    e = [float(v) for v in e]
    eps = np.finfo(float).eps
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_QL_SWEEPS:
                raise NoConvergenceError("tridiagonal QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi = Z[:, i].copy()
                    Z[:, i] = c * zi - s * Z[:, i + 1]
                    Z[:, i + 1] = s * zi + c * Z[:, i + 1]
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d)


def hermitian_eigenvalues(M, check=True):
    """Ascending eigenvalues of a Hermitian matrix (Householder tridiagonalization + QL)."""
    if check:
        check_hermitian(M)
    M = np.asarray(M)
    if M.shape[0] == 1:
        return np.array([float(M[0, 0].real)])
    d, e, _ = _tridiagonalize(M, want_q=False)
    return np.sort(_tridiagonal_ql(d, e))


def hermitian_eigh(M, check=True):
    """Ascending eigenvalues and unitary eigenvector matrix (columns) of ``M``."""
    if check:
        check_hermitian(M)
    M = np.asarray(M)
    n = M.shape[0]
    if n == 1:
        return np.array([float(M[0, 0].real)]), np.ones((1, 1), dtype=complex)
    d, e, Q = _tridiagonalize(M, want_q=True)
    Z = np.eye(n)
    lam = _tridiagonal_ql(d, e, Z)
    order = np.argsort(lam)
    return lam[order], (Q @ Z)[:, order]


# ---------------------------------------------------------------------------
# addition of ensembles

def sample_sum(bases, rng=None, n=None):
    """Eigenvalues of ``H_1 + ... + H_k`` for independent draws ``H_i``.

    Items of ``bases`` are :class:`WeightedOPBasis` objects or
    :class:`WeightSpec` objects, the latter built at size ``n``.
    """
    built = _resolve_bases(bases, n)
    rng = _as_generator(rng)
    H = sum(sample_uie_matrix(b, rng) for b in built)
    return hermitian_eigenvalues(H, check=False)


def _resolve_bases(bases, n):
    bases = list(bases)
    if not bases:
        raise InvalidArgumentError("need at least one ensemble", field="bases")
    built = []
    for b in bases:
        if isinstance(b, WeightSpec):
            if n is None:
                raise InvalidArgumentError("n is required for weight specifications", field="n")
            b = build_basis(b, n)
        built.append(b)
    sizes = {b.n for b in built}
    if len(sizes) != 1 or (n is not None and sizes != {n}):
        raise InvalidArgumentError(f"ensembles have mismatched sizes {sorted(sizes)}",
                                   field="bases")
    return built


def sample_sum_batch(bases, samples: int, seed: int = 0, threads: int = 1, n=None):
    """``samples`` eigenvalue draws of ``H_1 + ... + H_k``, shape ``(samples, n)``.

    Term ``t`` of draw ``i`` takes its eigenvalues from sub-stream ``2t + 2``
    and its unitary from sub-stream ``2t + 3`` of draw ``i``.
    """
    built = _resolve_bases(bases, n)
    rng = SeededRng(seed)
    R = [sample_eigenvalues_batch(b, samples, seed=seed, threads=threads, sub=2 * t + 2)
         for t, b in enumerate(built)]
    out = np.empty((int(samples), built[0].n))
    for i in range(int(samples)):
        H = sum(_assemble(R[t][i], haar_unitary(b.n, rng.stream(i, 2 * t + 3)))
                for t, b in enumerate(built))
        out[i] = hermitian_eigenvalues(H, check=False)
    return out


# ---------------------------------------------------------------------------
# file formats

def write_matrices_binary(path, matrices):
    """Write matrices in the binary layout read by :func:`read_matrices_binary`.

    Layout (little endian): ``b"UIEM"``, uint32 version 1, uint64 count,
    uint64 n, then per matrix ``n*n`` column-major entries stored as float64
    ``(real, imag)`` pairs.
    """
    M = np.asarray(matrices, dtype=np.complex128)
    if M.ndim == 2:
        M = M[None]
    count, n = M.shape[0], M.shape[1]
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<IQQ", 1, count, n))
        for A in M:
            fh.write(np.asfortranarray(A).ravel(order="F").astype("<c16").tobytes())


def read_matrices_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(24)
        if head[:4] != MAGIC:
            raise InvalidArgumentError("not a matrix file", field="path")
        version, count, n = struct.unpack("<IQQ", head[4:])
        if version != 1:
            raise InvalidArgumentError(f"unsupported matrix file version {version}",
                                       field="path")
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != count * n * n:
        raise InvalidArgumentError("truncated matrix file", field="path")
    return data.reshape(count, n, n).transpose(0, 2, 1).copy()


def write_matrices_csv(fh, matrices):
    """One row per entry: ``sample,row,col,real,imag``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["sample", "row", "col", "real", "imag"])
    for s, A in enumerate(np.asarray(matrices)):
        for i in range(A.shape[0]):
            for j in range(A.shape[1]):
                w.writerow([s, i, j, repr(float(A[i, j].real)), repr(float(A[i, j].imag))])


def write_matrices_json(fh, matrices, extra=None):
    """JSON object with ``matrices[s][i][j] = [real, imag]``."""
    M = np.asarray(matrices)
    payload = dict(extra or {})
    payload["n"] = int(M.shape[1])
    payload["matrices"] = np.stack([M.real, M.imag], axis=-1).tolist()
    json.dump(payload, fh)
