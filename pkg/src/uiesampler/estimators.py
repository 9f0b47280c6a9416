"""Estimator-style wrappers around the sampler and the scaling statistics.

``UnitaryEnsembleSampler`` is a generative model: ``fit`` builds the
weighted orthonormal basis, ``sample`` draws sorted spectra and
``score_samples`` returns the log joint eigenvalue density. The scalers
map spectra (rows of ``n`` eigenvalues) to one rescaled statistic per row.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array, check_random_state
from sklearn.utils.validation import check_is_fitted

from .dpp import sample_eigenvalues_batch
from .ensemble import sample_uie_matrices
from .exceptions import InvalidArgumentError
from .orthopoly import WeightSpec, build_basis
from .presets import equilibrium_for, preset
from .stats import bulk_statistic, edge_statistic

__all__ = ["UnitaryEnsembleSampler", "EdgeScaler", "BulkScaler"]

MAX_SEED = 2**63


def _resolve_weight(weight, preset_name):
    if weight is None:
        return preset(preset_name)
    if isinstance(weight, WeightSpec):
        return weight
    if isinstance(weight, dict):
        return WeightSpec.from_dict(weight)
    if isinstance(weight, str):
        return WeightSpec.from_json(weight)
    raise InvalidArgumentError(f"cannot use {type(weight).__name__} as a weight", field="weight")


def _seed(random_state):
    """Integer seeds pass through so that results match the functional API."""
    if isinstance(random_state, (int, np.integer)) and not isinstance(random_state, bool):
        if random_state < 0:
            raise InvalidArgumentError("random_state must be non-negative", field="random_state")
        return int(random_state)
    return int(check_random_state(random_state).randint(MAX_SEED, dtype=np.int64))


class UnitaryEnsembleSampler(BaseEstimator):
    """Eigenvalue and matrix sampler for the ensemble ``e^{-Tr Q(M)} dM``.

    Parameters
    ----------
    preset : name from :data:`uiesampler.presets.PRESETS`, used when ``weight`` is None
    weight : WeightSpec, dict or JSON string
    n : matrix size
    random_state : int, None or RandomState; integers give reproducible draws
    threads : worker threads; the draws do not depend on it
    """

    def __init__(self, preset="gue", weight=None, n=10, random_state=0, threads=1):
        self.preset = preset
        self.weight = weight
        self.n = n
        self.random_state = random_state
        self.threads = threads

    def fit(self, X=None, y=None):
        """Build the basis. ``X`` is ignored; the model has no free parameters."""
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n}", field="n")
        self.weight_ = _resolve_weight(self.weight, self.preset)
        self.basis_ = build_basis(self.weight_, int(self.n))
        self.n_features_in_ = int(self.n)
        self._draws = 0
        return self

    def _next_seed(self):
        # integer seeds are used as given on every call; other states advance
        if isinstance(self.random_state, (int, np.integer)):
            return _seed(self.random_state)
        if not hasattr(self, "_rng"):
            self._rng = check_random_state(self.random_state)
        return _seed(self._rng)

    def sample(self, n_samples=1):
        """Sorted eigenvalue draws, shape ``(n_samples, n)``."""
        check_is_fitted(self, "basis_")
        return sample_eigenvalues_batch(self.basis_, n_samples, seed=self._next_seed(),
                                        threads=self.threads)

    def sample_matrices(self, n_samples=1):
        """``(matrices, eigenvalues)`` with shapes ``(n_samples, n, n)`` and ``(n_samples, n)``."""
        check_is_fitted(self, "basis_")
        return sample_uie_matrices(self.basis_, n_samples, seed=self._next_seed(),
                                   threads=self.threads)

    def score_samples(self, X):
        """Log joint density of each row as an unordered point configuration.

        ``log det[K_n(x_i, x_j)] - log n!``; points outside the basis
        interval, where the weight is negligible, give ``-inf``.
        """
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(
                f"X has {X.shape[1]} columns, expected {self.n_features_in_}", field="X")
        iv = self.basis_.interval
        out = np.full(X.shape[0], -np.inf)
        lgf = math.lgamma(self.n_features_in_ + 1)
        for i, row in enumerate(X):
            if row.min() < iv.a or row.max() > iv.b:
                continue
            sign, logdet = np.linalg.slogdet(np.atleast_2d(self.basis_(row)))
            if sign != 0:
                out[i] = 2.0 * logdet - lgf
        return out

    def score(self, X, y=None):
        """Mean log density over the rows of ``X``."""
        return float(np.mean(self.score_samples(X)))


class _Scaler(TransformerMixin, BaseEstimator):
    def __init__(self, preset="gue", weight=None):
        self.preset = preset
        self.weight = weight

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.weight_ = _resolve_weight(self.weight, self.preset)
        self.n_features_in_ = X.shape[1]
        self.measure_ = equilibrium_for(self.weight_, self.n_features_in_)
        return self

    def _check(self, X):
        check_is_fitted(self, "measure_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(
                f"X has {X.shape[1]} columns, expected {self.n_features_in_}", field="X")
        return X


class EdgeScaler(_Scaler):
    """Rescaled largest eigenvalue ``c n^p (lambda_max - b_V)`` per row, shape ``(samples, 1)``.

    ``higher_order="auto"`` switches to the ``n^{2/7}`` scaling when the
    potential is the higher-order one.
    """

    def __init__(self, preset="gue", weight=None, constant="sqrt", higher_order="auto"):
        super().__init__(preset, weight)
        self.constant = constant
        self.higher_order = higher_order

    def transform(self, X):
        X = self._check(X)
        ho = self.measure_.is_higher_order if self.higher_order == "auto" else self.higher_order
        s = edge_statistic(X, self.measure_, self.n_features_in_, higher_order=bool(ho),
                           constant=self.constant)
        return s[:, None]


class BulkScaler(_Scaler):
    """``n psi(0) min_j |lambda_j|`` per row, shape ``(samples, 1)``."""

    def transform(self, X):
        X = self._check(X)
        return bulk_statistic(X, self.measure_, self.n_features_in_)[:, None]
