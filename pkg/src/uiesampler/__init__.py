"""Sampling unitary invariant random matrix ensembles.

Weighted orthogonal polynomials are built as Chebyshev interpolants and the
eigenvalues are drawn from the associated determinantal point process.
"""

from .cheb import ChebSeries, Interval, adaptive_fit
from .dpp import SeededRng, sample_eigenvalues, sample_eigenvalues_batch
from .ensemble import direct_gue, haar_unitary, sample_sum, sample_uie_matrices, sample_uie_matrix
from .eqmeasure import EquilibriumMeasure, edge_constant, equilibrium_measure
from .estimators import BulkScaler, EdgeScaler, UnitaryEnsembleSampler
from .exceptions import InvalidArgumentError, UIEError
from .orthopoly import WeightSpec, WeightedOPBasis, build_basis, kernel_diagonal
from .presets import PRESETS, equilibrium_for
from .stats import EmpiricalCDF, ks_distance, ks_report

__version__ = "0.1.0"

__all__ = [
    "ChebSeries", "Interval", "adaptive_fit",
    "SeededRng", "sample_eigenvalues", "sample_eigenvalues_batch",
    "direct_gue", "haar_unitary", "sample_sum", "sample_uie_matrices", "sample_uie_matrix",
    "EquilibriumMeasure", "edge_constant", "equilibrium_measure",
    "BulkScaler", "EdgeScaler", "UnitaryEnsembleSampler",
    "InvalidArgumentError", "UIEError",
    "WeightSpec", "WeightedOPBasis", "build_basis", "kernel_diagonal",
    "PRESETS", "equilibrium_for",
    "EmpiricalCDF", "ks_distance", "ks_report",
]
