"""Named ensembles and the potential ``V = Q / n`` behind each weight."""

from __future__ import annotations

import numpy as np

from .eqmeasure import HIGHER_ORDER_POTENTIAL, cosh_potential, equilibrium_measure
from .exceptions import InvalidArgumentError
from .orthopoly import WeightSpec

__all__ = ["PRESETS", "preset", "equilibrium_potential", "equilibrium_for"]

_HO_FLOATS = tuple(float(c) for c in HIGHER_ORDER_POTENTIAL)

PRESETS = {
    "gue": WeightSpec("scaled-poly", (0, 0, 1)),
    "quartic": WeightSpec("scaled-poly", (0, 0, 0, 0, 1)),
    "higher-order": WeightSpec("scaled-poly", _HO_FLOATS),
    "cosh": WeightSpec("cosh"),
    "hermite": WeightSpec("hermite"),
}


def preset(name: str) -> WeightSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}",
            field="preset") from None


def equilibrium_potential(weight: WeightSpec, n: int):
    """``(V, dV)`` arguments for :func:`equilibrium_measure` with ``V = Q / n``.

    Scaled polynomials give ``V`` directly and the higher-order potential is
    swapped for its exact rational coefficients.
    """
    if weight.kind == "scaled-poly":
        c = np.zeros(max(len(weight.coeffs), 5))
        c[:len(weight.coeffs)] = weight.coeffs
        if len(weight.coeffs) == 5 and np.allclose(c, _HO_FLOATS, rtol=0, atol=1e-12):
            return HIGHER_ORDER_POTENTIAL, None
        return weight.coeffs, None
    if weight.kind == "poly":
        return tuple(q / n for q in weight.coeffs), None
    if weight.kind == "hermite":
        return (0.0, 0.0, 1.0 / n), None
    if weight.kind == "cosh":
        return cosh_potential(n)
    raise InvalidArgumentError(
        f"no equilibrium measure for {weight.kind} weights (support is not the real line)",
        field="weight")


def equilibrium_for(weight: WeightSpec, n: int):
    V, dV = equilibrium_potential(weight, n)
    return equilibrium_measure(V, dV=dV)
