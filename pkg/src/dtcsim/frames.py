"""Coordinate transforms between three-phase a/b/c and the stationary alpha-beta(-0) frame.

The amplitude-invariant (2/3-scaled) transform is used throughout.  Note the
beta row is [0, -sqrt(3)/2, +sqrt(3)/2], i.e. mirrored with respect to the
most common textbook convention; the switching-table geometry in
``dtc_core`` is derived consistently with this choice.
"""

from __future__ import annotations

import math
from typing import NamedTuple

SQRT3 = math.sqrt(3.0)
TWO_THIRDS = 2.0 / 3.0


class PhaseTriple(NamedTuple):
    """Instantaneous three-phase quantity (currents or voltages)."""

    a: float
    b: float
    c: float


class AlphaBetaZero(NamedTuple):
    """Stationary-frame image of a three-phase quantity, zero component included."""

    alpha: float
    beta: float
    zero: float


class SpaceVector(NamedTuple):
    """Alpha-beta pair (current, voltage, or flux)."""

    alpha: float
    beta: float


def clarke(x: PhaseTriple) -> AlphaBetaZero:
    """Transform a/b/c quantities to the alpha-beta-0 frame.

    Amplitude-invariant scaling: a balanced unit-amplitude triple maps to a
    unit-magnitude space vector.
    """
    a, b, c = x
    alpha = TWO_THIRDS * (a - 0.5 * b - 0.5 * c)
    beta = (c - b) / SQRT3
    zero = (a + b + c) / 3.0
    return AlphaBetaZero(alpha, beta, zero)


def inverse_clarke(x: AlphaBetaZero) -> PhaseTriple:
    """Exact algebraic inverse of ``clarke``."""
    alpha, beta, zero = x
    a = alpha + zero
    b = -0.5 * alpha - 0.5 * SQRT3 * beta + zero
    c = -0.5 * alpha + 0.5 * SQRT3 * beta + zero
    return PhaseTriple(a, b, c)


def space_vector(x: AlphaBetaZero) -> SpaceVector:
    """Drop the zero component."""
    return SpaceVector(x.alpha, x.beta)
