"""Controller-side stator flux, torque, and sector estimation.

Flux is reconstructed by open-loop voltage-model integration,

    lambda_alpha = integral(v_alpha - rs * i_alpha) dt
    lambda_beta  = integral(v_beta  - rs * i_beta ) dt

discretized as forward Euler at the control period.  No drift-compensation
filter is applied; with exact simulated signals the drift over desk-scale
runs is negligible.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .frames import SpaceVector

SECTOR_WIDTH = math.pi / 3.0


class ZeroFluxError(ValueError):
    """Sector is undefined at the origin; callers keep the previous sector."""


class EstimatorState(NamedTuple):
    """Running flux integral and the stator resistance used in it."""

    integrated_flux: SpaceVector
    rs_used: float


class FluxEstimate(NamedTuple):
    """Flux vector with derived magnitude, angle, and switching sector."""

    flux: SpaceVector
    magnitude: float
    angle: float
    sector: int


def update_flux(state: EstimatorState, v_s: SpaceVector, i_s: SpaceVector,
                dt: float) -> EstimatorState:
    """One forward-Euler step of the voltage-model integral."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    rs = state.rs_used
    fa, fb = state.integrated_flux
    return EstimatorState(
        SpaceVector(fa + (v_s.alpha - rs * i_s.alpha) * dt,
                    fb + (v_s.beta - rs * i_s.beta) * dt),
        rs)


def flux_magnitude(flux: SpaceVector) -> float:
    """Euclidean norm of the flux vector [Wb]."""
    return math.hypot(flux.alpha, flux.beta)


def estimate_torque(flux: SpaceVector, i_s: SpaceVector, pole_pairs: int) -> float:
    """T_e = (3/2) p (lambda_alpha i_beta - lambda_beta i_alpha) [N m]."""
    return 1.5 * pole_pairs * (flux.alpha * i_s.beta - flux.beta * i_s.alpha)


def flux_angle(flux: SpaceVector) -> float:
    """Four-quadrant flux angle in (-pi, pi]."""
    return math.atan2(flux.beta, flux.alpha)


def flux_sector(flux: SpaceVector) -> int:
    """Switching sector 1..6 of the flux vector.

    Sector k spans [(2k-3)*30deg, (2k-1)*30deg), half-open, so sector 1 is
    centered on 0deg.  Raises ZeroFluxError at the origin.
    """
    if flux.alpha == 0.0 and flux.beta == 0.0:
        raise ZeroFluxError("flux sector undefined for zero flux")
    theta = math.atan2(flux.beta, flux.alpha)
    return int(math.floor((theta + 0.5 * SECTOR_WIDTH) / SECTOR_WIDTH)) % 6 + 1


def flux_estimate(flux: SpaceVector) -> FluxEstimate:
    """Bundle a flux vector with its magnitude, angle, and sector."""
    return FluxEstimate(flux, flux_magnitude(flux), flux_angle(flux),
                        flux_sector(flux))
