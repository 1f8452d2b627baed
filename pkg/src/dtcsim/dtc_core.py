"""Conventional DTC decision layer.

Two-level flux hysteresis, three-level torque hysteresis with zero return,
and the sector-indexed switching table.  The table is built from the
geometry of the inverter states in the alpha-beta frame: with the
amplitude-invariant transform used by ``frames`` (mirrored beta row), the
six active switch states sit counterclockwise at 0, 60, ..., 300 degrees in
the order below.  Selecting the vector one sector ahead raises both flux
and torque, two ahead lowers flux while raising torque, and mirrored for
negative torque demand.
"""

from __future__ import annotations

from typing import NamedTuple

from .machine import SwitchState

# Active inverter states ordered counterclockwise by the angle of their
# stator voltage under the frames.clarke convention; index k sits at
# (k * 60) degrees.  Verified against that transform by the test suite.
ACTIVE_VECTORS: tuple[SwitchState, ...] = (
    SwitchState(1, 0, 0),   # 0 deg
    SwitchState(1, 0, 1),   # 60 deg
    SwitchState(0, 0, 1),   # 120 deg
    SwitchState(0, 1, 1),   # 180 deg
    SwitchState(0, 1, 0),   # 240 deg
    SwitchState(1, 1, 0),   # 300 deg
)

ZERO_VECTORS: tuple[SwitchState, ...] = (SwitchState(0, 0, 0), SwitchState(1, 1, 1))

# Offset (in sectors) of the selected active vector relative to the flux
# sector, indexed by (flux_cmd, torque_cmd sign).
_OFFSETS = {
    (1, +1): +1,
    (1, -1): -1,
    (0, +1): +2,
    (0, -1): -2,
}


class HysteresisConfig(NamedTuple):
    """Half-widths of the flux and torque hysteresis bands."""

    flux_band: float
    torque_band: float


class ComparatorState(NamedTuple):
    flux_out: int      # {0, 1}
    torque_out: int    # {-1, 0, +1}


def flux_comparator(error: float, band: float, prev: int) -> int:
    """Two-level flux comparator; latches inside the band.

    error = flux reference minus estimated flux magnitude.
    """
    if error > band:
        return 1
    if error < -band:
        return 0
    return prev


def torque_comparator(error: float, band: float, prev: int) -> int:
    """Three-level torque comparator with zero return.

    Saturated outputs hold until the error crosses zero, at which point the
    comparator returns 0 and a zero vector is applied; this keeps the mean
    torque centered on the reference.
    """
    if error > band:
        return 1
    if error < -band:
        return -1
    if prev == 1:
        return 1 if error > 0 else 0
    if prev == -1:
        return -1 if error < 0 else 0
    return 0


def select_vector(flux_cmd: int, torque_cmd: int, sector: int,
                  prev: SwitchState) -> SwitchState:
    """Pick the inverter state for the given comparator outputs and sector.

    Zero torque demand selects whichever zero vector changes fewer inverter
    legs relative to ``prev``.
    """
    if not 1 <= sector <= 6:
        raise ValueError(f"sector must be in 1..6, got {sector!r}")
    if torque_cmd == 0:
        v0, v7 = ZERO_VECTORS
        flips0 = (prev.sa != 0) + (prev.sb != 0) + (prev.sc != 0)
        return v0 if flips0 <= 3 - flips0 else v7
    return ACTIVE_VECTORS[(sector - 1 + _OFFSETS[(flux_cmd, torque_cmd)]) % 6]
