"""Post-processing of simulation records: torque-ripple and flux statistics.

Ripple is quantified as RMS about the window mean (peak-to-peak reported
alongside).  Comparison windows exclude the first 100 ms after any
reference or load step so only steady-state ripple is measured.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SETTLE_TIME = 0.1


@dataclass(frozen=True)
class RippleReport:
    """Torque and flux statistics over one time window."""

    window: tuple[float, float]
    torque_mean: float
    torque_ripple_rms: float
    torque_ripple_peak_to_peak: float
    flux_ref_mean: float
    flux_mag_rms_error: float


@dataclass(frozen=True)
class ComparisonSummary:
    """Fuzzy-vs-conventional ripple comparison over a shared window."""

    conventional: RippleReport
    fuzzy: RippleReport
    ratio: float
    reduction_percent: float
    ratio_undefined: bool


def torque_ripple(records: Sequence, t0: float, t1: float) -> RippleReport:
    """Ripple statistics of the plant torque over records with t0 <= t < t1."""
    if not t0 < t1:
        raise ValueError(f"bad window: [{t0}, {t1})")
    rows = [r for r in records if t0 <= r.time < t1]
    if len(rows) < 2:
        raise ValueError(f"window [{t0}, {t1}) holds {len(rows)} records, need >= 2")
    torque = np.array([r.torque_plant for r in rows])
    flux_err = np.array([r.flux_mag_est - r.flux_ref for r in rows])
    mean = float(torque.mean())
    return RippleReport(
        window=(t0, t1),
        torque_mean=mean,
        torque_ripple_rms=float(np.sqrt(np.mean((torque - mean) ** 2))),
        torque_ripple_peak_to_peak=float(torque.max() - torque.min()),
        flux_ref_mean=float(np.mean([r.flux_ref for r in rows])),
        flux_mag_rms_error=float(np.sqrt(np.mean(flux_err ** 2))),
    )


def compare(conventional: RippleReport, fuzzy: RippleReport) -> ComparisonSummary:
    """Ripple ratio fuzzy/conventional; flags the ratio when undefined."""
    if conventional.window != fuzzy.window:
        raise ValueError(
            f"window mismatch: {conventional.window} vs {fuzzy.window}")
    if conventional.torque_ripple_rms == 0.0:
        return ComparisonSummary(conventional, fuzzy, float("nan"), float("nan"), True)
    ratio = fuzzy.torque_ripple_rms / conventional.torque_ripple_rms
    return ComparisonSummary(conventional, fuzzy, ratio, (1.0 - ratio) * 100.0, False)


def steady_windows(step_times: Sequence[float], duration: float,
                   settle: float = SETTLE_TIME) -> list[tuple[float, float]]:
    """Steady-state windows between profile steps.

    Each window starts ``settle`` after a step (t=0 counts as a step, which
    also skips the magnetization startup) and ends at the next step.
    """
    times = sorted({0.0, *(t for t in step_times if 0.0 <= t < duration)})
    edges = times + [duration]
    return [(t + settle, t_next) for t, t_next in zip(edges, edges[1:])
            if t + settle < t_next]
