"""Resonance extraction from a reflection sweep.

Pipeline: 5-point moving average (reflect padding), global minimum of the
smoothed trace with the lowest-frequency tie break, then a 3-point parabolic
refinement on the raw samples around that index. Dip depth is measured
against the median of the smoothed sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridTooCoarse, NoResonance
from .readout import S11Sweep

SMOOTHING_WINDOW = 5
MIN_DEPTH_DB = 3.0


@dataclass(frozen=True)
class ResonanceEstimate:
    """Dip location and quality figures.

    depth_db is positive (magnitude of the dip below the baseline).
    refined is False when the parabolic step was rejected and the estimate
    fell back to the grid point.
    """

    f0_hat: float
    depth_db: float
    snr_estimate: float
    refined: bool


def _smooth(mags: np.ndarray) -> np.ndarray:
    padded = np.pad(mags, SMOOTHING_WINDOW // 2, mode="reflect")
    kernel = np.full(SMOOTHING_WINDOW, 1.0 / SMOOTHING_WINDOW)
    return np.convolve(padded, kernel, mode="valid")


def extract_resonance(sweep: S11Sweep,
                      min_depth_db: float = MIN_DEPTH_DB) -> ResonanceEstimate:
    """Locate the reflection dip.

    Raises NoResonance when the dip does not clear min_depth_db below the
    sweep median, GridTooCoarse when the minimum sits on a sweep endpoint,
    and DomainError for sweeps shorter than the smoothing window.
    """
    if sweep.n_points < SMOOTHING_WINDOW:
        raise DomainError(
            f"need at least {SMOOTHING_WINDOW} points, got {sweep.n_points}")
    if min_depth_db <= 0:
        raise DomainError(f"min_depth_db must be > 0, got {min_depth_db}")
    raw = sweep.magnitude_db
    smoothed = _smooth(raw)
    i = int(np.argmin(smoothed))  # argmin takes the first (lowest) frequency
    baseline = float(np.median(smoothed))
    depth = baseline - float(smoothed[i])
    if depth < min_depth_db:
        raise NoResonance(
            f"dip depth {depth:.2f} dB below threshold {min_depth_db:.2f} dB")
    if i == 0 or i == sweep.n_points - 1:
        raise GridTooCoarse("dip sits on a sweep endpoint; widen the grid")

    step = (sweep.f_stop - sweep.f_start) / (sweep.n_points - 1)
    y0, y1, y2 = float(raw[i - 1]), float(raw[i]), float(raw[i + 1])
    denom = y0 - 2.0 * y1 + y2
    refined = False
    delta = 0.0
    if denom > 0:
        delta = 0.5 * (y0 - y2) / denom
        if abs(delta) <= 1.0:
            refined = True
        else:
            delta = 0.0
    f0_hat = sweep.f_start + (i + delta) * step

    residual = raw - smoothed
    mad = float(np.median(np.abs(residual - np.median(residual))))
    sigma_hat = max(1.4826 * mad, 1e-12)
    return ResonanceEstimate(
        f0_hat=float(f0_hat),
        depth_db=depth,
        snr_estimate=depth / sigma_hat,
        refined=refined,
    )
