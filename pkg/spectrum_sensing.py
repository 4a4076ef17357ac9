#!/usr/bin/env python3
"""
Energy-detector spectrum sensing and the sense -> mask step of the cognition
loop.

energy_detect() aggregates an averaged (Welch) or peak-hold (spectrogram)
periodogram into bin_hz-wide RSSI bins over [-fs/2, fs/2), flags bins more
than threshold_db_over_floor above the noise floor and merges neighbours into
occupied bands.

sense_to_mask() maps baseband frequencies onto the design grid in DFT bin
order: a band at offset f from the radar center lands at f/B when f >= 0 and
at 1 + f/B when f < 0. The lower half of the radar band is therefore the
normalized interval [0.5, 1].
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import spectrogram, welch

from radar_utils import DegenerateMaskError, ParameterError, power_db, write_csv, read_csv
from spectral_mask import SpectralMask, band_to_bins

logger = logging.getLogger(__name__)

Band = Tuple[float, float]
SENSING_MODES = ("average", "peak")


def noise_density_db(noise_power_db: float, sample_rate_hz: float) -> float:
    """Per-Hz level of white noise with the given per-sample power (for noise_floor_db)."""
    return noise_power_db - 10.0 * np.log10(sample_rate_hz)


def rssi_bins(signal: np.ndarray, sample_rate_hz: float, bin_hz: float, mode: str = "average",
              nperseg: int = 1024) -> Tuple[np.ndarray, np.ndarray]:
    """(lower bin edges in Hz, mean power density per bin in dB)."""
    if bin_hz <= 0 or bin_hz > sample_rate_hz / 2:
        raise ParameterError(f"bin_hz must lie in (0, {sample_rate_hz / 2:g}], got {bin_hz:g}")
    if mode not in SENSING_MODES:
        raise ParameterError(f"mode must be one of {SENSING_MODES}, got {mode!r}")
    x = np.asarray(signal, dtype=complex).ravel()
    if x.size < 2:
        raise ParameterError("need at least 2 samples to sense")
    seg = min(nperseg, x.size)
    if mode == "average":
        freqs, density = welch(x, fs=sample_rate_hz, nperseg=seg, return_onesided=False, detrend=False)
    else:
        freqs, _, frames = spectrogram(x, fs=sample_rate_hz, nperseg=seg, return_onesided=False, detrend=False)
        density = frames.max(axis=-1)
    n_bins = int(round(sample_rate_hz / bin_hz))
    index = np.clip(np.floor((freqs + sample_rate_hz / 2) / bin_hz).astype(int), 0, n_bins - 1)
    totals = np.bincount(index, weights=density, minlength=n_bins)
    counts = np.bincount(index, minlength=n_bins)
    with np.errstate(invalid="ignore"):
        mean = np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)
    edges = -sample_rate_hz / 2 + bin_hz * np.arange(n_bins)
    return edges, power_db(mean)


def energy_detect(signal: np.ndarray, sample_rate_hz: float, bin_hz: float = 1e6,
                  threshold_db_over_floor: float = 10.0, mode: str = "average",
                  noise_floor_db: Optional[float] = None, center_hz: float = 0.0,
                  nperseg: int = 1024) -> List[Band]:
    """
    Occupied bands (lo_hz, hi_hz), absolute when center_hz is given. The floor
    is the median bin level unless a calibrated noise_floor_db (per Hz) is
    supplied; the median cannot see a band that fills the whole span.
    """
    edges, level = rssi_bins(signal, sample_rate_hz, bin_hz, mode, nperseg)
    valid = np.isfinite(level)
    floor = noise_floor_db if noise_floor_db is not None else (
        float(np.median(level[valid])) if valid.any() else -np.inf)
    occupied = valid & (level > floor + threshold_db_over_floor)

    bands: List[Band] = []
    start = None
    for i, on in enumerate(np.append(occupied, False)):
        if on and start is None:
            start = i
        elif not on and start is not None:
            bands.append((float(center_hz + edges[start]), float(center_hz + edges[i - 1] + bin_hz)))
            start = None
    logger.info("Energy detector (%s, floor %.1f dB, +%.1f dB): %d occupied band(s)",
                mode, floor, threshold_db_over_floor, len(bands))
    return bands


def _merge(intervals: Iterable[Band]) -> List[Band]:
    merged: List[Band] = []
    for lo, hi in sorted(intervals):
        if merged and lo < merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def bands_to_normalized(bands: Sequence[Band], radar_center_hz: float, radar_bandwidth_hz: float) -> List[Band]:
    """Occupied bands -> normalized design-grid intervals in [0, 1] (DFT bin order)."""
    if radar_bandwidth_hz <= 0:
        raise ParameterError(f"radar bandwidth must be positive, got {radar_bandwidth_hz}")
    half = radar_bandwidth_hz / 2
    out: List[Band] = []
    for lo, hi in bands:
        if hi < lo:
            raise ParameterError(f"band ({lo}, {hi}) has hi < lo")
        rel_lo = max(lo - radar_center_hz, -half)
        rel_hi = min(hi - radar_center_hz, half)
        if rel_lo >= rel_hi:
            logger.debug("Dropping band (%g, %g) Hz outside the radar band", lo, hi)
            continue
        if rel_lo >= 0:
            out.append((rel_lo / radar_bandwidth_hz, rel_hi / radar_bandwidth_hz))
        elif rel_hi <= 0:
            out.append((1.0 + rel_lo / radar_bandwidth_hz, 1.0 + rel_hi / radar_bandwidth_hz))
        else:
            out.append((0.0, rel_hi / radar_bandwidth_hz))
            out.append((1.0 + rel_lo / radar_bandwidth_hz, 1.0))
    return _merge(out)


def sense_to_mask(bands: Sequence[Band], radar_center_hz: float, radar_bandwidth_hz: float, N: int) -> SpectralMask:
    """Occupied bands -> SpectralMask on the length-N design grid."""
    mask = band_to_bins(bands_to_normalized(bands, radar_center_hz, radar_bandwidth_hz), N)
    if mask.degenerate:
        raise DegenerateMaskError("occupied bands cover the whole radar band; no desired bins remain")
    logger.info("Sensed mask: %d of %d bins undesired", len(mask.undesired), N)
    return mask


def write_bands_csv(path: str, bands: Sequence[Band]) -> str:
    return write_csv(path, ["lo_hz", "hi_hz"], ([lo, hi] for lo, hi in bands))


def read_bands_csv(path: str) -> List[Band]:
    rows = read_csv(path)
    try:
        return [(float(r["lo_hz"]), float(r["hi_hz"])) for r in rows]
    except (KeyError, TypeError, ValueError) as e:
        raise ParameterError(f"{path}: bands CSV needs numeric lo_hz,hi_hz columns ({e})") from e
