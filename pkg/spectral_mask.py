#!/usr/bin/env python3
"""
DFT-grid spectral masks and the spectral side of the design objective.

A mask turns normalized stopbands S = {(s1, s2)} into the undesired bin set
U = union of [round(N*s1), round(N*s2)] (inclusive, round half away from zero)
and its complement V. SILR is the energy a sequence set puts into U relative
to the energy it puts into V.

Mask files are JSON: {"n_bins": N, "stopbands": [[lo, hi], ...],
"undesired_bins": [...]} ; the bin list is written for inspection and checked
on load.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.signal import get_window

from radar_utils import DegenerateMaskError, ParameterError, write_csv
from sequence_set import SequenceSet

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]

WINDOWS = {
    "rectangular": "boxcar",
    "hamming": "hamming",
    "hann": "hann",
    "blackman": "blackman",
}


def round_half_away(x: float) -> int:
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


@dataclass(frozen=True)
class SpectralMask:
    stopbands: Tuple[Interval, ...]
    n_bins: int
    undesired: Tuple[int, ...]
    desired: Tuple[int, ...]

    @property
    def degenerate(self) -> bool:
        """True when V is empty; SILR cannot be evaluated on such a mask."""
        return len(self.desired) == 0

    def undesired_array(self) -> np.ndarray:
        return np.asarray(self.undesired, dtype=np.int64)

    def desired_array(self) -> np.ndarray:
        return np.asarray(self.desired, dtype=np.int64)

    def digest(self) -> str:
        """Stable hash of (N, U), recorded in run manifests."""
        payload = json.dumps({"n_bins": self.n_bins, "undesired": list(self.undesired)})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> Dict:
        return {
            "n_bins": self.n_bins,
            "stopbands": [list(b) for b in self.stopbands],
            "undesired_bins": list(self.undesired),
        }


@dataclass(frozen=True, eq=False)
class BinGram:
    """F_U or F_V: sum over the selected bins of f_k f_k^H (N x N, Hermitian PSD)."""

    N: int
    matrix: np.ndarray
    source: str


def dft_vector(k: int, N: int) -> np.ndarray:
    """f_k = [1, e^{j2pi k/N}, ..., e^{j2pi k(N-1)/N}]."""
    if N < 1:
        raise ParameterError(f"N must be positive, got {N}")
    if not 0 <= k < N:
        raise ParameterError(f"bin index {k} outside 0..{N - 1}")
    return np.exp(2j * np.pi * k * np.arange(N) / N)


def _check_intervals(stopbands: Iterable[Sequence[float]]) -> List[Interval]:
    bands: List[Interval] = []
    for band in stopbands:
        if len(band) != 2:
            raise ParameterError(f"stopband {band!r} must be a (lo, hi) pair")
        lo, hi = float(band[0]), float(band[1])
        if not 0.0 <= lo < hi <= 1.0:
            raise ParameterError(f"stopband ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")
        bands.append((lo, hi))
    ordered = sorted(bands)
    for (lo1, hi1), (lo2, hi2) in zip(ordered, ordered[1:]):
        if lo2 < hi1:
            raise ParameterError(f"stopbands ({lo1}, {hi1}) and ({lo2}, {hi2}) overlap")
    return ordered


def band_to_bins(stopbands: Iterable[Sequence[float]], N: int) -> SpectralMask:
    """Normalized stopbands -> (U, V) on the N-point DFT grid."""
    if N < 1:
        raise ParameterError(f"N must be positive, got {N}")
    bands = _check_intervals(stopbands)
    undesired = set()
    for lo, hi in bands:
        first = min(round_half_away(N * lo), N - 1)
        last = min(round_half_away(N * hi), N - 1)
        undesired.update(range(first, last + 1))
    desired = [k for k in range(N) if k not in undesired]
    mask = SpectralMask(tuple(bands), N, tuple(sorted(undesired)), tuple(desired))
    if mask.degenerate:
        logger.warning("Stopbands cover all %d bins; SILR is undefined on this mask", N)
    return mask


# Gram matrices depend only on (N, bins); keep them across sweeps and runs.
_gram_cache: Dict[Tuple[int, Tuple[int, ...]], np.ndarray] = {}


def _gram_matrix(N: int, bins: Tuple[int, ...]) -> np.ndarray:
    key = (N, bins)
    cached = _gram_cache.get(key)
    if cached is None:
        if bins:
            n = np.arange(N)[:, None]
            F = np.exp(2j * np.pi * n * np.asarray(bins)[None, :] / N)
            cached = F @ F.conj().T
        else:
            cached = np.zeros((N, N), dtype=complex)
        cached.flags.writeable = False
        _gram_cache[key] = cached
    return cached


def bin_gram(mask: SpectralMask, which: str) -> BinGram:
    """F_U (which='U') or F_V (which='V') for the mask."""
    which = which.upper()
    if which == "U":
        bins = mask.undesired
    elif which == "V":
        bins = mask.desired
    else:
        raise ParameterError(f"which must be 'U' or 'V', got {which!r}")
    return BinGram(mask.n_bins, _gram_matrix(mask.n_bins, bins), which)


def bin_energies(seq: SequenceSet) -> np.ndarray:
    """|f_k^H x_m|^2 for every m, k (M x N)."""
    return np.abs(np.fft.fft(seq.entries, axis=1)) ** 2


def silr_terms(seq: SequenceSet, mask: SpectralMask) -> Tuple[float, float]:
    """(g_a, g_b): energy in U and in V summed over all sequences."""
    if mask.n_bins != seq.N:
        raise ParameterError(f"mask has {mask.n_bins} bins but sequences have length {seq.N}")
    energy = bin_energies(seq)
    g_a = float(energy[:, mask.undesired_array()].sum()) if mask.undesired else 0.0
    g_b = float(energy[:, mask.desired_array()].sum()) if mask.desired else 0.0
    return g_a, g_b


def silr(seq: SequenceSet, mask: SpectralMask) -> float:
    """Spectral interference-to-leakage ratio g_s = g_a / g_b."""
    if mask.degenerate:
        raise DegenerateMaskError("mask leaves no desired bins; SILR is undefined")
    g_a, g_b = silr_terms(seq, mask)
    return g_a / g_b


def silr_quadratic(seq: SequenceSet, gram_u: BinGram, gram_v: BinGram) -> float:
    """Trace form sum_m x_m^H F_U x_m / sum_m x_m^H F_V x_m."""
    X = seq.entries
    num = np.einsum("mi,ij,mj->", X.conj(), gram_u.matrix, X).real
    den = np.einsum("mi,ij,mj->", X.conj(), gram_v.matrix, X).real
    if den <= 0:
        raise DegenerateMaskError("desired-band energy is zero")
    return float(num / den)


def psd(sequence: np.ndarray, nfft: int, window: str = "rectangular") -> np.ndarray:
    """
    Zero-padded windowed periodogram in dB. Normalized by the window's coherent
    gain so that a unit tone peaks at 0 dB whatever the window.
    """
    x = np.asarray(sequence, dtype=complex).ravel()
    N = x.size
    if N < 1:
        raise ParameterError("empty sequence")
    if nfft < N:
        raise ParameterError(f"nfft ({nfft}) must be at least the sequence length ({N})")
    if window not in WINDOWS:
        raise ParameterError(f"unknown window '{window}'; choose one of {', '.join(WINDOWS)}")
    if not np.any(x):
        raise ParameterError("all-zero sequence has no PSD")
    w = get_window(WINDOWS[window], N)
    spectrum = np.abs(np.fft.fft(x * w, nfft)) ** 2 / np.sum(w) ** 2
    return 10.0 * np.log10(np.maximum(spectrum, np.finfo(float).tiny))


def write_psd_csv(path: str, psd_db: np.ndarray) -> str:
    nfft = len(psd_db)
    return write_csv(path, ["bin", "freq_norm", "db"],
                     ([k, k / nfft, float(psd_db[k])] for k in range(nfft)))


def stopband_psd_gap_db(seq: SequenceSet, mask: SpectralMask) -> float:
    """Mean passband power minus mean stopband power on the design grid, in dB."""
    if mask.degenerate or not mask.undesired:
        raise DegenerateMaskError("stopband gap needs both U and V nonempty")
    energy = bin_energies(seq)
    stop = energy[:, mask.undesired_array()].mean()
    passb = energy[:, mask.desired_array()].mean()
    return float(10.0 * np.log10(passb / max(stop, np.finfo(float).tiny)))


# --------------------------------------------------------------------------- #
# Mask files and CLI stopband syntax
# --------------------------------------------------------------------------- #
def parse_stopband(text: str) -> Interval:
    """'lo:hi' -> (lo, hi)."""
    parts = (text or "").split(":")
    if len(parts) != 2:
        raise ParameterError(f"stopband '{text}' must look like lo:hi")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as e:
        raise ParameterError(f"stopband '{text}' is not numeric") from e


def save_mask(mask: SpectralMask, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(mask.to_dict(), f, indent=2)
        f.write("\n")
    return path


def load_mask(path: str) -> SpectralMask:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except ValueError as e:
        raise ParameterError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict) or "n_bins" not in data or "stopbands" not in data:
        raise ParameterError(f"{path}: mask file needs 'n_bins' and 'stopbands'")
    mask = band_to_bins(data["stopbands"], int(data["n_bins"]))
    stored = data.get("undesired_bins")
    if stored is not None and tuple(stored) != mask.undesired:
        raise ParameterError(f"{path}: undesired_bins do not match the stopbands")
    return mask
