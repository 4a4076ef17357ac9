#!/usr/bin/env python3
"""
Aperiodic and periodic correlation of sequence sets: ICCL, ISL/ISLR and the
set-size ISL lower bound N^2 * M * (M - 1).

r_{x,y}(l) = sum_n x_n * conj(y_{n+l}), l = -(N-1)..N-1. The direct sum is the
reference; the FFT path (zero-padded to >= 2N-1) is the default.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

import numpy as np

from radar_utils import ParameterError, power_db, write_csv
from sequence_set import SequenceSet

logger = logging.getLogger(__name__)


class CorrelationKind(str, Enum):
    APERIODIC = "aperiodic"
    PERIODIC = "periodic"


@dataclass(frozen=True, eq=False)
class CorrelationProfile:
    lags: np.ndarray
    values: np.ndarray
    kind: CorrelationKind
    pair: Tuple[int, int] = (0, 0)

    def at(self, lag: int) -> complex:
        return complex(self.values[lag - int(self.lags[0])])

    def abs_db(self, N: int) -> np.ndarray:
        """20*log10(|r| / N): mainlobe of a unimodular autocorrelation is 0 dB."""
        return 2.0 * power_db(np.abs(self.values) / N)


@dataclass(frozen=True)
class SetCorrelationSummary:
    iccl_raw: float
    iccl_scaled: float
    isl: float
    islr_db: float
    bound: float
    bound_db: float

    @property
    def bound_gap_db(self) -> float:
        return self.islr_db - self.bound_db


def _lags(N: int) -> np.ndarray:
    return np.arange(-(N - 1), N)


def _fft_size(N: int) -> int:
    size = 1
    while size < 2 * N - 1:
        size *= 2
    return size


def _xcorr_direct(x: np.ndarray, y: np.ndarray, kind: CorrelationKind) -> np.ndarray:
    N = x.size
    out = np.zeros(2 * N - 1, dtype=complex)
    for i, l in enumerate(_lags(N)):
        if kind == CorrelationKind.PERIODIC:
            out[i] = np.sum(x * np.conj(np.roll(y, -l)))
        elif l >= 0:
            out[i] = np.sum(x[:N - l] * np.conj(y[l:]))
        else:
            out[i] = np.sum(x[-l:] * np.conj(y[:N + l]))
    return out


def _xcorr_fft(x: np.ndarray, y: np.ndarray, kind: CorrelationKind) -> np.ndarray:
    N = x.size
    size = N if kind == CorrelationKind.PERIODIC else _fft_size(N)
    # ifft(X * conj(Y))[k] = sum_n x_n conj(y_{n-k}); lag l sits at k = -l
    z = np.fft.ifft(np.fft.fft(x, size) * np.conj(np.fft.fft(y, size)))
    return z[(-_lags(N)) % size]


def xcorr(x: np.ndarray, y: np.ndarray, kind: CorrelationKind = CorrelationKind.APERIODIC,
          method: str = "fft", pair: Tuple[int, int] = (0, 0)) -> CorrelationProfile:
    """Correlation profile of x against y over all 2N-1 lags."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.size != y.size:
        raise ParameterError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 1:
        raise ParameterError("empty sequences")
    kind = CorrelationKind(kind)
    if method == "direct":
        values = _xcorr_direct(x, y, kind)
    elif method == "fft":
        values = _xcorr_fft(x, y, kind)
    else:
        raise ParameterError(f"method must be 'fft' or 'direct', got {method!r}")
    return CorrelationProfile(_lags(x.size), values, kind, pair)


def _pair_energy(seq: SequenceSet, kind: CorrelationKind, method: str) -> np.ndarray:
    """E[m, m'] = sum over lags of |r_{m,m'}(l)|^2, lag 0 excluded on the diagonal."""
    X = seq.entries
    M = seq.M
    energy = np.zeros((M, M))
    for m in range(M):
        for mp in range(M):
            values = xcorr(X[m], X[mp], kind, method).values
            if kind == CorrelationKind.PERIODIC:
                # one period: lags 0..N-1
                values = values[seq.N - 1:]
            power = np.abs(values) ** 2
            if m == mp:
                power[0 if kind == CorrelationKind.PERIODIC else seq.N - 1] = 0.0
            energy[m, mp] = power.sum()
    return energy


def iccl(seq: SequenceSet, method: str = "fft") -> Tuple[float, float]:
    """(raw, scaled) integrated cross-correlation level; scaled = raw / (2MN)^2."""
    if seq.M < 2:
        return 0.0, 0.0
    energy = _pair_energy(seq, CorrelationKind.APERIODIC, method)
    # fixed summation order keeps the total bit-stable
    raw = float(sum(energy[m, mp] for m in range(seq.M) for mp in range(seq.M) if m != mp))
    return raw, raw / (2.0 * seq.M * seq.N) ** 2


def isl(seq: SequenceSet, kind: CorrelationKind = CorrelationKind.APERIODIC, method: str = "fft") -> float:
    """Autocorrelation sidelobes of every sequence plus all cross-correlations."""
    energy = _pair_energy(seq, CorrelationKind(kind), method)
    return float(sum(energy[m, mp] for m in range(seq.M) for mp in range(seq.M)))


def isl_bound(M: int, N: int) -> float:
    return float(N) ** 2 * M * (M - 1)


def islr_db(seq: SequenceSet, kind: CorrelationKind = CorrelationKind.APERIODIC) -> float:
    """ISL relative to the total mainlobe energy M*N^2, in dB."""
    return power_db(isl(seq, kind) / (seq.M * seq.N ** 2))


def summarize(seq: SequenceSet) -> SetCorrelationSummary:
    raw, scaled = iccl(seq)
    total = isl(seq)
    bound = isl_bound(seq.M, seq.N)
    norm = seq.M * seq.N ** 2
    return SetCorrelationSummary(
        iccl_raw=raw,
        iccl_scaled=scaled,
        isl=total,
        islr_db=power_db(total / norm),
        bound=bound,
        bound_db=power_db(bound / norm),
    )


def peak_xcorr_db(seq: SequenceSet) -> Dict[Tuple[int, int], float]:
    """Per ordered pair m != m': max |r_{m,m'}(l)| relative to N, in dB."""
    X = seq.entries
    out: Dict[Tuple[int, int], float] = {}
    for m in range(seq.M):
        for mp in range(seq.M):
            if m == mp:
                continue
            peak = np.abs(xcorr(X[m], X[mp]).values).max()
            out[(m, mp)] = 2.0 * power_db(peak / seq.N)
    return out


def mean_peak_xcorr_db(seq: SequenceSet) -> float:
    peaks = peak_xcorr_db(seq)
    if not peaks:
        return float("-inf")
    return float(np.mean(list(peaks.values())))


def write_profile_csv(path: str, profile: CorrelationProfile, N: int) -> str:
    db = profile.abs_db(N)
    return write_csv(path, ["lag", "abs_db"], ([int(l), float(v)] for l, v in zip(profile.lags, db)))
