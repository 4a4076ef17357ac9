#!/usr/bin/env python3
"""
Standard transmit codes offered next to the optimized sets: random polyphase,
random binary, Frank, Golomb, Barker, m-sequence and up/down LFM.

Deterministic codes become M-row sets by cyclic shifts of N // M samples per
row, so every row is a unimodular code of the same family.
"""

import logging
from typing import Callable, Dict

import numpy as np
from scipy.signal import max_len_seq

from radar_utils import ParameterError, RngSpec, make_rng
from sequence_set import PhaseAlphabet, SequenceSet, random_phase_set

logger = logging.getLogger(__name__)

BARKER_CODES: Dict[int, list] = {
    2: [1, -1],
    3: [1, 1, -1],
    4: [1, 1, -1, 1],
    5: [1, 1, 1, -1, 1],
    7: [1, 1, 1, -1, -1, 1, -1],
    11: [1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1],
    13: [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1],
}


def _shifted_rows(code: np.ndarray, M: int) -> np.ndarray:
    N = code.shape[-1]
    step = N // M if M > 1 else 0
    return np.stack([np.roll(code, -m * step) for m in range(M)])


def _binary_indices(code) -> np.ndarray:
    """+1 -> index 0, -1 -> index 1 of the 2-point alphabet."""
    return (np.asarray(code) < 0).astype(np.int64)


def _random_polyphase(M: int, N: int, rng: RngSpec) -> SequenceSet:
    return random_phase_set(M, N, PhaseAlphabet.continuous(), rng)


def _random_binary(M: int, N: int, rng: RngSpec) -> SequenceSet:
    return random_phase_set(M, N, PhaseAlphabet.discrete(2), rng)


def _frank(M: int, N: int, rng: RngSpec) -> SequenceSet:
    P = int(round(np.sqrt(N)))
    if P * P != N or P < 2:
        raise ParameterError(f"Frank code needs a perfect-square length, got N={N}")
    p, q = np.meshgrid(np.arange(P), np.arange(P), indexing="ij")
    return SequenceSet.from_indices(_shifted_rows((p * q % P).ravel(), M), P)


def _golomb(M: int, N: int, rng: RngSpec) -> SequenceSet:
    n = np.arange(N)
    return SequenceSet.from_phases(_shifted_rows(np.pi * n * (n + 1) / N, M))


def _barker(M: int, N: int, rng: RngSpec) -> SequenceSet:
    if N not in BARKER_CODES:
        raise ParameterError(f"no Barker code of length {N}; available: {sorted(BARKER_CODES)}")
    return SequenceSet.from_indices(_shifted_rows(_binary_indices(BARKER_CODES[N]), M), 2)


def _m_sequence(M: int, N: int, rng: RngSpec) -> SequenceSet:
    nbits = int(round(np.log2(N + 1)))
    if 2 ** nbits - 1 != N or nbits < 2:
        raise ParameterError(f"m-sequence needs N = 2^k - 1, got N={N}")
    bits, _ = max_len_seq(nbits)
    return SequenceSet.from_indices(_shifted_rows(bits.astype(np.int64), M), 2)


def _lfm(M: int, N: int, rng: RngSpec, up: bool = True) -> SequenceSet:
    n = np.arange(N)
    phase = np.pi * n ** 2 / N
    return SequenceSet.from_phases(_shifted_rows(phase if up else -phase, M))


_GENERATORS: Dict[str, Callable[[int, int, RngSpec], SequenceSet]] = {
    "random-polyphase": _random_polyphase,
    "random-binary": _random_binary,
    "frank": _frank,
    "golomb": _golomb,
    "barker": _barker,
    "m-sequence": _m_sequence,
    "up-lfm": lambda M, N, rng: _lfm(M, N, rng, up=True),
    "down-lfm": lambda M, N, rng: _lfm(M, N, rng, up=False),
}

WAVEFORM_NAMES = tuple(_GENERATORS)


def standard_waveform(name: str, M: int, N: int, rng: RngSpec = RngSpec(0)) -> SequenceSet:
    """Build an M x N set of the named code family (rng is used by the random families only)."""
    key = (name or "").strip().lower()
    if key not in _GENERATORS:
        raise ParameterError(f"unknown waveform '{name}'; choose one of {', '.join(WAVEFORM_NAMES)}")
    if M < 1 or N < 1:
        raise ParameterError(f"M and N must be positive, got M={M}, N={N}")
    logger.debug("Generating %s waveform set M=%d N=%d", key, M, N)
    return _GENERATORS[key](M, N, rng)
