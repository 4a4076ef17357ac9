#!/usr/bin/env python3
"""
Sequence sets: M transmit sequences of N unit-modulus samples, with either a
continuous phase alphabet [0, 2*pi) or an L-point PSK alphabet.

Discrete sets are stored as integer phase indices; the complex samples are
built from an exact lookup table on first use, so alphabet membership never
depends on a float tolerance. Sets are immutable once constructed.

CSV format (one row per sample): m,n,re,im,phase_index
(phase_index is blank for continuous sets).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import List, Optional

import numpy as np

from radar_utils import ParameterError, RngSpec, format_float, make_rng, read_csv, write_csv

logger = logging.getLogger(__name__)

MODULUS_TOL = 1e-12
PHASE_TOL = 1e-12
TWO_PI = 2.0 * np.pi
CSV_HEADER = ["m", "n", "re", "im", "phase_index"]


class AlphabetKind(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class PhaseAlphabet:
    """Continuous phases, or Discrete(L): {2*pi*l/L : l = 0..L-1}."""

    kind: AlphabetKind
    size: Optional[int] = None

    def __post_init__(self):
        if self.kind == AlphabetKind.DISCRETE:
            if self.size is None or int(self.size) != self.size or self.size < 2:
                raise ParameterError(f"discrete alphabet needs an integer size L >= 2, got {self.size}")
        elif self.size is not None:
            raise ParameterError("continuous alphabet takes no size")

    @classmethod
    def continuous(cls) -> "PhaseAlphabet":
        return cls(AlphabetKind.CONTINUOUS)

    @classmethod
    def discrete(cls, size: int) -> "PhaseAlphabet":
        return cls(AlphabetKind.DISCRETE, size)

    @property
    def is_discrete(self) -> bool:
        return self.kind == AlphabetKind.DISCRETE

    def grid(self) -> np.ndarray:
        """Phase grid of a discrete alphabet."""
        if not self.is_discrete:
            raise ParameterError("continuous alphabet has no phase grid")
        return TWO_PI * np.arange(self.size) / self.size

    def label(self) -> str:
        return f"discrete(L={self.size})" if self.is_discrete else "continuous"


def unit_circle_table(size: int) -> np.ndarray:
    """e^{j*2*pi*l/L} with the axis points (1, j, -1, -j) made exact."""
    table = np.exp(1j * TWO_PI * np.arange(size) / size)
    re = np.where(np.abs(table.real) < 1e-15, 0.0, table.real)
    im = np.where(np.abs(table.imag) < 1e-15, 0.0, table.imag)
    table = re + 1j * im
    table.flags.writeable = False
    return table


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SequenceSet:
    """
    M x N matrix X of transmit samples.

    Build with from_phases / from_indices / from_entries rather than directly.
    `indices` is set only for sets built from integer phase indices.
    """

    alphabet: PhaseAlphabet
    raw: Optional[np.ndarray] = field(default=None, repr=False)
    indices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        source = self.indices if self.indices is not None else self.raw
        if source is None:
            raise ParameterError("sequence set needs entries or phase indices")
        if source.ndim != 2 or source.shape[0] < 1 or source.shape[1] < 1:
            raise ParameterError(f"sequence set must be a non-empty M x N matrix, got shape {source.shape}")

    # ------------------------------------------------------------------ #
    # Constructors
    # ------------------------------------------------------------------ #
    @classmethod
    def from_phases(cls, phases: np.ndarray) -> "SequenceSet":
        """Continuous set x = e^{j*phi}."""
        phases = np.atleast_2d(np.asarray(phases, dtype=float))
        return cls(PhaseAlphabet.continuous(), raw=_frozen(np.exp(1j * phases)))

    @classmethod
    def from_indices(cls, indices: np.ndarray, size: int) -> "SequenceSet":
        """Discrete set from integer phase indices in 0..L-1."""
        indices = np.atleast_2d(np.asarray(indices))
        if not np.issubdtype(indices.dtype, np.integer):
            raise ParameterError("phase indices must be integers")
        if indices.size and (indices.min() < 0 or indices.max() >= size):
            raise ParameterError(f"phase indices must lie in 0..{size - 1}")
        return cls(PhaseAlphabet.discrete(size), indices=_frozen(indices.astype(np.int64)))

    @classmethod
    def from_entries(cls, entries: np.ndarray, alphabet: Optional[PhaseAlphabet] = None) -> "SequenceSet":
        """
        Wrap arbitrary complex samples. Nothing is checked here; call validate()
        (the CSV loader does). A discrete alphabet given here is only a label
        until quantize_to_alphabet() or the loader converts the set to indices.
        """
        entries = np.atleast_2d(np.asarray(entries, dtype=complex))
        return cls(alphabet or PhaseAlphabet.continuous(), raw=_frozen(entries))

    # ------------------------------------------------------------------ #
    # Views
    # ------------------------------------------------------------------ #
    @property
    def shape(self):
        source = self.indices if self.indices is not None else self.raw
        return source.shape

    @property
    def M(self) -> int:
        return self.shape[0]

    @property
    def N(self) -> int:
        return self.shape[1]

    @cached_property
    def entries(self) -> np.ndarray:
        """Complex M x N samples (read-only)."""
        if self.indices is not None:
            return _frozen(unit_circle_table(self.alphabet.size)[self.indices])
        return self.raw

    def phases(self) -> np.ndarray:
        """Phases wrapped to [0, 2*pi)."""
        if self.indices is not None:
            return TWO_PI * self.indices / self.alphabet.size
        return np.mod(np.angle(self.entries), TWO_PI)

    def row(self, m: int) -> np.ndarray:
        return self.entries[m]

    def with_rows(self, order: List[int]) -> "SequenceSet":
        """Reordered copy (row permutation)."""
        if self.indices is not None:
            return SequenceSet(self.alphabet, indices=_frozen(self.indices[list(order)]))
        return SequenceSet(self.alphabet, raw=_frozen(self.raw[list(order)]))

    def __repr__(self) -> str:
        return f"SequenceSet(M={self.M}, N={self.N}, alphabet={self.alphabet.label()})"


@dataclass(frozen=True)
class Violation:
    m: int
    n: int
    invariant: str
    detail: str


def random_phase_set(M: int, N: int, alphabet: PhaseAlphabet, rng: RngSpec) -> SequenceSet:
    """
    Random-phase initialization: i.i.d. uniform phases on [0, 2*pi) (continuous)
    or i.i.d. uniform indices on 0..L-1 (discrete).
    """
    if int(M) != M or M < 1:
        raise ParameterError(f"M must be a positive integer, got {M}")
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N}")
    gen = make_rng(rng)
    if alphabet.is_discrete:
        return SequenceSet.from_indices(gen.integers(0, alphabet.size, size=(M, N)), alphabet.size)
    return SequenceSet.from_phases(gen.uniform(0.0, TWO_PI, size=(M, N)))


def validate(seq: SequenceSet) -> List[Violation]:
    """Every broken invariant, one Violation per (m, n, invariant). Never raises."""
    out: List[Violation] = []
    entries = seq.entries
    modulus_error = np.abs(np.abs(entries) - 1.0)
    for m, n in zip(*np.nonzero(~(modulus_error <= MODULUS_TOL))):
        out.append(Violation(int(m), int(n), "unit-modulus",
                             f"|x| = {abs(entries[m, n])!r}"))
    if seq.alphabet.is_discrete and seq.indices is None:
        L = seq.alphabet.size
        step = TWO_PI / L
        phases = np.mod(np.angle(entries), TWO_PI)
        nearest = np.round(phases / step)
        off = np.abs(phases - nearest * step)
        for m, n in zip(*np.nonzero(~(off <= PHASE_TOL))):
            out.append(Violation(int(m), int(n), "alphabet-membership",
                                 f"phase {phases[m, n]!r} not in Omega_{L}"))
    return out


def quantize_to_alphabet(seq: SequenceSet, L: int) -> SequenceSet:
    """Map every phase to the nearest point of Omega_L; exact halfway ties go to the lower index."""
    if int(L) != L or L < 2:
        raise ParameterError(f"L must be an integer >= 2, got {L}")
    q = seq.phases() / (TWO_PI / L)
    # ceil(q - 1/2) rounds halves down; the epsilon absorbs the float error of phi/(2pi/L)
    indices = np.ceil(q - 0.5 - 1e-12).astype(np.int64) % L
    return SequenceSet.from_indices(indices, L)


# --------------------------------------------------------------------------- #
# CSV I/O
# --------------------------------------------------------------------------- #
def save_csv(seq: SequenceSet, path: str) -> str:
    entries = seq.entries
    indices = seq.indices

    def rows():
        for m in range(seq.M):
            for n in range(seq.N):
                idx = int(indices[m, n]) if indices is not None else None
                yield [m, n, format_float(entries[m, n].real), format_float(entries[m, n].imag), idx]

    logger.debug("Writing %r to %s", seq, path)
    return write_csv(path, CSV_HEADER, rows())


def load_csv(path: str, L: Optional[int] = None) -> SequenceSet:
    """
    Load a set written by save_csv and validate it. When phase_index is present
    and L is not given, L is inferred from the samples.
    """
    rows = read_csv(path)
    if not rows:
        raise ParameterError(f"{path}: no samples")
    missing = [c for c in CSV_HEADER if c not in rows[0]]
    if missing:
        raise ParameterError(f"{path}: missing columns {missing}")
    try:
        ms = np.array([int(r["m"]) for r in rows])
        ns = np.array([int(r["n"]) for r in rows])
        values = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        raw_idx = [r["phase_index"].strip() for r in rows]
    except (TypeError, ValueError) as e:
        raise ParameterError(f"{path}: malformed row ({e})") from e
    M, N = int(ms.max()) + 1, int(ns.max()) + 1
    if len(rows) != M * N or ms.min() < 0 or ns.min() < 0:
        raise ParameterError(f"{path}: expected a full {M} x {N} grid, got {len(rows)} rows")
    entries = np.full((M, N), np.nan + 0j)
    entries[ms, ns] = values

    discrete = any(raw_idx)
    if discrete and not all(raw_idx):
        raise ParameterError(f"{path}: phase_index must be given for every row or none")
    if discrete:
        indices = np.zeros((M, N), dtype=np.int64)
        indices[ms, ns] = [int(v) for v in raw_idx]
        size = L or _infer_alphabet_size(entries, indices)
        labelled = SequenceSet.from_entries(entries, PhaseAlphabet.discrete(size))
        _raise_on_violations(path, labelled)
        seq = SequenceSet.from_indices(indices, size)
        if not np.allclose(seq.entries, entries, atol=1e-12, rtol=0):
            raise ParameterError(f"{path}: phase_index disagrees with re/im")
        return seq
    seq = SequenceSet.from_entries(entries)
    _raise_on_violations(path, seq)
    return seq


def _infer_alphabet_size(entries: np.ndarray, indices: np.ndarray) -> int:
    phases = np.mod(np.angle(entries), TWO_PI)
    mask = indices > 0
    if not mask.any():
        # every sample is 1, which all alphabets contain
        logger.warning("phase_index column is all zero; assuming L=2 (pass L to choose another alphabet)")
        return 2
    estimates = np.round(TWO_PI * indices[mask] / phases[mask]).astype(int)
    size = int(estimates.max())
    if size < 2 or size <= int(indices.max()):
        raise ParameterError("phase_index column is inconsistent with the samples")
    return size


def _raise_on_violations(path: str, seq: SequenceSet) -> None:
    violations = validate(seq)
    if violations:
        first = violations[0]
        raise ParameterError(
            f"{path}: {len(violations)} invariant violation(s), first at (m={first.m}, n={first.n}): "
            f"{first.invariant} ({first.detail})"
        )
