"""Shared helpers: error types, seeded RNG streams, dB conversions and CSV output."""
import csv
import os
from dataclasses import dataclass
from typing import Any, Iterable, List, Sequence

import numpy as np


class ParameterError(ValueError):
    """Invalid count, index, length or physical parameter."""


class DegenerateMaskError(ValueError):
    """The desired bin set is empty, or an objective denominator is not positive."""


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream id. Identical pairs give identical draws on every platform."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream < 0:
            raise ParameterError(f"stream id must be non-negative, got {self.stream}")

    def child(self, stream: int) -> "RngSpec":
        """Same seed, different stream (e.g. one per Monte-Carlo trial)."""
        return RngSpec(self.seed, stream)


def make_rng(spec: RngSpec) -> np.random.Generator:
    """Philox (counter-based) generator keyed by (seed, stream)."""
    seq = np.random.SeedSequence(spec.seed, spawn_key=(spec.stream,))
    return np.random.Generator(np.random.Philox(seq))


def power_db(value: Any) -> Any:
    """10*log10 with zero mapped to -inf instead of a warning."""
    arr = np.asarray(value, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def db_to_power(db: Any) -> Any:
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def format_float(value: float) -> str:
    """Shortest repr that round-trips; keeps CSV output byte-stable."""
    value = float(value)
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Write rows with a header; floats go through format_float. Returns the path."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: str) -> List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)
