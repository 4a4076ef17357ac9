#!/usr/bin/env python3
"""
LTE-like downlink interference with resource-block spectral holes, plus a
symbol-level comms proxy (EVM and symbol-error rate) standing in for PDSCH
throughput.

The allocation is a bit string over groups of prb_per_bit physical resource
blocks (12 subcarriers each); '1' groups carry random constellation symbols,
'0' groups are left empty. Subcarriers sit symmetrically around the LTE
center (DC subcarrier unused) and are generated as OFDM-like blocks of
T = round(sample_rate / subcarrier_spacing) samples without cyclic prefix.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from radar_utils import ParameterError, RngSpec, db_to_power, make_rng, power_db

logger = logging.getLogger(__name__)

DEFAULT_ALLOCATION = "1111111111110000000111111"

# MCS-like labels -> modulation order
MCS_ORDERS: Dict[str, int] = {"MCS0": 4, "MCS10": 16, "MCS17": 64}
CONSTELLATION_NAMES: Dict[int, str] = {4: "QPSK", 16: "16QAM", 64: "64QAM"}


def constellation_symbols(order: int) -> np.ndarray:
    """Square QAM grid (QPSK for order 4), normalized to unit mean power."""
    side = int(round(np.sqrt(order)))
    if order not in CONSTELLATION_NAMES or side * side != order:
        raise ParameterError(f"constellation order must be one of {sorted(CONSTELLATION_NAMES)}, got {order}")
    base = 2 * np.arange(side) - side + 1
    i, q = np.meshgrid(base, base)
    symbols = (i + 1j * q).ravel()
    return symbols / np.sqrt(np.mean(np.abs(symbols) ** 2))


def mcs_order(label: str) -> int:
    key = (label or "").strip().upper()
    if key not in MCS_ORDERS:
        raise ParameterError(f"unknown MCS label '{label}'; choose one of {', '.join(MCS_ORDERS)}")
    return MCS_ORDERS[key]


@dataclass(frozen=True)
class InterferenceSpec:
    allocation: str = DEFAULT_ALLOCATION
    prb_per_bit: int = 4
    bandwidth_hz: float = 20e6
    center_offset_hz: float = 0.0
    power_dbm: float = 10.0
    subcarriers_per_prb: int = 12
    subcarrier_spacing_hz: float = 15e3
    sample_rate_hz: float = 40e6
    constellation: int = 4

    def __post_init__(self):
        if not self.allocation or set(self.allocation) - {"0", "1"}:
            raise ParameterError(f"allocation must be a nonempty string of 0/1, got {self.allocation!r}")
        if self.prb_per_bit < 1 or self.subcarriers_per_prb < 1:
            raise ParameterError("prb_per_bit and subcarriers_per_prb must be positive")
        if self.subcarrier_spacing_hz <= 0 or self.sample_rate_hz <= 0 or self.bandwidth_hz <= 0:
            raise ParameterError("bandwidth, subcarrier spacing and sample rate must be positive")
        if self.span_hz > self.bandwidth_hz:
            raise ParameterError(f"allocation spans {self.span_hz / 1e6:.3f} MHz, more than the "
                                 f"{self.bandwidth_hz / 1e6:.3f} MHz bandwidth")
        constellation_symbols(self.constellation)
        top = abs(self.center_offset_hz) + (self.n_subcarriers // 2 + 1) * self.spacing_hz
        if top >= self.sample_rate_hz / 2:
            raise ParameterError(f"occupied span reaches {top / 1e6:.3f} MHz, beyond the Nyquist limit of "
                                 f"{self.sample_rate_hz / 2e6:.3f} MHz")

    @property
    def subcarriers_per_bit(self) -> int:
        return self.prb_per_bit * self.subcarriers_per_prb

    @property
    def n_subcarriers(self) -> int:
        return len(self.allocation) * self.subcarriers_per_bit

    @property
    def span_hz(self) -> float:
        return self.n_subcarriers * self.subcarrier_spacing_hz

    @property
    def block_len(self) -> int:
        return int(round(self.sample_rate_hz / self.subcarrier_spacing_hz))

    @property
    def spacing_hz(self) -> float:
        """Spacing actually realized on the sample grid (sample_rate / T)."""
        return self.sample_rate_hz / self.block_len

    @property
    def center_bin(self) -> int:
        return int(round(self.center_offset_hz / self.spacing_hz))


def subcarrier_bins(spec: InterferenceSpec) -> np.ndarray:
    """Signed block-FFT bin of every subcarrier, lowest frequency first (DC skipped)."""
    half = spec.n_subcarriers // 2
    k = np.concatenate([np.arange(-half, 0), np.arange(1, spec.n_subcarriers - half + 1)])
    return k + spec.center_bin


def active_mask(spec: InterferenceSpec) -> np.ndarray:
    bits = np.array([c == "1" for c in spec.allocation])
    return np.repeat(bits, spec.subcarriers_per_bit)


def occupied_bands_hz(spec: InterferenceSpec) -> List[Tuple[float, float]]:
    """Frequency extent of each run of '1' groups, half a subcarrier beyond the outer tones."""
    freqs = subcarrier_bins(spec) * spec.spacing_hz
    active = active_mask(spec)
    bands: List[Tuple[float, float]] = []
    start: Optional[int] = None
    for i, on in enumerate(np.append(active, False)):
        if on and start is None:
            start = i
        elif not on and start is not None:
            half = spec.spacing_hz / 2
            bands.append((float(freqs[start] - half), float(freqs[i - 1] + half)))
            start = None
    return bands


@dataclass(eq=False)
class InterferenceFrame:
    """Generated signal plus the known symbols a receiver compares against."""

    spec: InterferenceSpec
    signal: np.ndarray
    symbols: np.ndarray = field(repr=False)
    bins: np.ndarray = field(repr=False)
    amplitude: float = 0.0

    @property
    def n_blocks(self) -> int:
        return self.symbols.shape[0]


def generate_frame(spec: InterferenceSpec, n_samples: int, rng: RngSpec) -> InterferenceFrame:
    if int(n_samples) != n_samples or n_samples < 0:
        raise ParameterError(f"n_samples must be a non-negative integer, got {n_samples}")
    T = spec.block_len
    bins = subcarrier_bins(spec)[active_mask(spec)]
    n_blocks = -(-int(n_samples) // T)
    if bins.size == 0 or n_samples == 0:
        logger.debug("Allocation %s has no occupied groups; interference is silent", spec.allocation)
        return InterferenceFrame(spec, np.zeros(int(n_samples), dtype=complex),
                                 np.zeros((n_blocks, 0), dtype=complex), bins, 0.0)
    gen = make_rng(rng)
    points = constellation_symbols(spec.constellation)
    symbols = points[gen.integers(0, points.size, size=(n_blocks, bins.size))]
    grid = np.zeros((n_blocks, T), dtype=complex)
    grid[:, bins % T] = symbols
    # ifft carries 1/T; each active tone then has amplitude `amplitude`
    amplitude = float(np.sqrt(db_to_power(spec.power_dbm) / bins.size))
    blocks = np.fft.ifft(grid, axis=1) * T * amplitude
    signal = blocks.ravel()[:int(n_samples)]
    logger.debug("LTE proxy: %d active subcarriers, %d blocks of %d samples, %.1f dBm",
                 bins.size, n_blocks, T, spec.power_dbm)
    return InterferenceFrame(spec, signal, symbols, bins, amplitude)


def gen_interference(spec: InterferenceSpec, n_samples: int, rng: RngSpec) -> np.ndarray:
    """Complex baseband LTE-like interference of n_samples samples."""
    return generate_frame(spec, n_samples, rng).signal


@dataclass(frozen=True)
class LinkMetrics:
    evm_db: float
    ser: float
    n_symbols: int


def demodulate(frame: InterferenceFrame, received: np.ndarray) -> np.ndarray:
    """Per-subcarrier symbol estimates from every complete block (ideal channel knowledge)."""
    T = frame.spec.block_len
    n_full = min(len(received) // T, frame.n_blocks)
    if n_full == 0:
        raise ParameterError(f"need at least one full block of {T} samples to demodulate")
    blocks = np.asarray(received[:n_full * T]).reshape(n_full, T)
    spectrum = np.fft.fft(blocks, axis=1)
    return spectrum[:, frame.bins % T] / (T * frame.amplitude)


def link_metrics(frame: InterferenceFrame, received: np.ndarray) -> LinkMetrics:
    """
    EVM (dB, relative to unit symbol power) and hard-decision symbol-error rate.
    Every constellation has unit mean power, so EVM tracks the disturbance
    alone; SER is what separates QPSK, 16QAM and 64QAM.
    """
    if frame.bins.size == 0:
        raise ParameterError("allocation carries no symbols to measure")
    estimates = demodulate(frame, received)
    sent = frame.symbols[:estimates.shape[0]]
    evm = float(np.mean(np.abs(estimates - sent) ** 2))
    points = constellation_symbols(frame.spec.constellation)
    decided = points[np.argmin(np.abs(estimates[..., None] - points), axis=-1)]
    ser = float(np.mean(~np.isclose(decided, sent)))
    return LinkMetrics(evm_db=power_db(evm), ser=ser, n_symbols=int(sent.size))
