#!/usr/bin/env python3
"""
Pulse-Doppler MIMO radar receive chain: target echo synthesis, per-(tx, rx)
matched filtering in fast time, slow-time FFT to range-Doppler maps, and the
peak-to-neighbourhood SINR measurement.

Cubes are indexed (rx, pulse, fast-time sample); matched-filter outputs add a
leading tx axis. One fast-time sample per chip (sample rate = radar
bandwidth); the fast-time window is one PRI.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve, get_window

from radar_utils import ParameterError, RngSpec, db_to_power, make_rng, power_db, write_csv
from sequence_set import SequenceSet
from spectral_mask import WINDOWS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Target:
    delay_s: float
    normalized_doppler: float
    angle_deg: float = 0.0
    attenuation_db: float = 30.0

    def __post_init__(self):
        if not -0.5 < self.normalized_doppler <= 0.5:
            raise ParameterError(f"normalized Doppler must lie in (-0.5, 0.5], got {self.normalized_doppler}")
        if self.delay_s < 0:
            raise ParameterError(f"delay must be non-negative, got {self.delay_s}")


@dataclass(frozen=True)
class RadarParams:
    n_tx: int = 2
    n_rx: int = 2
    code_length: int = 400
    pri_s: float = 20e-6
    n_pulses: int = 64
    sample_rate_hz: float = 40e6
    noise_power_db: Optional[float] = 0.0
    tx_power_dbm: float = 10.0
    duty_cycle: float = 0.5

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "code_length", "n_pulses"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value}")
        if self.pri_s <= 0 or self.sample_rate_hz <= 0:
            raise ParameterError("pri_s and sample_rate_hz must be positive")
        if not 0 < self.duty_cycle <= 1:
            raise ParameterError(f"duty_cycle must lie in (0, 1], got {self.duty_cycle}")
        if self.code_length > self.duty_cycle * self.n_fast:
            raise ParameterError(f"code of {self.code_length} samples exceeds {self.duty_cycle:.0%} of the "
                                 f"{self.n_fast}-sample PRI")

    @property
    def n_fast(self) -> int:
        return int(round(self.pri_s * self.sample_rate_hz))

    def delay_samples(self, delay_s: float) -> int:
        return int(round(delay_s * self.sample_rate_hz))


def steering_vector(angle_deg: float, n_rx: int) -> np.ndarray:
    """Half-wavelength ULA: element e gets e^{j*pi*e*sin(angle)}."""
    return np.exp(1j * np.pi * np.arange(n_rx) * np.sin(np.deg2rad(angle_deg)))


def _check_waveforms(waveforms: SequenceSet, params: RadarParams) -> None:
    if waveforms.M != params.n_tx or waveforms.N != params.code_length:
        raise ParameterError(f"waveforms are {waveforms.M} x {waveforms.N}, radar expects "
                             f"{params.n_tx} x {params.code_length}")


def transmit_train(waveforms: SequenceSet, params: RadarParams) -> np.ndarray:
    """Superposed transmit signal over n_pulses PRIs at tx_power_dbm per transmitter."""
    _check_waveforms(waveforms, params)
    train = np.zeros((params.n_pulses, params.n_fast), dtype=complex)
    train[:, :params.code_length] = waveforms.entries.sum(axis=0)
    return train.ravel() * np.sqrt(db_to_power(params.tx_power_dbm))


def gen_echo(waveforms: SequenceSet, targets: Sequence[Target], params: RadarParams,
             interference: Optional[np.ndarray] = None, rng: RngSpec = RngSpec(0)) -> np.ndarray:
    """Received cube (n_rx, n_pulses, n_fast)."""
    _check_waveforms(waveforms, params)
    N, P, F = params.code_length, params.n_pulses, params.n_fast
    cube = np.zeros((params.n_rx, P, F), dtype=complex)
    tx = waveforms.entries.sum(axis=0)
    pulses = np.arange(P)
    for target in targets:
        start = params.delay_samples(target.delay_s)
        if start + N > F:
            raise ParameterError(f"target delay {target.delay_s:g} s puts the echo past the "
                                 f"{F}-sample fast-time window")
        amplitude = np.sqrt(db_to_power(params.tx_power_dbm - target.attenuation_db))
        rotation = np.exp(2j * np.pi * target.normalized_doppler * pulses)
        steer = steering_vector(target.angle_deg, params.n_rx)
        cube[:, :, start:start + N] += amplitude * steer[:, None, None] * rotation[None, :, None] * tx
    if params.noise_power_db is not None:
        gen = make_rng(rng)
        sigma = np.sqrt(db_to_power(params.noise_power_db) / 2.0)
        cube += sigma * (gen.standard_normal(cube.shape) + 1j * gen.standard_normal(cube.shape))
    if interference is not None:
        interference = np.asarray(interference, dtype=complex).ravel()
        if interference.size < P * F:
            raise ParameterError(f"interference has {interference.size} samples, need {P * F}")
        cube += interference[:P * F].reshape(P, F)[None]
    return cube


def matched_filter(rx_cube: np.ndarray, waveforms: SequenceSet) -> np.ndarray:
    """
    y[k] = sum_n r[k+n] conj(x_m[n]) for every tx waveform m and rx stream;
    output (n_tx, n_rx, n_pulses, n_fast), cell k = delay of k samples.
    """
    rx_cube = np.asarray(rx_cube, dtype=complex)
    if rx_cube.ndim != 3:
        raise ParameterError(f"rx cube must be (rx, pulse, fast), got shape {rx_cube.shape}")
    N = waveforms.N
    n_fast = rx_cube.shape[-1]
    if n_fast < N:
        raise ParameterError(f"fast-time window ({n_fast}) shorter than the code ({N})")
    out = np.empty((waveforms.M,) + rx_cube.shape, dtype=complex)
    for m, x in enumerate(waveforms.entries):
        kernel = np.conj(x[::-1])[None, None, :]
        out[m] = fftconvolve(rx_cube, kernel, mode="full", axes=-1)[..., N - 1:N - 1 + n_fast]
    return out


@dataclass(eq=False)
class RangeDopplerMap:
    """|value| per (tx, rx) over range cells x Doppler bins (FFT order, bin 0 = zero Doppler)."""

    magnitude: np.ndarray
    cell_delay_s: np.ndarray = field(repr=False)
    doppler: np.ndarray = field(repr=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.magnitude.shape[-2:]

    def combined_power(self) -> np.ndarray:
        """Power summed over every (tx, rx) pair."""
        return np.sum(self.magnitude ** 2, axis=(0, 1))

    def doppler_bin(self, normalized_doppler: float) -> int:
        n = self.shape[1]
        return int(np.floor(normalized_doppler * n + 0.5)) % n

    def range_cell(self, delay_s: float) -> int:
        step = self.cell_delay_s[1] - self.cell_delay_s[0] if self.cell_delay_s.size > 1 else 1.0
        return int(round(delay_s / step))


def range_doppler(mf_outputs: np.ndarray, n_pulses: Optional[int] = None, window: str = "rectangular",
                  sample_rate_hz: float = 1.0) -> RangeDopplerMap:
    """Slow-time DFT per range cell; Doppler bin b <-> b / n_pulses wrapped to (-0.5, 0.5]."""
    mf_outputs = np.asarray(mf_outputs)
    if mf_outputs.ndim != 4:
        raise ParameterError(f"matched-filter output must be (tx, rx, pulse, fast), got {mf_outputs.shape}")
    P = mf_outputs.shape[2]
    if n_pulses is not None and n_pulses != P:
        raise ParameterError(f"expected {n_pulses} pulses, got {P}")
    if P < 2:
        raise ParameterError("range-Doppler processing needs at least 2 pulses")
    if window not in WINDOWS:
        raise ParameterError(f"unknown window '{window}'; choose one of {', '.join(WINDOWS)}")
    w = get_window(WINDOWS[window], P, fftbins=True)
    spectrum = np.fft.fft(mf_outputs * w[None, None, :, None], axis=2)
    magnitude = np.abs(np.swapaxes(spectrum, 2, 3))
    doppler = np.arange(P) / P
    doppler = np.where(doppler > 0.5, doppler - 1.0, doppler)
    delays = np.arange(mf_outputs.shape[3]) / sample_rate_hz
    return RangeDopplerMap(magnitude, delays, doppler)


def measure_sinr(rd_map: RangeDopplerMap, cell: Tuple[int, int], guard: int = 2, training: int = 4) -> float:
    """
    Peak power within +-1 cell of `cell` over the mean power of the training
    ring: cells at Chebyshev distance guard < d <= guard + training from the
    peak (Doppler wraps, range does not).
    """
    if int(guard) != guard or guard < 0 or int(training) != training or training < 1:
        raise ParameterError(f"guard must be >= 0 and training >= 1, got guard={guard}, training={training}")
    power = rd_map.combined_power()
    n_range, n_doppler = power.shape
    r0, b0 = int(cell[0]), int(cell[1])
    if not 0 <= r0 < n_range:
        raise ParameterError(f"range cell {r0} outside 0..{n_range - 1}")

    best, peak = None, -np.inf
    for r in range(max(r0 - 1, 0), min(r0 + 1, n_range - 1) + 1):
        for db in (-1, 0, 1):
            b = (b0 + db) % n_doppler
            if power[r, b] > peak:
                best, peak = (r, b), power[r, b]
    rp, bp = best

    reach = guard + training
    ring = set()
    for dr in range(-reach, reach + 1):
        r = rp + dr
        if not 0 <= r < n_range:
            continue
        for db in range(-reach, reach + 1):
            b = (bp + db) % n_doppler
            circular = min((b - bp) % n_doppler, (bp - b) % n_doppler)
            if guard < max(abs(dr), circular) <= reach:
                ring.add((r, b))
    if not ring:
        raise ParameterError(f"training ring around cell ({rp}, {bp}) is empty")
    floor = float(np.mean([power[r, b] for r, b in sorted(ring)]))
    logger.debug("SINR cell (%d, %d): peak %.3g, floor %.3g over %d cells", rp, bp, peak, floor, len(ring))
    if not floor > 0:
        logger.warning("SINR at cell (%d, %d): training ring has zero power, reporting %s",
                       rp, bp, "inf" if peak > 0 else "nan")
        return float("inf") if peak > 0 else float("nan")
    return power_db(peak / floor)


def write_rd_csv(path: str, rd_map: RangeDopplerMap) -> str:
    """range_cell,doppler_bin,mag_db of the combined map."""
    db = power_db(rd_map.combined_power())
    n_range, n_doppler = db.shape
    rows = ([r, b, float(db[r, b])] for r in range(n_range) for b in range(n_doppler))
    return write_csv(path, ["range_cell", "doppler_bin", "mag_db"], rows)
