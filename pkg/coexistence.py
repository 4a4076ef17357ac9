#!/usr/bin/env python3
"""
Radar/LTE coexistence experiment in four steps, repeated over an LTE power
sweep and averaged over Monte-Carlo trials:

  1. radar only (no interference): clean SINR per target
  2. comms only: EVM / symbol-error rate per MCS label
  3. mutual interference with random-phase radar waveforms
  4. mutual interference with waveforms designed on the sensed mask

Sensing and the design run once per experiment; every trial then draws its
own LTE symbols and noise from a dedicated RNG stream, and steps 3 and 4 share
those draws so the comparison is paired.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from lte_interference import (
    InterferenceSpec,
    DEFAULT_ALLOCATION,
    generate_frame,
    link_metrics,
    mcs_order,
)
from radar_sim import (
    RadarParams,
    RangeDopplerMap,
    Target,
    gen_echo,
    matched_filter,
    measure_sinr,
    range_doppler,
    transmit_train,
)
from radar_utils import DegenerateMaskError, ParameterError, RngSpec, db_to_power, make_rng, power_db, write_csv
from sequence_set import PhaseAlphabet, SequenceSet, random_phase_set
from spectral_mask import SpectralMask
from spectrum_sensing import Band, energy_detect, noise_density_db, sense_to_mask
from waveform_design import CdConfig, DesignResult, cd_design

logger = logging.getLogger(__name__)

DEFAULT_TARGETS: Tuple[Target, ...] = (
    Target(delay_s=2e-6, normalized_doppler=0.2, angle_deg=25.0, attenuation_db=30.0),
    Target(delay_s=2.6e-6, normalized_doppler=-0.25, angle_deg=15.0, attenuation_db=35.0),
)

STEP_RADAR_ONLY = "step1"
STEP_COMMS_ONLY = "step2"
STEP_RANDOM = "step3"
STEP_OPTIMIZED = "step4"

# RNG stream layout: stream 0 draws the random-phase waveforms; each trial owns
# a block of streams after that.
_STREAMS_PER_TRIAL = 8
_PURPOSE_CLEAN_NOISE, _PURPOSE_RADAR_LTE, _PURPOSE_RADAR_NOISE = 0, 1, 2
_PURPOSE_COMMS_LTE, _PURPOSE_COMMS_NOISE = 3, 4
_PURPOSE_SENSING_LTE, _PURPOSE_SENSING_NOISE = 5, 6


@dataclass(frozen=True)
class CoexistenceScenario:
    radar: RadarParams = RadarParams()
    targets: Tuple[Target, ...] = DEFAULT_TARGETS
    interference: InterferenceSpec = InterferenceSpec(allocation=DEFAULT_ALLOCATION, center_offset_hz=10e6,
                                                      power_dbm=20.0)
    lte_powers_dbm: Tuple[float, ...] = (5.0, 10.0, 15.0, 20.0)
    mcs: Tuple[str, ...] = ("MCS0", "MCS10", "MCS17")
    n_trials: int = 10
    seed: int = 0
    theta: float = 0.75
    design_max_sweeps: int = 50
    design_zeta: float = 1e-5
    grid_points: int = 1024
    sensing_samples: int = 65536
    sensing_bin_hz: float = 1e6
    sensing_threshold_db: float = 10.0
    sensing_mode: str = "average"
    sensing_calibrated_floor: bool = False
    coupling_loss_db: float = 10.0
    comms_noise_dbm: float = -20.0
    rd_window: str = "hann"
    guard: int = 2
    training: int = 4
    workers: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ParameterError(f"n_trials must be >= 1, got {self.n_trials}")
        if not self.lte_powers_dbm:
            raise ParameterError("lte_powers_dbm must list at least one power")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        if abs(self.interference.sample_rate_hz - self.radar.sample_rate_hz) > 1e-6:
            raise ParameterError("interference and radar must share one sample rate")
        for label in self.mcs:
            mcs_order(label)

    def rng(self, trial: int, purpose: int) -> RngSpec:
        return RngSpec(self.seed, 1 + trial * _STREAMS_PER_TRIAL + purpose)


@dataclass
class SensingReport:
    bands: List[Band]
    mask: Optional[SpectralMask]
    error: Optional[str] = None


@dataclass
class TrialResult:
    trial: int
    sinr_db: Dict[Tuple[str, Optional[float], int], float]
    comms: Dict[Tuple[str, float, str], Tuple[float, float]]
    maps: Dict[str, RangeDopplerMap] = field(default_factory=dict, repr=False)


@dataclass
class CoexistenceReport:
    scenario: CoexistenceScenario
    sensing: SensingReport
    design: DesignResult
    random_waveforms: SequenceSet
    trials: List[TrialResult]
    sinr_db: Dict[Tuple[str, Optional[float], int], float]
    evm_db: Dict[Tuple[str, float, str], float]
    ser: Dict[Tuple[str, float, str], float]

    @property
    def optimized_waveforms(self) -> SequenceSet:
        return self.design.final


# --------------------------------------------------------------------------- #
# Sensing and design (once per experiment)
# --------------------------------------------------------------------------- #
def sense(scenario: CoexistenceScenario) -> SensingReport:
    """Capture LTE plus receiver noise, detect occupied bands, build the design mask."""
    radar = scenario.radar
    capture = generate_frame(scenario.interference, scenario.sensing_samples,
                             scenario.rng(0, _PURPOSE_SENSING_LTE)).signal
    noise_db = radar.noise_power_db if radar.noise_power_db is not None else -300.0
    gen = make_rng(scenario.rng(0, _PURPOSE_SENSING_NOISE))
    sigma = np.sqrt(db_to_power(noise_db) / 2.0)
    capture = capture + sigma * (gen.standard_normal(capture.size) + 1j * gen.standard_normal(capture.size))
    floor = noise_density_db(noise_db, radar.sample_rate_hz) if scenario.sensing_calibrated_floor else None
    bands = energy_detect(capture, radar.sample_rate_hz, scenario.sensing_bin_hz, scenario.sensing_threshold_db,
                          mode=scenario.sensing_mode, noise_floor_db=floor)
    try:
        mask = sense_to_mask(bands, 0.0, radar.sample_rate_hz, radar.code_length)
    except DegenerateMaskError as e:
        logger.warning("Sensing declined transmission: %s", e)
        return SensingReport(bands, None, str(e))
    return SensingReport(bands, mask)


def design_waveforms(scenario: CoexistenceScenario, mask: SpectralMask) -> Tuple[SequenceSet, DesignResult]:
    radar = scenario.radar
    alphabet = PhaseAlphabet.continuous()
    init = random_phase_set(radar.n_tx, radar.code_length, alphabet, RngSpec(scenario.seed, 0))
    config = CdConfig(theta=scenario.theta, alphabet=alphabet, zeta=scenario.design_zeta,
                      max_sweeps=scenario.design_max_sweeps, grid_points=scenario.grid_points)
    return init, cd_design(init, mask, config)


# --------------------------------------------------------------------------- #
# One Monte-Carlo trial
# --------------------------------------------------------------------------- #
def _radar_sinr(scenario: CoexistenceScenario, waveforms: SequenceSet, interference: Optional[np.ndarray],
                noise_rng: RngSpec) -> Tuple[List[float], RangeDopplerMap]:
    radar = scenario.radar
    cube = gen_echo(waveforms, scenario.targets, radar, interference, noise_rng)
    rd = range_doppler(matched_filter(cube, waveforms), radar.n_pulses, scenario.rd_window, radar.sample_rate_hz)
    sinrs = []
    for target in scenario.targets:
        cell = (radar.delay_samples(target.delay_s), rd.doppler_bin(target.normalized_doppler))
        sinrs.append(measure_sinr(rd, cell, scenario.guard, scenario.training))
    return sinrs, rd


def _comms_noise(scenario: CoexistenceScenario, n: int, rng: RngSpec) -> np.ndarray:
    gen = make_rng(rng)
    sigma = np.sqrt(db_to_power(scenario.comms_noise_dbm) / 2.0)
    return sigma * (gen.standard_normal(n) + 1j * gen.standard_normal(n))


def run_trial(scenario: CoexistenceScenario, trial: int, random_wf: SequenceSet,
              optimized_wf: SequenceSet) -> TrialResult:
    radar = scenario.radar
    n_samples = radar.n_pulses * radar.n_fast
    sinr: Dict[Tuple[str, Optional[float], int], float] = {}
    comms: Dict[Tuple[str, float, str], Tuple[float, float]] = {}
    maps: Dict[str, RangeDopplerMap] = {}

    clean, maps[STEP_RADAR_ONLY] = _radar_sinr(scenario, random_wf, None, scenario.rng(trial, _PURPOSE_CLEAN_NOISE))
    for i, value in enumerate(clean):
        sinr[(STEP_RADAR_ONLY, None, i)] = value

    coupling = np.sqrt(db_to_power(-scenario.coupling_loss_db))
    leak_random = transmit_train(random_wf, radar) * coupling
    leak_optimized = transmit_train(optimized_wf, radar) * coupling
    comms_noise = _comms_noise(scenario, n_samples, scenario.rng(trial, _PURPOSE_COMMS_NOISE))

    for p in scenario.lte_powers_dbm:
        spec = replace(scenario.interference, power_dbm=p)
        lte = generate_frame(spec, n_samples, scenario.rng(trial, _PURPOSE_RADAR_LTE)).signal
        noise_rng = scenario.rng(trial, _PURPOSE_RADAR_NOISE)
        for step, wf in ((STEP_RANDOM, random_wf), (STEP_OPTIMIZED, optimized_wf)):
            values, rd = _radar_sinr(scenario, wf, lte, noise_rng)
            for i, value in enumerate(values):
                sinr[(step, p, i)] = value
            if p == max(scenario.lte_powers_dbm):
                maps[step] = rd

        for label in scenario.mcs:
            frame = generate_frame(replace(spec, constellation=mcs_order(label)), n_samples,
                                   scenario.rng(trial, _PURPOSE_COMMS_LTE))
            base = frame.signal + comms_noise
            for step, leak in ((STEP_COMMS_ONLY, None), (STEP_RANDOM, leak_random), (STEP_OPTIMIZED, leak_optimized)):
                metrics = link_metrics(frame, base if leak is None else base + leak)
                comms[(step, p, label)] = (metrics.evm_db, metrics.ser)
    logger.debug("Trial %d done", trial)
    return TrialResult(trial, sinr, comms, maps)


# --------------------------------------------------------------------------- #
# Whole experiment
# --------------------------------------------------------------------------- #
def _linear_mean_db(values: Sequence[float]) -> float:
    return power_db(float(np.mean(db_to_power(np.asarray(values)))))


def run_trials(scenario: CoexistenceScenario, random_wf: SequenceSet, optimized_wf: SequenceSet) -> List[TrialResult]:
    """Trials in order; with workers > 1 they run on a thread pool and are reduced in trial order."""
    if scenario.workers == 1:
        return [run_trial(scenario, t, random_wf, optimized_wf) for t in range(scenario.n_trials)]
    with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
        return list(pool.map(lambda t: run_trial(scenario, t, random_wf, optimized_wf), range(scenario.n_trials)))


def aggregate(trials: Sequence[TrialResult]):
    """Linear-power means over trials: SINR and EVM in dB, SER as a plain mean."""
    sinr = {key: _linear_mean_db([t.sinr_db[key] for t in trials]) for key in trials[0].sinr_db}
    evm = {key: _linear_mean_db([t.comms[key][0] for t in trials]) for key in trials[0].comms}
    ser = {key: float(np.mean([t.comms[key][1] for t in trials])) for key in trials[0].comms}
    return sinr, evm, ser


def run_coexistence(scenario: CoexistenceScenario, sensing: Optional[SensingReport] = None) -> CoexistenceReport:
    """
    Full experiment. Raises DegenerateMaskError when sensing leaves no band to
    transmit in; pass a precomputed SensingReport to reuse one capture.
    """
    sensing = sensing or sense(scenario)
    if sensing.mask is None:
        raise DegenerateMaskError(sensing.error or "sensing produced no usable mask")
    random_wf, design = design_waveforms(scenario, sensing.mask)
    logger.info("Running %d trial(s) over LTE powers %s dBm", scenario.n_trials, list(scenario.lte_powers_dbm))
    trials = run_trials(scenario, random_wf, design.final)
    sinr, evm, ser = aggregate(trials)
    return CoexistenceReport(scenario, sensing, design, random_wf, trials, sinr, evm, ser)


def _metric_name(step: str, power: Optional[float], subject: str, metric: str) -> str:
    if power is None:
        return f"{step}.{subject}.{metric}"
    return f"{step}.lte{power:g}dBm.{subject}.{metric}"


def write_trials_csv(path: str, report: CoexistenceReport) -> str:
    """trial,metric,value_db for every per-trial measurement (SER is a plain ratio)."""
    rows = []
    for t in report.trials:
        for (step, p, i), value in t.sinr_db.items():
            rows.append([t.trial, _metric_name(step, p, f"target{i + 1}", "sinr"), value])
        for (step, p, label), (evm_db, ser) in t.comms.items():
            rows.append([t.trial, _metric_name(step, p, label, "evm"), evm_db])
            rows.append([t.trial, _metric_name(step, p, label, "ser"), ser])
    return write_csv(path, ["trial", "metric", "value_db"], rows)


def write_radar_summary_csv(path: str, report: CoexistenceReport) -> str:
    def order(item):
        step, p, i = item[0]
        return step, -np.inf if p is None else p, i

    rows = [[step, p, i + 1, value] for (step, p, i), value in sorted(report.sinr_db.items(), key=order)]
    return write_csv(path, ["step", "lte_power_dbm", "target", "sinr_db"], rows)


def write_comms_summary_csv(path: str, report: CoexistenceReport) -> str:
    rows = [[step, p, label, report.evm_db[(step, p, label)], report.ser[(step, p, label)]]
            for (step, p, label) in report.evm_db]
    return write_csv(path, ["step", "lte_power_dbm", "mcs", "evm_db", "ser"], rows)
