#!/usr/bin/env python3
"""
JSON run configurations for the CLI commands, parsed into frozen dataclasses.

Every problem is reported as ConfigError("<dotted.field.path>: <message>");
unknown keys are rejected. Physical quantities carry unit suffixes in their
field names (_hz, _s, _db, _dbm).
"""

import json
from dataclasses import MISSING, dataclass, fields
from typing import Any, Dict, List, Optional, Tuple

from lte_interference import InterferenceSpec, mcs_order
from radar_sim import RadarParams, Target
from radar_utils import ParameterError
from sequence_set import PhaseAlphabet
from spectral_mask import WINDOWS
from spectrum_sensing import SENSING_MODES
from coexistence import CoexistenceScenario
from waveform_library import WAVEFORM_NAMES


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending field path."""


def load_config(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON config document; no path means an empty document (all defaults)."""
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except ValueError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


# --------------------------------------------------------------------------- #
# Field readers
# --------------------------------------------------------------------------- #
def _object(value: Any, path: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _reject_unknown(data: Dict[str, Any], allowed, path: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown field")


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _string(value: Any, path: str, choices=None) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}: must be one of {', '.join(choices)}, got {value!r}")
    return value


def _boolean(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true or false, got {value!r}")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list")
    return value


def _theta(value: Any, path: str) -> float:
    theta = _number(value, path)
    if not 0.0 <= theta <= 1.0:
        raise ConfigError(f"{path}: must lie in [0, 1], got {theta}")
    return theta


def _stopbands(value: Any, path: str) -> Tuple[Tuple[float, float], ...]:
    out = []
    for i, band in enumerate(_list(value, path)):
        item = f"{path}[{i}]"
        band = _list(band, item)
        if len(band) != 2:
            raise ConfigError(f"{item}: expected [lo, hi]")
        out.append((_number(band[0], f"{item}[0]"), _number(band[1], f"{item}[1]")))
    return tuple(out)


def _dataclass(cls, value: Any, path: str, readers: Dict[str, Any]):
    """Build a library dataclass from an object, one reader per accepted field."""
    data = _object(value, path)
    _reject_unknown(data, readers, path)
    for f in fields(cls):
        if f.default is MISSING and f.default_factory is MISSING and f.name not in data:
            raise ConfigError(f"{path}.{f.name}: required")
    kwargs = {key: readers[key](data[key], f"{path}.{key}") for key in data}
    try:
        return cls(**kwargs)
    except ParameterError as e:
        raise ConfigError(f"{path}: {e}") from e


# --------------------------------------------------------------------------- #
# design
# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class DesignConfig:
    M: int = 4
    N: int = 64
    alphabet: PhaseAlphabet = PhaseAlphabet.continuous()
    thetas: Tuple[float, ...] = (0.5,)
    stopbands: Tuple[Tuple[float, float], ...] = ()
    mask_file: Optional[str] = None
    init: str = "random"
    init_file: Optional[str] = None
    seed: int = 0
    zeta: float = 1e-5
    max_sweeps: int = 1000
    grid_points: int = 1024
    relaxation: float = 1.9


_DESIGN_KEYS = ("M", "N", "alphabet", "L", "theta", "stopbands", "mask_file", "init", "init_file",
                "seed", "zeta", "max_sweeps", "grid_points", "relaxation")


def parse_design(raw: Dict[str, Any], path: str = "design") -> DesignConfig:
    data = _object(raw, path)
    _reject_unknown(data, _DESIGN_KEYS, path)
    cfg = DesignConfig()
    kind = _string(data.get("alphabet", "continuous"), f"{path}.alphabet", ("continuous", "discrete"))
    if kind == "discrete":
        if "L" not in data:
            raise ConfigError(f"{path}.L: required for a discrete alphabet")
        alphabet = PhaseAlphabet.discrete(_integer(data["L"], f"{path}.L", 2))
    else:
        if "L" in data:
            raise ConfigError(f"{path}.L: only valid with a discrete alphabet")
        alphabet = PhaseAlphabet.continuous()
    theta = data.get("theta", list(cfg.thetas))
    if isinstance(theta, list):
        if not theta:
            raise ConfigError(f"{path}.theta: list must not be empty")
        thetas = tuple(_theta(t, f"{path}.theta[{i}]") for i, t in enumerate(theta))
    else:
        thetas = (_theta(theta, f"{path}.theta"),)
    if "stopbands" in data and "mask_file" in data:
        raise ConfigError(f"{path}.mask_file: give either stopbands or mask_file, not both")
    init = _string(data.get("init", cfg.init), f"{path}.init", ("random", "file") + WAVEFORM_NAMES)
    if init == "file" and "init_file" not in data:
        raise ConfigError(f"{path}.init_file: required when init is 'file'")
    zeta = _number(data.get("zeta", cfg.zeta), f"{path}.zeta")
    if zeta <= 0:
        raise ConfigError(f"{path}.zeta: must be positive, got {zeta}")
    relaxation = _number(data.get("relaxation", cfg.relaxation), f"{path}.relaxation")
    if not 1.0 <= relaxation < 2.0:
        raise ConfigError(f"{path}.relaxation: must lie in [1, 2), got {relaxation}")
    return DesignConfig(
        M=_integer(data.get("M", cfg.M), f"{path}.M", 1),
        N=_integer(data.get("N", cfg.N), f"{path}.N", 1),
        alphabet=alphabet,
        thetas=thetas,
        stopbands=_stopbands(data.get("stopbands", []), f"{path}.stopbands"),
        mask_file=_string(data["mask_file"], f"{path}.mask_file") if "mask_file" in data else None,
        init=init,
        init_file=_string(data["init_file"], f"{path}.init_file") if "init_file" in data else None,
        seed=_integer(data.get("seed", cfg.seed), f"{path}.seed", 0),
        zeta=zeta,
        max_sweeps=_integer(data.get("max_sweeps", cfg.max_sweeps), f"{path}.max_sweeps", 1),
        grid_points=_integer(data.get("grid_points", cfg.grid_points), f"{path}.grid_points", 8),
        relaxation=relaxation,
    )


# --------------------------------------------------------------------------- #
# evaluate
# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class EvaluateConfig:
    sequences: str
    L: Optional[int] = None
    stopbands: Tuple[Tuple[float, float], ...] = ()
    mask_file: Optional[str] = None
    psd_nfft: int = 1024
    psd_window: str = "rectangular"


def parse_evaluate(raw: Dict[str, Any], path: str = "evaluate") -> EvaluateConfig:
    data = _object(raw, path)
    _reject_unknown(data, [f.name for f in fields(EvaluateConfig)], path)
    if "sequences" not in data:
        raise ConfigError(f"{path}.sequences: required")
    if "stopbands" in data and "mask_file" in data:
        raise ConfigError(f"{path}.mask_file: give either stopbands or mask_file, not both")
    return EvaluateConfig(
        sequences=_string(data["sequences"], f"{path}.sequences"),
        L=_integer(data["L"], f"{path}.L", 2) if "L" in data else None,
        stopbands=_stopbands(data.get("stopbands", []), f"{path}.stopbands"),
        mask_file=_string(data["mask_file"], f"{path}.mask_file") if "mask_file" in data else None,
        psd_nfft=_integer(data.get("psd_nfft", 1024), f"{path}.psd_nfft", 1),
        psd_window=_string(data.get("psd_window", "rectangular"), f"{path}.psd_window", tuple(WINDOWS)),
    )


# --------------------------------------------------------------------------- #
# simulate
# --------------------------------------------------------------------------- #
def _optional_number(value: Any, path: str) -> Optional[float]:
    return None if value is None else _number(value, path)


_RADAR_READERS = {
    "n_tx": lambda v, p: _integer(v, p, 1),
    "n_rx": lambda v, p: _integer(v, p, 1),
    "code_length": lambda v, p: _integer(v, p, 1),
    "pri_s": _number,
    "n_pulses": lambda v, p: _integer(v, p, 1),
    "sample_rate_hz": _number,
    "noise_power_db": _optional_number,
    "tx_power_dbm": _number,
    "duty_cycle": _number,
}

_TARGET_READERS = {
    "delay_s": _number,
    "normalized_doppler": _number,
    "angle_deg": _number,
    "attenuation_db": _number,
}


def _allocation(value: Any, path: str) -> str:
    text = _string(value, path)
    if not text or set(text) - {"0", "1"}:
        raise ConfigError(f"{path}: must be a nonempty string of 0 and 1")
    return text


_INTERFERENCE_READERS = {
    "allocation": _allocation,
    "prb_per_bit": lambda v, p: _integer(v, p, 1),
    "bandwidth_hz": _number,
    "center_offset_hz": _number,
    "power_dbm": _number,
    "subcarriers_per_prb": lambda v, p: _integer(v, p, 1),
    "subcarrier_spacing_hz": _number,
    "sample_rate_hz": _number,
    "constellation": lambda v, p: _integer(v, p, 4),
}


def parse_radar(value: Any, path: str) -> RadarParams:
    return _dataclass(RadarParams, value, path, _RADAR_READERS)


def parse_target(value: Any, path: str) -> Target:
    return _dataclass(Target, value, path, _TARGET_READERS)


def parse_interference(value: Any, path: str) -> InterferenceSpec:
    return _dataclass(InterferenceSpec, value, path, _INTERFERENCE_READERS)


def _mcs_list(value: Any, path: str) -> Tuple[str, ...]:
    labels = []
    for i, label in enumerate(_list(value, path)):
        label = _string(label, f"{path}[{i}]")
        try:
            mcs_order(label)
        except ParameterError as e:
            raise ConfigError(f"{path}[{i}]: {e}") from e
        labels.append(label.upper())
    return tuple(labels)


def _number_list(value: Any, path: str) -> Tuple[float, ...]:
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(_list(value, path)))


_SCENARIO_READERS = {
    "radar": parse_radar,
    "targets": lambda v, p: tuple(parse_target(t, f"{p}[{i}]") for i, t in enumerate(_list(v, p))),
    "interference": parse_interference,
    "lte_powers_dbm": _number_list,
    "mcs": _mcs_list,
    "n_trials": lambda v, p: _integer(v, p, 1),
    "seed": lambda v, p: _integer(v, p, 0),
    "theta": _theta,
    "design_max_sweeps": lambda v, p: _integer(v, p, 1),
    "design_zeta": _number,
    "grid_points": lambda v, p: _integer(v, p, 8),
    "sensing_samples": lambda v, p: _integer(v, p, 2),
    "sensing_bin_hz": _number,
    "sensing_threshold_db": _number,
    "sensing_mode": lambda v, p: _string(v, p, SENSING_MODES),
    "sensing_calibrated_floor": _boolean,
    "coupling_loss_db": _number,
    "comms_noise_dbm": _number,
    "rd_window": lambda v, p: _string(v, p, tuple(WINDOWS)),
    "guard": lambda v, p: _integer(v, p, 0),
    "training": lambda v, p: _integer(v, p, 1),
    "workers": lambda v, p: _integer(v, p, 1),
}


def parse_simulate(raw: Dict[str, Any], path: str = "simulate") -> CoexistenceScenario:
    return _dataclass(CoexistenceScenario, raw, path, _SCENARIO_READERS)


# --------------------------------------------------------------------------- #
# sense
# --------------------------------------------------------------------------- #
SIGNAL_SOURCES = ("lte", "silence", "tone_comb", "file")


@dataclass(frozen=True)
class SenseConfig:
    source: str = "lte"
    signal_file: Optional[str] = None
    interference: InterferenceSpec = InterferenceSpec(center_offset_hz=10e6, power_dbm=20.0)
    tone_spacing_hz: float = 1e6
    tone_power_dbm: float = 10.0
    samples: int = 65536
    seed: int = 0
    sample_rate_hz: float = 40e6
    noise_power_db: float = 0.0
    bin_hz: float = 1e6
    threshold_db: float = 10.0
    mode: str = "average"
    calibrated_floor: bool = False
    radar_center_hz: float = 0.0
    radar_bandwidth_hz: float = 40e6
    N: int = 400


_SENSE_READERS = {
    "source": lambda v, p: _string(v, p, SIGNAL_SOURCES),
    "signal_file": _string,
    "interference": parse_interference,
    "tone_spacing_hz": _number,
    "tone_power_dbm": _number,
    "samples": lambda v, p: _integer(v, p, 2),
    "seed": lambda v, p: _integer(v, p, 0),
    "sample_rate_hz": _number,
    "noise_power_db": _number,
    "bin_hz": _number,
    "threshold_db": _number,
    "mode": lambda v, p: _string(v, p, SENSING_MODES),
    "calibrated_floor": _boolean,
    "radar_center_hz": _number,
    "radar_bandwidth_hz": _number,
    "N": lambda v, p: _integer(v, p, 1),
}


def parse_sense(raw: Dict[str, Any], path: str = "sense") -> SenseConfig:
    cfg = _dataclass(SenseConfig, raw, path, _SENSE_READERS)
    if cfg.source == "file" and not cfg.signal_file:
        raise ConfigError(f"{path}.signal_file: required when source is 'file'")
    if cfg.source == "lte" and abs(cfg.interference.sample_rate_hz - cfg.sample_rate_hz) > 1e-6:
        raise ConfigError(f"{path}.interference.sample_rate_hz: must equal {path}.sample_rate_hz")
    if cfg.tone_spacing_hz <= 0:
        raise ConfigError(f"{path}.tone_spacing_hz: must be positive")
    return cfg


PARSERS = {
    "design": parse_design,
    "evaluate": parse_evaluate,
    "simulate": parse_simulate,
    "sense": parse_sense,
}


def apply_overrides(raw: Dict[str, Any], command: str, *, theta: Optional[List[float]] = None,
                    seed: Optional[int] = None, stopbands: Optional[List[Tuple[float, float]]] = None,
                    trials: Optional[int] = None, workers: Optional[int] = None) -> Dict[str, Any]:
    """Copy of raw with CLI flag values written into the fields they override."""
    out = json.loads(json.dumps(raw))
    if theta:
        if command not in ("design", "simulate"):
            raise ConfigError(f"--theta: not accepted by '{command}'")
        out["theta"] = theta if command == "design" and len(theta) > 1 else theta[0]
    if seed is not None:
        if command == "evaluate":
            raise ConfigError("--seed: 'evaluate' is deterministic and takes no seed")
        out["seed"] = seed
    if stopbands:
        if command not in ("design", "evaluate"):
            raise ConfigError(f"--stopband: not accepted by '{command}'")
        out.pop("mask_file", None)
        out["stopbands"] = [list(b) for b in stopbands]
    for flag, value, key in (("--trials", trials, "n_trials"), ("--workers", workers, "workers")):
        if value is None:
            continue
        if command != "simulate":
            raise ConfigError(f"{flag}: not accepted by '{command}'")
        out[key] = value
    return out
