#!/usr/bin/env python3
"""
Command-line entry point for the cognitive MIMO radar tools.

  design    coordinate-descent sequence design on a stopband mask
  evaluate  spectral and correlation metrics of a saved sequence set
  simulate  four-step radar/LTE coexistence experiment
  sense     energy-detector sensing -> occupied bands + mask file
  replay    re-run a command from its manifest.json

Each command reads one JSON config (see run_config.py), writes CSV/JSON
artifacts plus manifest.json to --out (default data/<command>/) and exits with
0 on success, 1 on a usage/config error, 2 when it finished with warnings
(design not converged, sensing left nothing to transmit in).
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from coexistence import (
    STEP_OPTIMIZED,
    STEP_RADAR_ONLY,
    STEP_RANDOM,
    run_coexistence,
    sense,
    write_comms_summary_csv,
    write_radar_summary_csv,
    write_trials_csv,
)
from correlation import CorrelationKind, islr_db, mean_peak_xcorr_db, peak_xcorr_db, summarize, write_profile_csv, xcorr
from lte_interference import gen_interference
from radar_sim import write_rd_csv
from radar_utils import DegenerateMaskError, ParameterError, RngSpec, make_rng, power_db, read_csv, write_csv
from run_config import (
    ConfigError,
    DesignConfig,
    SenseConfig,
    apply_overrides,
    load_config,
    parse_design,
    parse_evaluate,
    parse_sense,
    parse_simulate,
)
from run_manifest import RunManifest, load_manifest
from sequence_set import SequenceSet, load_csv, quantize_to_alphabet, random_phase_set, save_csv
from spectral_mask import band_to_bins, load_mask, parse_stopband, psd, save_mask, silr_terms, stopband_psd_gap_db, write_psd_csv
from spectrum_sensing import energy_detect, noise_density_db, sense_to_mask, write_bands_csv
from waveform_design import CdConfig, cd_design, write_trace_csv
from waveform_library import standard_waveform

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_WARNINGS = 2


def _configure_logging(verbose: bool) -> None:
    # Set LOG_LEVEL=DEBUG in .env for per-sweep detail
    if not logging.getLogger().handlers:
        level_name = os.getenv("LOG_LEVEL", "INFO").upper()
        level = getattr(logging, level_name, logging.INFO)
        logging.basicConfig(level=level, format="%(name)s %(levelname)s %(message)s")
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


def _finite(value: Optional[float]) -> Optional[float]:
    """JSON-safe number: nan/inf become null."""
    if value is None or not np.isfinite(value):
        return None
    return float(value)


def _write_json(path: str, payload: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


# --------------------------------------------------------------------------- #
# design
# --------------------------------------------------------------------------- #
def _initial_set(cfg: DesignConfig) -> SequenceSet:
    rng = RngSpec(cfg.seed, 0)
    if cfg.init == "random":
        return random_phase_set(cfg.M, cfg.N, cfg.alphabet, rng)
    if cfg.init == "file":
        seq = load_csv(cfg.init_file, cfg.alphabet.size if cfg.alphabet.is_discrete else None)
        if seq.shape != (cfg.M, cfg.N):
            raise ParameterError(f"{cfg.init_file}: set is {seq.M} x {seq.N}, config asks for {cfg.M} x {cfg.N}")
    else:
        seq = standard_waveform(cfg.init, cfg.M, cfg.N, rng)
    if seq.alphabet == cfg.alphabet:
        return seq
    if cfg.alphabet.is_discrete:
        logger.info("Quantizing the %s initial set to %s", cfg.init, cfg.alphabet.label())
        return quantize_to_alphabet(seq, cfg.alphabet.size)
    return SequenceSet.from_entries(seq.entries)


def cmd_design(raw: Dict[str, Any], out_dir: str) -> int:
    cfg = parse_design(raw)
    mask = load_mask(cfg.mask_file) if cfg.mask_file else band_to_bins(cfg.stopbands, cfg.N)
    if mask.n_bins != cfg.N:
        raise ParameterError(f"mask has {mask.n_bins} bins but N = {cfg.N}")
    init = _initial_set(cfg)
    manifest = RunManifest("design", raw, seeds=[cfg.seed], mask_hash=mask.digest())
    manifest.add_output(save_mask(mask, os.path.join(out_dir, "mask.json")), out_dir)
    manifest.add_output(save_csv(init, os.path.join(out_dir, "initial.csv")), out_dir)

    tradeoff = []
    converged = True
    for theta in cfg.thetas:
        config = CdConfig(theta=theta, alphabet=cfg.alphabet, zeta=cfg.zeta, max_sweeps=cfg.max_sweeps,
                          grid_points=cfg.grid_points, relaxation=cfg.relaxation)
        result = cd_design(init, mask, config)
        tag = f"theta{theta:g}"
        manifest.add_output(save_csv(result.final, os.path.join(out_dir, f"sequences_{tag}.csv")), out_dir)
        manifest.add_output(write_trace_csv(result, os.path.join(out_dir, f"trace_{tag}.csv")), out_dir)
        g_s, g_c = result.components
        tradeoff.append([theta, power_db(g_s), g_c, mean_peak_xcorr_db(result.final)])
        converged = converged and result.converged
        print(f"theta={theta:g}: g={result.objective_trace[-1]:.6g} after {result.sweeps} sweeps"
              f"{'' if result.converged else ' (max_sweeps reached)'}")
    manifest.add_output(write_csv(os.path.join(out_dir, "tradeoff.csv"),
                                  ["theta", "g_s_db", "g_c", "peak_xcorr_db"], tradeoff), out_dir)
    manifest.save(out_dir)
    logger.info("Design artifacts written to %s", out_dir)
    return EXIT_OK if converged else EXIT_WARNINGS


# --------------------------------------------------------------------------- #
# evaluate
# --------------------------------------------------------------------------- #
def evaluate_set(seq: SequenceSet, mask) -> Dict[str, Any]:
    """Metric report for one set on one mask (JSON-ready)."""
    summary = summarize(seq)
    g_a, g_b = silr_terms(seq, mask)
    g_s = None if mask.degenerate else g_a / g_b
    gap = None
    if mask.undesired and not mask.degenerate:
        gap = stopband_psd_gap_db(seq, mask)
    return {
        "M": seq.M,
        "N": seq.N,
        "alphabet": seq.alphabet.label(),
        "mask": mask.to_dict(),
        "mask_hash": mask.digest(),
        "g_s": g_s,
        "g_s_db": _finite(power_db(g_s)) if g_s is not None else None,
        "g_c": summary.iccl_scaled,
        "iccl_raw": summary.iccl_raw,
        "isl": summary.isl,
        "islr_db": _finite(summary.islr_db),
        "islr_periodic_db": _finite(islr_db(seq, CorrelationKind.PERIODIC)),
        "isl_bound": summary.bound,
        "isl_bound_db": _finite(summary.bound_db),
        "bound_gap_db": _finite(summary.bound_gap_db),
        "peak_xcorr_db": {f"{m}-{mp}": _finite(v) for (m, mp), v in peak_xcorr_db(seq).items()},
        "mean_peak_xcorr_db": _finite(mean_peak_xcorr_db(seq)),
        "stopband_psd_gap_db": _finite(gap),
    }


def cmd_evaluate(raw: Dict[str, Any], out_dir: str) -> int:
    cfg = parse_evaluate(raw)
    seq = load_csv(cfg.sequences, cfg.L)
    mask = load_mask(cfg.mask_file) if cfg.mask_file else band_to_bins(cfg.stopbands, seq.N)
    report = evaluate_set(seq, mask)
    manifest = RunManifest("evaluate", raw, mask_hash=mask.digest())
    psd_files = []
    for m in range(seq.M):
        path = write_psd_csv(os.path.join(out_dir, f"psd_m{m}.csv"), psd(seq.row(m), cfg.psd_nfft, cfg.psd_window))
        psd_files.append(os.path.basename(path))
        manifest.add_output(path, out_dir)
    report["psd_files"] = psd_files
    profile_files = []
    for m in range(seq.M):
        for mp in range(m, seq.M):
            path = write_profile_csv(os.path.join(out_dir, f"xcorr_m{m}_m{mp}.csv"),
                                     xcorr(seq.row(m), seq.row(mp)), seq.N)
            profile_files.append(os.path.basename(path))
            manifest.add_output(path, out_dir)
    report["profile_files"] = profile_files
    manifest.add_output(_write_json(os.path.join(out_dir, "report.json"), report), out_dir)
    manifest.save(out_dir)
    print(f"g_s={report['g_s']} g_c={report['g_c']:.6g} ISLR={report['islr_db']} dB "
          f"(bound gap {report['bound_gap_db']} dB)")
    return EXIT_OK


# --------------------------------------------------------------------------- #
# simulate
# --------------------------------------------------------------------------- #
def cmd_simulate(raw: Dict[str, Any], out_dir: str) -> int:
    scenario = parse_simulate(raw)
    manifest = RunManifest("simulate", raw, seeds=[scenario.seed])
    sensing = sense(scenario)
    manifest.add_output(write_bands_csv(os.path.join(out_dir, "bands.csv"), sensing.bands), out_dir)
    if sensing.mask is None:
        manifest.add_output(_write_json(os.path.join(out_dir, "sensing.json"),
                                        {"bands": [list(b) for b in sensing.bands], "error": sensing.error}), out_dir)
        manifest.save(out_dir)
        raise DegenerateMaskError(f"{sensing.error}; sensing report in {out_dir}")
    manifest.mask_hash = sensing.mask.digest()
    manifest.add_output(save_mask(sensing.mask, os.path.join(out_dir, "mask.json")), out_dir)

    report = run_coexistence(scenario, sensing)
    outputs = [
        save_csv(report.random_waveforms, os.path.join(out_dir, "sequences_random.csv")),
        save_csv(report.optimized_waveforms, os.path.join(out_dir, "sequences_optimized.csv")),
        write_trace_csv(report.design, os.path.join(out_dir, "trace.csv")),
        write_trials_csv(os.path.join(out_dir, "trials.csv"), report),
        write_radar_summary_csv(os.path.join(out_dir, "radar_sinr.csv"), report),
        write_comms_summary_csv(os.path.join(out_dir, "comms.csv"), report),
    ]
    last = report.trials[-1]
    for step in (STEP_RADAR_ONLY, STEP_RANDOM, STEP_OPTIMIZED):
        outputs.append(write_rd_csv(os.path.join(out_dir, f"rd_{step}.csv"), last.maps[step]))
    for path in outputs:
        manifest.add_output(path, out_dir)
    manifest.save(out_dir)

    top = max(scenario.lte_powers_dbm)
    for i in range(len(scenario.targets)):
        print(f"target {i + 1}: clean {report.sinr_db[(STEP_RADAR_ONLY, None, i)]:.1f} dB, "
              f"random {report.sinr_db[(STEP_RANDOM, top, i)]:.1f} dB, "
              f"optimized {report.sinr_db[(STEP_OPTIMIZED, top, i)]:.1f} dB at {top:g} dBm LTE")
    for label in scenario.mcs:
        print(f"{label}: SER random {report.ser[(STEP_RANDOM, top, label)]:.3g}, "
              f"optimized {report.ser[(STEP_OPTIMIZED, top, label)]:.3g} at {top:g} dBm LTE")
    return EXIT_OK if report.design.converged else EXIT_WARNINGS


# --------------------------------------------------------------------------- #
# sense
# --------------------------------------------------------------------------- #
def sense_signal(cfg: SenseConfig) -> np.ndarray:
    """Capture to analyse: a CSV of re,im samples, or a synthesized scene plus receiver noise."""
    if cfg.source == "file":
        rows = read_csv(cfg.signal_file)
        try:
            return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterError(f"{cfg.signal_file}: signal CSV needs numeric re,im columns ({e})") from e
    n = np.arange(cfg.samples)
    signal = np.zeros(cfg.samples, dtype=complex)
    if cfg.source == "lte":
        signal += gen_interference(cfg.interference, cfg.samples, RngSpec(cfg.seed, 1))
    elif cfg.source == "tone_comb":
        amplitude = np.sqrt(10.0 ** (cfg.tone_power_dbm / 10.0))
        count = int(round(cfg.sample_rate_hz / cfg.tone_spacing_hz))
        for k in range(count):
            f = -cfg.sample_rate_hz / 2 + (k + 0.5) * cfg.tone_spacing_hz
            signal += amplitude * np.exp(2j * np.pi * f * n / cfg.sample_rate_hz)
    gen = make_rng(RngSpec(cfg.seed, 2))
    sigma = np.sqrt(10.0 ** (cfg.noise_power_db / 10.0) / 2.0)
    return signal + sigma * (gen.standard_normal(cfg.samples) + 1j * gen.standard_normal(cfg.samples))


def cmd_sense(raw: Dict[str, Any], out_dir: str) -> int:
    cfg = parse_sense(raw)
    signal = sense_signal(cfg)
    floor = noise_density_db(cfg.noise_power_db, cfg.sample_rate_hz) if cfg.calibrated_floor else None
    bands = energy_detect(signal, cfg.sample_rate_hz, cfg.bin_hz, cfg.threshold_db, mode=cfg.mode,
                          noise_floor_db=floor, center_hz=cfg.radar_center_hz)
    manifest = RunManifest("sense", raw, seeds=[cfg.seed])
    manifest.add_output(write_bands_csv(os.path.join(out_dir, "bands.csv"), bands), out_dir)
    status = {"bands": [list(b) for b in bands], "degenerate": False}
    code = EXIT_OK
    try:
        mask = sense_to_mask(bands, cfg.radar_center_hz, cfg.radar_bandwidth_hz, cfg.N)
    except DegenerateMaskError as e:
        logger.warning("%s; the radar should not transmit", e)
        status.update(degenerate=True, error=str(e))
        code = EXIT_WARNINGS
    else:
        manifest.mask_hash = mask.digest()
        status["mask_hash"] = mask.digest()
        manifest.add_output(save_mask(mask, os.path.join(out_dir, "mask.json")), out_dir)
    manifest.add_output(_write_json(os.path.join(out_dir, "sensing.json"), status), out_dir)
    manifest.save(out_dir)
    print(f"{len(bands)} occupied band(s){' - full-band occupancy, no mask written' if code else ''}")
    return code


COMMANDS = {
    "design": cmd_design,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "sense": cmd_sense,
}


def cmd_replay(manifest_path: str, out_dir: Optional[str]) -> int:
    manifest = load_manifest(manifest_path)
    if manifest.command not in COMMANDS:
        raise ParameterError(f"{manifest_path}: unknown command '{manifest.command}'")
    out = out_dir or os.path.dirname(os.path.abspath(manifest_path))
    logger.info("Replaying '%s' into %s", manifest.command, out)
    return COMMANDS[manifest.command](manifest.config, out)


# --------------------------------------------------------------------------- #
# Argument parsing
# --------------------------------------------------------------------------- #
class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 like every other configuration problem."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(description="Cognitive MIMO radar: sequence design, evaluation, sensing and coexistence simulation")
    parser.add_argument("--verbose", action="store_true", help="Debug logging (per-sweep / per-trial detail)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("config", nargs="?", help="JSON config file (defaults for every omitted field)")
        p.add_argument("--out", type=str, help="Output directory (default data/<command>/)")
        if seed:
            p.add_argument("--seed", type=int, help="Override the config seed")

    p = sub.add_parser("design", help="Design a sequence set by coordinate descent")
    common(p)
    p.add_argument("--theta", type=float, action="append",
                   help="Trade-off weight in [0, 1]; repeat for a trade-off sweep")
    p.add_argument("--stopband", type=parse_stopband, action="append", metavar="LO:HI",
                   help="Normalized stopband, e.g. 0.2:0.3; repeatable, replaces the config mask")

    p = sub.add_parser("evaluate", help="Report metrics for a saved sequence CSV")
    common(p, seed=False)
    p.add_argument("--stopband", type=parse_stopband, action="append", metavar="LO:HI",
                   help="Normalized stopband; repeatable, replaces the config mask")

    p = sub.add_parser("simulate", help="Run the four-step coexistence experiment")
    common(p)
    p.add_argument("--theta", type=float, action="append", help="Trade-off weight for the designed waveforms")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials")
    p.add_argument("--workers", type=int, help="Parallel trial workers")

    p = sub.add_parser("sense", help="Detect occupied bands and write a mask file")
    common(p)

    p = sub.add_parser("replay", help="Re-run a command from its manifest.json")
    p.add_argument("manifest", help="Path to manifest.json")
    p.add_argument("--out", type=str, help="Output directory (default: the manifest's directory)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        if args.command == "replay":
            return cmd_replay(args.manifest, args.out)
        raw = apply_overrides(
            load_config(args.config),
            args.command,
            theta=getattr(args, "theta", None),
            seed=getattr(args, "seed", None),
            stopbands=getattr(args, "stopband", None),
            trials=getattr(args, "trials", None),
            workers=getattr(args, "workers", None),
        )
        out_dir = args.out or os.path.join(DATA_DIR, args.command)
        return COMMANDS[args.command](raw, out_dir)
    except (ConfigError, ParameterError, DegenerateMaskError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
