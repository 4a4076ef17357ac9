"""Tests for the four-step radar/LTE coexistence experiment."""

import pytest

from coexistence import (
    STEP_COMMS_ONLY,
    STEP_OPTIMIZED,
    STEP_RADAR_ONLY,
    STEP_RANDOM,
    CoexistenceScenario,
    SensingReport,
    run_coexistence,
    sense,
    write_comms_summary_csv,
    write_radar_summary_csv,
    write_trials_csv,
)
from lte_interference import InterferenceSpec
from radar_sim import RadarParams, Target
from radar_utils import DegenerateMaskError, ParameterError, read_csv
from spectrum_sensing import sense_to_mask

SMALL_TARGETS = (
    Target(0.5e-6, 0.2, angle_deg=25.0, attenuation_db=30.0),
    Target(0.8e-6, -0.25, angle_deg=15.0, attenuation_db=35.0),
)


def _scenario(**overrides):
    """64-chip code, 32 pulses of 128 samples: one LTE block per CPI."""
    values = dict(
        radar=RadarParams(code_length=64, pri_s=3.2e-6, n_pulses=32),
        targets=SMALL_TARGETS,
        lte_powers_dbm=(10.0, 20.0),
        mcs=("MCS0",),
        n_trials=2,
        design_max_sweeps=3,
        grid_points=64,
        sensing_samples=16384,
    )
    values.update(overrides)
    return CoexistenceScenario(**values)


@pytest.fixture(scope="module")
def small_report():
    return run_coexistence(_scenario())


class TestScenario:
    @pytest.mark.parametrize("kwargs", [
        {"n_trials": 0},
        {"workers": 0},
        {"lte_powers_dbm": ()},
        {"mcs": ("MCS5",)},
        {"interference": InterferenceSpec(sample_rate_hz=30.72e6)},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ParameterError):
            _scenario(**kwargs)

    def test_trial_streams_are_distinct(self):
        scenario = _scenario()
        streams = {scenario.rng(t, p) for t in range(3) for p in range(7)}
        assert len(streams) == 21

    def test_sensing_finds_the_lte_bands(self):
        report = sense(_scenario())
        assert report.error is None
        assert len(report.bands) == 2
        assert all(lo >= 0.0 for lo, _ in report.bands)
        assert 0 < len(report.mask.undesired) < 64

    def test_sensing_is_deterministic(self):
        assert sense(_scenario()).bands == sense(_scenario()).bands


class TestRunCoexistence:
    def test_result_keys(self, small_report):
        assert len(small_report.trials) == 2
        assert set(small_report.sinr_db) == (
            {(STEP_RADAR_ONLY, None, i) for i in range(2)}
            | {(step, p, i) for step in (STEP_RANDOM, STEP_OPTIMIZED) for p in (10.0, 20.0) for i in range(2)}
        )
        assert set(small_report.evm_db) == {
            (step, p, "MCS0") for step in (STEP_COMMS_ONLY, STEP_RANDOM, STEP_OPTIMIZED) for p in (10.0, 20.0)
        }
        assert all(0.0 <= v <= 1.0 for v in small_report.ser.values())

    def test_design_used_the_sensed_mask(self, small_report):
        assert small_report.design.mask == small_report.sensing.mask
        assert small_report.optimized_waveforms.shape == (2, 64)
        assert small_report.design.objective_trace[-1] <= small_report.design.initial[0]

    def test_interference_costs_sinr(self, small_report):
        for i in range(2):
            assert small_report.sinr_db[(STEP_RANDOM, 20.0, i)] < small_report.sinr_db[(STEP_RADAR_ONLY, None, i)]

    def test_radar_leakage_costs_evm(self, small_report):
        for p in (10.0, 20.0):
            assert small_report.evm_db[(STEP_RANDOM, p, "MCS0")] > small_report.evm_db[(STEP_COMMS_ONLY, p, "MCS0")]

    def test_symbol_errors_follow_constellation_size(self):
        scenario = _scenario(lte_powers_dbm=(10.0,), mcs=("MCS0", "MCS10", "MCS17"), coupling_loss_db=0.0,
                             n_trials=1)
        report = run_coexistence(scenario)
        ser = [report.ser[(STEP_RANDOM, 10.0, label)] for label in ("MCS0", "MCS10", "MCS17")]
        assert ser[0] < ser[1] < ser[2]

    def test_repeatable(self, small_report):
        again = run_coexistence(_scenario(), small_report.sensing)
        assert again.sinr_db == small_report.sinr_db
        assert again.evm_db == small_report.evm_db

    def test_thread_pool_matches_serial(self, small_report):
        pooled = run_coexistence(_scenario(workers=2), small_report.sensing)
        assert pooled.sinr_db == small_report.sinr_db
        assert pooled.ser == small_report.ser

    def test_vanishing_interference_matches_radar_only(self):
        scenario = _scenario(radar=RadarParams(code_length=64, pri_s=3.2e-6, n_pulses=32, noise_power_db=None),
                             lte_powers_dbm=(-200.0,), n_trials=1)
        mask = sense_to_mask([(2e6, 8e6)], 0.0, 40e6, 64)
        report = run_coexistence(scenario, SensingReport([(2e6, 8e6)], mask))
        for i in range(2):
            assert report.sinr_db[(STEP_RANDOM, -200.0, i)] == pytest.approx(
                report.sinr_db[(STEP_RADAR_ONLY, None, i)], abs=1e-6)

    def test_declined_transmission(self):
        with pytest.raises(DegenerateMaskError, match="whole"):
            run_coexistence(_scenario(), SensingReport([(-20e6, 20e6)], None, "bands cover the whole radar band"))


class TestWriters:
    def test_trials_csv(self, small_report, tmp_path):
        rows = read_csv(write_trials_csv(str(tmp_path / "trials.csv"), small_report))
        per_trial = len(small_report.sinr_db) + 2 * len(small_report.evm_db)
        assert len(rows) == 2 * per_trial
        names = {r["metric"] for r in rows}
        assert "step1.target1.sinr" in names
        assert "step4.lte20dBm.MCS0.ser" in names

    def test_radar_summary_orders_powers_numerically(self, small_report, tmp_path):
        rows = read_csv(write_radar_summary_csv(str(tmp_path / "radar.csv"), small_report))
        assert rows[0]["step"] == "step1" and rows[0]["lte_power_dbm"] == ""
        powers = [float(r["lte_power_dbm"]) for r in rows if r["step"] == "step3"]
        assert powers == sorted(powers)

    def test_comms_summary(self, small_report, tmp_path):
        rows = read_csv(write_comms_summary_csv(str(tmp_path / "comms.csv"), small_report))
        assert len(rows) == len(small_report.evm_db)
        assert set(rows[0]) == {"step", "lte_power_dbm", "mcs", "evm_db", "ser"}


@pytest.fixture(scope="module")
def full_report():
    """Default full-size scenario, ten trials, quietest and loudest LTE powers."""
    return run_coexistence(CoexistenceScenario(n_trials=10, lte_powers_dbm=(5.0, 20.0)))


@pytest.mark.slow
class TestFullScale:
    def test_designed_waveforms_recover_sinr(self, full_report):
        for i in range(2):
            gain = full_report.sinr_db[(STEP_OPTIMIZED, 20.0, i)] - full_report.sinr_db[(STEP_RANDOM, 20.0, i)]
            assert gain >= 5.0
        assert full_report.evm_db[(STEP_OPTIMIZED, 20.0, "MCS0")] < full_report.evm_db[(STEP_RANDOM, 20.0, "MCS0")]

    def test_symbol_errors_follow_constellation_size(self, full_report):
        ser = [full_report.ser[(STEP_RANDOM, 5.0, label)] for label in ("MCS0", "MCS10", "MCS17")]
        assert ser[0] < ser[1] < ser[2]

    def test_clean_scene_gap_tracks_attenuation(self, full_report):
        gap = full_report.sinr_db[(STEP_RADAR_ONLY, None, 0)] - full_report.sinr_db[(STEP_RADAR_ONLY, None, 1)]
        assert gap == pytest.approx(5.0, abs=1.5)
