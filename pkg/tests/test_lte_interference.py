"""Tests for the LTE-like interference generator and the EVM/SER comms proxy."""

import numpy as np
import pytest

from lte_interference import (
    DEFAULT_ALLOCATION,
    InterferenceSpec,
    active_mask,
    constellation_symbols,
    gen_interference,
    generate_frame,
    link_metrics,
    mcs_order,
    occupied_bands_hz,
    subcarrier_bins,
)
from radar_utils import ParameterError, RngSpec, db_to_power, make_rng


class TestConstellations:
    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_unit_mean_power(self, order):
        points = constellation_symbols(order)
        assert points.size == order
        assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0)
        assert np.unique(np.round(points, 12)).size == order

    def test_rejects_unknown_order(self):
        with pytest.raises(ParameterError):
            constellation_symbols(8)

    def test_mcs_labels(self):
        assert mcs_order("mcs0") == 4
        assert mcs_order("MCS10") == 16
        assert mcs_order(" MCS17 ") == 64
        with pytest.raises(ParameterError, match="unknown MCS"):
            mcs_order("MCS28")


class TestInterferenceSpec:
    def test_default_allocation_geometry(self):
        spec = InterferenceSpec()
        assert spec.allocation == DEFAULT_ALLOCATION
        assert spec.n_subcarriers == 1200
        assert spec.span_hz == pytest.approx(18e6)
        assert spec.block_len == 2667

    @pytest.mark.parametrize("kwargs", [
        {"allocation": ""},
        {"allocation": "10a1"},
        {"allocation": "1" * 30},
        {"center_offset_hz": 15e6},
        {"prb_per_bit": 0},
        {"constellation": 32},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ParameterError):
            InterferenceSpec(**kwargs)

    def test_subcarriers_skip_dc(self):
        spec = InterferenceSpec()
        bins = subcarrier_bins(spec)
        assert bins.size == 1200
        assert 0 not in bins
        assert bins[0] == -600 and bins[-1] == 600
        assert np.all(np.diff(bins) > 0)

    def test_center_offset_shifts_bins(self):
        spec = InterferenceSpec(center_offset_hz=10e6)
        assert subcarrier_bins(spec)[0] == -600 + spec.center_bin
        assert spec.center_bin == 667

    def test_occupied_bands_follow_allocation(self):
        spec = InterferenceSpec()
        bands = occupied_bands_hz(spec)
        df = spec.spacing_hz
        assert len(bands) == 2
        assert bands[0] == pytest.approx((-600.5 * df, -24.5 * df))
        assert bands[1] == pytest.approx((312.5 * df, 600.5 * df))


class TestGeneration:
    def test_power_matches_setting(self):
        spec = InterferenceSpec(power_dbm=10.0)
        x = gen_interference(spec, 3 * spec.block_len, RngSpec(1))
        assert np.mean(np.abs(x) ** 2) == pytest.approx(db_to_power(10.0), rel=1e-9)

    def test_holes_are_empty(self):
        spec = InterferenceSpec()
        frame = generate_frame(spec, spec.block_len, RngSpec(2))
        spectrum = np.abs(np.fft.fft(frame.signal)) ** 2
        bins = subcarrier_bins(spec) % spec.block_len
        active = active_mask(spec)
        assert spectrum[bins[~active]].max() < 1e-12 * spectrum[bins[active]].min()

    def test_full_allocation_occupies_whole_span(self):
        spec = InterferenceSpec(allocation="1" * 25)
        frame = generate_frame(spec, spec.block_len, RngSpec(3))
        spectrum = np.abs(np.fft.fft(frame.signal)) ** 2
        assert np.all(spectrum[subcarrier_bins(spec) % spec.block_len] > 0)
        assert occupied_bands_hz(spec) == [pytest.approx((-600.5 * spec.spacing_hz, 600.5 * spec.spacing_hz))]

    def test_silent_allocation(self):
        spec = InterferenceSpec(allocation="0000")
        assert not np.any(gen_interference(spec, 1000, RngSpec(0)))

    def test_reproducible_and_truncated(self):
        spec = InterferenceSpec()
        a = gen_interference(spec, 5000, RngSpec(4, 7))
        b = gen_interference(spec, 5000, RngSpec(4, 7))
        assert a.size == 5000
        np.testing.assert_array_equal(a, b)

    def test_rejects_negative_length(self):
        with pytest.raises(ParameterError):
            gen_interference(InterferenceSpec(), -1, RngSpec(0))


class TestLinkMetrics:
    def test_clean_link(self):
        spec = InterferenceSpec(constellation=64)
        frame = generate_frame(spec, 4 * spec.block_len, RngSpec(5))
        metrics = link_metrics(frame, frame.signal)
        assert metrics.ser == 0.0
        assert metrics.evm_db < -200.0
        assert metrics.n_symbols == 4 * 864

    def test_evm_tracks_added_noise(self):
        spec = InterferenceSpec(power_dbm=-10.0)
        frame = generate_frame(spec, 4 * spec.block_len, RngSpec(6))
        gen = make_rng(RngSpec(6, 1))
        sigma2 = 1e-3
        noise = np.sqrt(sigma2 / 2) * (gen.standard_normal(frame.signal.size)
                                        + 1j * gen.standard_normal(frame.signal.size))
        metrics = link_metrics(frame, frame.signal + noise)
        expected = 10 * np.log10(sigma2 / (spec.block_len * frame.amplitude ** 2))
        assert metrics.evm_db == pytest.approx(expected, abs=0.3)

    def test_denser_constellation_fails_first(self):
        errors = {}
        for order in (4, 64):
            spec = InterferenceSpec(constellation=order, power_dbm=0.0)
            frame = generate_frame(spec, 4 * spec.block_len, RngSpec(8))
            gen = make_rng(RngSpec(8, 1))
            noise = np.sqrt(0.0244) * (gen.standard_normal(frame.signal.size)
                                     + 1j * gen.standard_normal(frame.signal.size))
            errors[order] = link_metrics(frame, frame.signal + noise).ser
        assert errors[4] < errors[64]
        assert errors[64] > 0.0

    def test_needs_a_full_block(self):
        spec = InterferenceSpec()
        frame = generate_frame(spec, spec.block_len, RngSpec(0))
        with pytest.raises(ParameterError, match="full block"):
            link_metrics(frame, frame.signal[:100])

    def test_silent_allocation_has_nothing_to_measure(self):
        spec = InterferenceSpec(allocation="00")
        frame = generate_frame(spec, spec.block_len, RngSpec(0))
        with pytest.raises(ParameterError):
            link_metrics(frame, frame.signal)
