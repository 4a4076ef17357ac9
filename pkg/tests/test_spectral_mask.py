"""Tests for stopband-to-bin mapping, SILR and PSD evaluation."""

import json

import numpy as np
import pytest

from radar_utils import DegenerateMaskError, ParameterError, RngSpec
from sequence_set import SequenceSet, random_phase_set
from spectral_mask import (
    band_to_bins,
    bin_gram,
    dft_vector,
    load_mask,
    parse_stopband,
    psd,
    round_half_away,
    save_mask,
    silr,
    silr_quadratic,
    silr_terms,
    stopband_psd_gap_db,
)


class TestBandToBins:
    def test_inclusive_rounded_edges(self, small_mask):
        assert small_mask.undesired == (2, 3, 4, 5, 10, 11)
        assert len(small_mask.desired) == 10
        assert set(small_mask.undesired).isdisjoint(small_mask.desired)

    def test_halves_round_away_from_zero(self):
        mask = band_to_bins([(0.0625, 0.3125)], 8)
        assert mask.undesired == (1, 2, 3)
        assert round_half_away(2.5) == 3
        assert round_half_away(-2.5) == -3

    def test_upper_edge_clamps_to_last_bin(self):
        assert band_to_bins([(0.9, 1.0)], 10).undesired == (9,)

    def test_touching_bands_are_accepted(self):
        mask = band_to_bins([(0.1, 0.2), (0.2, 0.3)], 20)
        assert mask.undesired == (2, 3, 4, 5, 6)

    def test_overlapping_bands_rejected(self):
        with pytest.raises(ParameterError, match="overlap"):
            band_to_bins([(0.1, 0.3), (0.2, 0.4)], 16)

    @pytest.mark.parametrize("band", [(0.3, 0.2), (-0.1, 0.2), (0.5, 1.2), (0.4,)])
    def test_bad_band_rejected(self, band):
        with pytest.raises(ParameterError):
            band_to_bins([band], 16)

    def test_no_stopbands_means_all_desired(self):
        mask = band_to_bins([], 8)
        assert mask.undesired == ()
        assert mask.desired == tuple(range(8))

    def test_full_band_is_degenerate(self, continuous):
        mask = band_to_bins([(0.0, 1.0)], 8)
        assert mask.degenerate
        with pytest.raises(DegenerateMaskError):
            silr(random_phase_set(1, 8, continuous, RngSpec(0)), mask)

    def test_digest_tracks_bins(self, small_mask):
        same = band_to_bins([(0.1, 0.3), (0.6, 0.7)], 16)
        other = band_to_bins([(0.1, 0.3)], 16)
        assert small_mask.digest() == same.digest()
        assert small_mask.digest() != other.digest()


class TestSilr:
    def test_energy_is_conserved(self, small_set, small_mask):
        g_a, g_b = silr_terms(small_set, small_mask)
        assert g_a + g_b == pytest.approx(small_set.M * small_set.N ** 2, rel=1e-12)

    def test_matches_quadratic_form(self, small_set, small_mask):
        expected = silr_quadratic(small_set, bin_gram(small_mask, "U"), bin_gram(small_mask, "V"))
        assert silr(small_set, small_mask) == pytest.approx(expected, rel=1e-10)

    def test_matches_dft_vectors(self, small_set, small_mask):
        X = small_set.entries
        g_a = sum(abs(np.vdot(dft_vector(k, 16), X[m])) ** 2 for m in range(3) for k in small_mask.undesired)
        assert silr_terms(small_set, small_mask)[0] == pytest.approx(g_a, rel=1e-10)

    def test_tone_in_passband_has_zero_silr(self, small_mask):
        tone = SequenceSet.from_entries(dft_vector(0, 16)[None, :])
        assert silr(tone, small_mask) == pytest.approx(0.0, abs=1e-20)

    def test_length_mismatch(self, small_set):
        with pytest.raises(ParameterError):
            silr(small_set, band_to_bins([(0.1, 0.2)], 32))

    def test_gram_rejects_unknown_side(self, small_mask):
        with pytest.raises(ParameterError):
            bin_gram(small_mask, "W")

    def test_gram_is_hermitian(self, small_mask):
        F = bin_gram(small_mask, "U").matrix
        np.testing.assert_allclose(F, F.conj().T, atol=1e-12)
        assert np.trace(F).real == pytest.approx(16 * len(small_mask.undesired))


class TestPsd:
    @pytest.mark.parametrize("window", ["rectangular", "hann", "hamming", "blackman"])
    def test_on_bin_tone_peaks_at_zero_db(self, window):
        tone = dft_vector(3, 32)
        spectrum = psd(tone, 128, window)
        assert int(np.argmax(spectrum)) == 12
        assert spectrum[12] == pytest.approx(0.0, abs=1e-9)

    def test_random_phase_sequences_are_flat_on_average(self, continuous):
        spectra = [10 ** (psd(random_phase_set(1, 64, continuous, RngSpec(seed)).row(0), 128) / 10)
                   for seed in range(100)]
        average = np.mean(spectra, axis=0)
        assert np.all(np.abs(10 * np.log10(average / np.median(average))) <= 3.0)

    def test_rejects_short_nfft(self):
        with pytest.raises(ParameterError):
            psd(np.ones(16), 8)

    def test_rejects_unknown_window(self):
        with pytest.raises(ParameterError, match="unknown window"):
            psd(np.ones(16), 16, "kaiser")

    def test_rejects_all_zero(self):
        with pytest.raises(ParameterError):
            psd(np.zeros(16), 16)

    def test_stopband_gap_of_passband_tone(self, small_mask):
        tone = SequenceSet.from_entries(dft_vector(8, 16)[None, :])
        assert stopband_psd_gap_db(tone, small_mask) > 100.0


class TestMaskFiles:
    def test_parse_stopband(self):
        assert parse_stopband("0.1:0.25") == (0.1, 0.25)

    @pytest.mark.parametrize("text", ["0.1", "a:b", "", "0.1:0.2:0.3"])
    def test_parse_stopband_rejects(self, text):
        with pytest.raises(ParameterError):
            parse_stopband(text)

    def test_save_and_load(self, small_mask, tmp_path):
        loaded = load_mask(save_mask(small_mask, str(tmp_path / "mask.json")))
        assert loaded == small_mask

    def test_load_rejects_edited_bins(self, small_mask, tmp_path):
        path = tmp_path / "mask.json"
        save_mask(small_mask, str(path))
        data = json.loads(path.read_text())
        data["undesired_bins"] = [1, 2]
        path.write_text(json.dumps(data))
        with pytest.raises(ParameterError, match="do not match"):
            load_mask(str(path))
