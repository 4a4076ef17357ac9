"""Tests for sequence sets, alphabets, quantization and CSV storage."""

import numpy as np
import pytest

from radar_utils import ParameterError, RngSpec
from sequence_set import (
    PhaseAlphabet,
    SequenceSet,
    TWO_PI,
    load_csv,
    quantize_to_alphabet,
    random_phase_set,
    save_csv,
    unit_circle_table,
    validate,
)


class TestPhaseAlphabet:
    def test_discrete_grid(self):
        np.testing.assert_allclose(PhaseAlphabet.discrete(4).grid(), [0, np.pi / 2, np.pi, 3 * np.pi / 2])

    @pytest.mark.parametrize("size", [None, 1, 0, 2.5])
    def test_discrete_rejects_bad_size(self, size):
        with pytest.raises(ParameterError):
            PhaseAlphabet.discrete(size)

    def test_continuous_has_no_grid(self, continuous):
        with pytest.raises(ParameterError):
            continuous.grid()

    def test_axis_points_are_exact(self):
        table = unit_circle_table(4)
        assert list(table) == [1 + 0j, 1j, -1 + 0j, -1j]


class TestRandomPhaseSet:
    def test_shape_and_modulus(self, continuous):
        seq = random_phase_set(4, 32, continuous, RngSpec(1))
        assert seq.shape == (4, 32)
        np.testing.assert_allclose(np.abs(seq.entries), 1.0, atol=1e-12)
        assert validate(seq) == []

    def test_discrete_membership(self):
        seq = random_phase_set(3, 20, PhaseAlphabet.discrete(8), RngSpec(2))
        assert seq.indices is not None
        assert seq.indices.min() >= 0 and seq.indices.max() < 8
        assert validate(seq) == []

    def test_reproducible(self, continuous):
        a = random_phase_set(2, 16, continuous, RngSpec(9))
        b = random_phase_set(2, 16, continuous, RngSpec(9))
        np.testing.assert_array_equal(a.entries, b.entries)

    def test_phase_mean_is_near_pi(self, continuous):
        phases = random_phase_set(2, 1024, continuous, RngSpec(3)).phases()
        sigma = (TWO_PI / np.sqrt(12)) / np.sqrt(phases.size)
        assert abs(phases.mean() - np.pi) <= 3 * sigma

    @pytest.mark.parametrize("M, N", [(0, 4), (2, 0), (1.5, 4)])
    def test_rejects_bad_dimensions(self, continuous, M, N):
        with pytest.raises(ParameterError):
            random_phase_set(M, N, continuous, RngSpec(0))

    def test_entries_are_read_only(self, small_set):
        with pytest.raises(ValueError):
            small_set.entries[0, 0] = 0


class TestValidate:
    def test_reports_every_bad_modulus(self):
        entries = np.ones((2, 3), dtype=complex)
        entries[0, 1] = 0.5
        entries[1, 2] = 2.0
        violations = validate(SequenceSet.from_entries(entries))
        assert [(v.m, v.n, v.invariant) for v in violations] == [(0, 1, "unit-modulus"), (1, 2, "unit-modulus")]

    def test_reports_off_alphabet_phase(self):
        entries = np.exp(1j * np.array([[0.0, np.pi / 2, 0.3]]))
        violations = validate(SequenceSet.from_entries(entries, PhaseAlphabet.discrete(4)))
        assert len(violations) == 1
        assert violations[0].invariant == "alphabet-membership"
        assert violations[0].n == 2

    def test_nan_is_a_violation(self):
        entries = np.array([[1.0, np.nan]], dtype=complex)
        assert len(validate(SequenceSet.from_entries(entries))) == 1


class TestQuantize:
    def test_nearest_point(self):
        seq = SequenceSet.from_phases(np.array([[0.1, 1.5, 3.3, 6.2]]))
        q = quantize_to_alphabet(seq, 4)
        assert list(q.indices[0]) == [0, 1, 2, 0]

    def test_halfway_goes_to_lower_index(self):
        seq = SequenceSet.from_phases(np.array([[np.pi / 4, 3 * np.pi / 4]]))
        q = quantize_to_alphabet(seq, 4)
        assert list(q.indices[0]) == [0, 1]

    def test_idempotent_on_members(self):
        seq = random_phase_set(2, 10, PhaseAlphabet.discrete(16), RngSpec(3))
        q = quantize_to_alphabet(seq, 16)
        np.testing.assert_array_equal(q.indices, seq.indices)

    def test_rejects_bad_size(self, small_set):
        with pytest.raises(ParameterError):
            quantize_to_alphabet(small_set, 1)


class TestCsvStorage:
    def test_continuous_round_trip(self, small_set, tmp_path):
        path = save_csv(small_set, str(tmp_path / "x.csv"))
        loaded = load_csv(path)
        np.testing.assert_array_equal(loaded.entries, small_set.entries)
        assert not loaded.alphabet.is_discrete

    def test_discrete_round_trip_infers_size(self, tmp_path):
        seq = random_phase_set(2, 12, PhaseAlphabet.discrete(8), RngSpec(4))
        loaded = load_csv(save_csv(seq, str(tmp_path / "x.csv")))
        assert loaded.alphabet.size == 8
        np.testing.assert_array_equal(loaded.indices, seq.indices)

    def test_all_zero_indices_load(self, tmp_path):
        path = save_csv(SequenceSet.from_indices(np.zeros((2, 4), dtype=int), 8), str(tmp_path / "ones.csv"))
        assert load_csv(path).alphabet.size == 2
        loaded = load_csv(path, 8)
        assert loaded.alphabet.size == 8
        np.testing.assert_array_equal(loaded.entries, np.ones((2, 4)))

    def test_rejects_off_circle_samples(self, tmp_path):
        path = str(tmp_path / "bad.csv")
        save_csv(SequenceSet.from_entries(np.array([[1.0, 0.9]])), path)
        with pytest.raises(ParameterError, match="unit-modulus"):
            load_csv(path)

    def test_rejects_incomplete_grid(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("m,n,re,im,phase_index\n0,0,1.0,0.0,\n1,1,1.0,0.0,\n")
        with pytest.raises(ParameterError, match="full"):
            load_csv(str(path))

    def test_phases_wrap_to_two_pi(self):
        seq = SequenceSet.from_phases(np.array([[-0.5, TWO_PI + 0.25]]))
        np.testing.assert_allclose(seq.phases(), [[TWO_PI - 0.5, 0.25]], atol=1e-12)
