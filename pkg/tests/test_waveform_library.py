"""Tests for the standard waveform families used as initializations and baselines."""

import numpy as np
import pytest

from correlation import isl
from radar_utils import ParameterError, RngSpec
from sequence_set import validate
from waveform_library import WAVEFORM_NAMES, standard_waveform


@pytest.mark.parametrize("name, N", [
    ("random-polyphase", 16),
    ("random-binary", 16),
    ("frank", 16),
    ("golomb", 16),
    ("barker", 13),
    ("m-sequence", 15),
    ("up-lfm", 16),
    ("down-lfm", 16),
])
def test_every_family_is_unimodular(name, N):
    seq = standard_waveform(name, 3, N, RngSpec(1))
    assert seq.shape == (3, N)
    assert validate(seq) == []


def test_names_cover_every_family():
    assert set(WAVEFORM_NAMES) == {
        "random-polyphase", "random-binary", "frank", "golomb",
        "barker", "m-sequence", "up-lfm", "down-lfm",
    }


def test_rows_are_cyclic_shifts():
    seq = standard_waveform("golomb", 4, 16)
    np.testing.assert_allclose(seq.row(1), np.roll(seq.row(0), -4))


def test_barker_13_sidelobes():
    """Every aperiodic sidelobe of Barker-13 has magnitude 0 or 1; six of them per side are 1."""
    assert isl(standard_waveform("barker", 1, 13)) == pytest.approx(12.0)


def test_m_sequence_is_binary():
    seq = standard_waveform("m-sequence", 1, 31)
    assert seq.alphabet.size == 2
    assert set(np.unique(seq.entries.real)) == {-1.0, 1.0}


@pytest.mark.parametrize("name, N", [("frank", 15), ("barker", 12), ("m-sequence", 16)])
def test_rejects_unsupported_length(name, N):
    with pytest.raises(ParameterError):
        standard_waveform(name, 1, N)


def test_rejects_unknown_name():
    with pytest.raises(ParameterError, match="unknown waveform"):
        standard_waveform("zadoff", 1, 16)


def test_lfm_directions_are_conjugate():
    up = standard_waveform("up-lfm", 1, 32)
    down = standard_waveform("down-lfm", 1, 32)
    np.testing.assert_allclose(up.entries, np.conj(down.entries), atol=1e-12)
