"""Shared fixtures."""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from radar_utils import RngSpec  # noqa: E402
from sequence_set import PhaseAlphabet, random_phase_set  # noqa: E402
from spectral_mask import band_to_bins  # noqa: E402

NOTCH_STOPBANDS = [(0.05, 0.1), (0.2, 0.25), (0.4, 0.5), (0.7, 0.85)]


@pytest.fixture
def continuous():
    return PhaseAlphabet.continuous()


@pytest.fixture
def small_set(continuous):
    """3 x 16 random continuous-phase set."""
    return random_phase_set(3, 16, continuous, RngSpec(7))


@pytest.fixture
def small_mask():
    return band_to_bins([(0.1, 0.3), (0.6, 0.7)], 16)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return str(path)
