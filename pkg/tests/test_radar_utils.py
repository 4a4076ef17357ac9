"""Tests for RNG streams, dB helpers and CSV output."""

import numpy as np
import pytest

from radar_utils import (
    ParameterError,
    RngSpec,
    db_to_power,
    format_float,
    make_rng,
    power_db,
    read_csv,
    write_csv,
)


class TestRngSpec:
    def test_same_spec_same_draws(self):
        a = make_rng(RngSpec(11, 3)).standard_normal(32)
        b = make_rng(RngSpec(11, 3)).standard_normal(32)
        np.testing.assert_array_equal(a, b)

    def test_streams_are_independent(self):
        a = make_rng(RngSpec(11, 0)).standard_normal(32)
        b = make_rng(RngSpec(11).child(1)).standard_normal(32)
        assert not np.allclose(a, b)

    def test_child_keeps_seed(self):
        assert RngSpec(5, 2).child(9) == RngSpec(5, 9)

    @pytest.mark.parametrize("seed, stream", [(-1, 0), (2 ** 64, 0), (0, -1)])
    def test_rejects_out_of_range(self, seed, stream):
        with pytest.raises(ParameterError):
            RngSpec(seed, stream)


class TestDecibels:
    def test_round_trip(self):
        values = np.array([1e-3, 1.0, 42.0])
        np.testing.assert_allclose(db_to_power(power_db(values)), values, rtol=1e-12)

    def test_zero_is_minus_inf(self):
        assert power_db(0.0) == float("-inf")

    def test_scalar_stays_scalar(self):
        assert isinstance(power_db(100.0), float)
        assert power_db(100.0) == pytest.approx(20.0)


class TestCsv:
    def test_format_float_special_values(self):
        assert format_float(float("nan")) == "nan"
        assert format_float(float("inf")) == "inf"
        assert format_float(float("-inf")) == "-inf"
        assert float(format_float(0.1)) == 0.1

    def test_write_then_read(self, tmp_path):
        path = str(tmp_path / "sub" / "rows.csv")
        write_csv(path, ["a", "b", "c", "d"], [[1, 0.25, None, True], [np.int64(2), np.float64(-1.5), "x", False]])
        rows = read_csv(path)
        assert rows == [
            {"a": "1", "b": "0.25", "c": "", "d": "true"},
            {"a": "2", "b": "-1.5", "c": "x", "d": "false"},
        ]

    def test_output_is_byte_stable(self, tmp_path):
        rows = [[k, k / 7.0] for k in range(5)]
        first = write_csv(str(tmp_path / "a.csv"), ["k", "v"], rows)
        second = write_csv(str(tmp_path / "b.csv"), ["k", "v"], rows)
        with open(first, "rb") as f1, open(second, "rb") as f2:
            assert f1.read() == f2.read()
