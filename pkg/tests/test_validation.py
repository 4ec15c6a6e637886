"""Input validation helpers: series/matrix checks and worker counting."""

import numpy as np
import pytest

from derivkit.validation import check_matrix, check_series, worker_count


class TestCheckSeries:
    def test_accepts_list_and_returns_float_array(self):
        out = check_series([1, 2, 3])
        assert out.dtype == np.float64
        assert out.shape == (3,)
        np.testing.assert_array_equal(out, [1.0, 2.0, 3.0])

    def test_rejects_two_dimensional(self):
        with pytest.raises(ValueError):
            check_series(np.zeros((3, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            check_series([1.0, np.nan, 2.0])
        with pytest.raises(ValueError):
            check_series([1.0, np.inf])

    def test_rejects_too_short(self):
        with pytest.raises(ValueError):
            check_series([1.0, 2.0], min_length=5)

    def test_name_appears_in_message(self):
        with pytest.raises(ValueError, match="signal"):
            check_series(np.zeros((2, 2)), name="signal")


class TestCheckMatrix:
    def test_accepts_matrix(self):
        out = check_matrix([[1, 2], [3, 4]])
        assert out.shape == (2, 2)
        assert out.dtype == np.float64

    def test_rejects_vector(self):
        with pytest.raises(ValueError):
            check_matrix(np.zeros(4))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            check_matrix([[1.0, np.nan]])


class TestWorkerCount:
    def test_explicit_request_wins(self, monkeypatch):
        monkeypatch.setenv("DERIVKIT_THREADS", "7")
        assert worker_count(3) == 3

    def test_env_variable_honored(self, monkeypatch):
        monkeypatch.setenv("DERIVKIT_THREADS", "5")
        assert worker_count() == 5

    def test_default_positive(self, monkeypatch):
        monkeypatch.delenv("DERIVKIT_THREADS", raising=False)
        assert worker_count() >= 1

    def test_nonpositive_request_clamps_to_one(self):
        assert worker_count(0) == 1
        assert worker_count(-4) == 1

    def test_bad_env_value_raises(self, monkeypatch):
        monkeypatch.setenv("DERIVKIT_THREADS", "many")
        with pytest.raises(ValueError, match="DERIVKIT_THREADS"):
            worker_count()
