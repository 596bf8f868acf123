import math

import numpy as np
import pytest

from hypc.analysis import compression_ratio, error_stats, validate_error_bound
from hypc.codec import EncodeParams
from hypc.errors import DataError


class TestErrorStats:
    def test_identical_vectors(self):
        stats = error_stats([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert stats == {"max_abs": 0.0, "mean_abs": 0.0, "rmse": 0.0}

    def test_hand_example(self):
        stats = error_stats([0.0, 1.0], [0.0, 0.5])
        assert stats["max_abs"] == 0.5
        assert stats["mean_abs"] == 0.25
        assert stats["rmse"] == pytest.approx(math.sqrt(0.125))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            error_stats([1.0], [1.0, 2.0])


class TestCompressionRatio:
    def test_reference_file_sizes(self):
        # 51.10 MB over 6.49 MB rounds to the reported 7.87x
        assert round(compression_ratio(51.10, 6.49), 2) == 7.87

    def test_equal_sizes(self):
        assert compression_ratio(123, 123) == 1.0

    def test_ten_bit_payload_ratio(self):
        assert compression_ratio(64, 10) == 6.4

    def test_scale_invariance(self):
        assert compression_ratio(7 * 100, 3 * 100) == compression_ratio(7, 3)

    def test_positive_only(self):
        with pytest.raises(ValueError):
            compression_ratio(0, 1)
        with pytest.raises(ValueError):
            compression_ratio(1, -2)


class TestValidateErrorBound:
    def test_small_run_passes_deterministically(self):
        report = validate_error_bound(8, 16, trials=10, seed=42)
        assert report["trials"] == 10
        assert report["pass_fraction"] == 1.0
        assert report["pass_fraction_preactivation"] == 1.0
        assert report["pass_fraction_relu"] == 1.0
        assert 0.0 < report["max_ratio_observed"] <= 1.0
        assert report["epsilon_max"] > 0.0

    def test_relu_never_exceeds_preactivation(self):
        # 1-Lipschitz contraction: check on explicit draws
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.random((6, 9))
            w = rng.random(9)
            q = w + rng.normal(scale=1e-3, size=9)
            pre = np.abs(x @ w - x @ q).sum()
            act = np.abs(np.maximum(x @ w, 0) - np.maximum(x @ q, 0)).sum()
            assert act <= pre

    def test_lossless_case_trivially_holds(self):
        w = np.full(16, 0.5)
        x = np.random.default_rng(1).random((4, 16))
        assert np.abs(x @ w - x @ w).sum() == 0.0

    def test_report_is_json_serializable(self):
        import json

        report = validate_error_bound(4, 8, trials=3, seed=0)
        parsed = json.loads(json.dumps(report))
        assert set(parsed) >= {"trials", "pass_fraction", "max_ratio_observed",
                               "epsilon_max"}

    def test_custom_params_respected(self):
        report = validate_error_bound(
            4, 8, params=EncodeParams(num_points=64), trials=3, seed=0
        )
        assert report["pass_fraction"] == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            validate_error_bound(0, 8)
        with pytest.raises(ValueError):
            validate_error_bound(8, 8, trials=0)
