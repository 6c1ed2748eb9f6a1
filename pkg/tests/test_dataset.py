"""
Tests for replicated datasets, log-variance statistics and truth functions.
"""

import math

import numpy as np
import pytest
from scipy import stats

from src.errors import DatasetError
from src.inference.dataset import (
    MIN_NOISE_VARIANCE,
    build_dataset,
    get_truth,
    log_chi2_mean_offset,
    log_chi2_std,
    log_variance_statistic,
    read_dataset_csv,
    regular_grid,
    sigmoid_log_variance,
    simulate_observations,
    sinusoid_mean,
    write_dataset_csv,
    zero_mean,
)


EULER_GAMMA = 0.57721566490153286


@pytest.mark.unit
class TestBuildDataset:
    """Tests for build_dataset."""

    def test_two_point_statistics(self):
        """Test mean, variance, z and omega for y = (1, 3)."""
        data = build_dataset([[0.0, 0.0]], [[1.0, 3.0]])
        assert data.y_mean.tolist() == [2.0]
        assert data.sample_variance.tolist() == [2.0]
        # ln 2 + ln 1 - ln 2 - digamma(0.5) = gamma + 2 ln 2
        assert data.z[0] == pytest.approx(EULER_GAMMA + 2.0 * math.log(2.0), abs=1e-12)
        assert data.omega == pytest.approx(math.sqrt(math.pi ** 2 / 2.0), rel=1e-12)

    def test_shapes(self, small_dataset):
        """Test the dimension properties."""
        assert small_dataset.num_inputs == 3
        assert small_dataset.input_dim == 2
        assert small_dataset.replicates == 2
        assert small_dataset.supports_proposal

    def test_replicate_order_invariance(self):
        """Test that permuting replicates leaves the statistics unchanged."""
        rng = np.random.default_rng(8)
        X = rng.uniform(-1.0, 1.0, (10, 2))
        Y = rng.standard_normal((10, 7)) * 1e3 + rng.standard_normal((10, 7))
        permuted = Y[:, rng.permutation(7)]
        a = build_dataset(X, Y)
        b = build_dataset(X, permuted)
        assert np.array_equal(a.y_mean, b.y_mean)
        assert np.array_equal(a.sample_variance, b.sample_variance)
        assert np.array_equal(a.z, b.z)

    def test_duplicate_inputs(self):
        """Test that duplicate inputs are rejected."""
        with pytest.raises(DatasetError, match="duplicate"):
            build_dataset([[0.0, 0.0], [0.0, 0.0]], [[1.0, 2.0], [3.0, 4.0]])

    def test_single_replicate_with_proposal(self):
        """Test that S = 1 cannot feed the proposal."""
        with pytest.raises(DatasetError, match="S >= 2"):
            build_dataset([[0.0, 0.0]], [[1.0]])

    def test_single_replicate_without_proposal(self):
        """Test that S = 1 is accepted when no proposal is needed."""
        data = build_dataset([[0.0, 0.0]], [[1.5]], require_proposal=False)
        assert data.y_mean.tolist() == [1.5]
        assert data.z is None
        assert not data.supports_proposal

    def test_zero_variance(self):
        """Test that identical replicates are rejected."""
        with pytest.raises(DatasetError, match="zero"):
            build_dataset([[0.0, 0.0], [1.0, 1.0]], [[1.0, 2.0], [4.0, 4.0]])

    def test_row_mismatch(self):
        """Test that X and Y must have the same rows."""
        with pytest.raises(DatasetError):
            build_dataset([[0.0, 0.0], [1.0, 1.0]], [[1.0, 2.0]])

    def test_non_finite(self):
        """Test that NaN outputs are rejected."""
        with pytest.raises(DatasetError):
            build_dataset([[0.0, 0.0]], [[1.0, float("nan")]])

    def test_arrays_read_only(self, small_dataset):
        """Test that the stored arrays are immutable."""
        with pytest.raises(ValueError):
            small_dataset.y_mean[0] = 0.0


@pytest.mark.unit
class TestLogChiSquare:
    """Tests for the log-variance statistic constants."""

    def test_offset_for_two_replicates(self):
        """Test ln(S-1) - ln 2 - digamma((S-1)/2) at S = 2."""
        assert log_chi2_mean_offset(2) == pytest.approx(EULER_GAMMA + math.log(2.0), abs=1e-12)

    def test_std_for_two_replicates(self):
        """Test omega = sqrt(pi^2 / 2) at S = 2."""
        assert log_chi2_std(2) == pytest.approx(2.221441469079183, rel=1e-12)

    def test_requires_two_replicates(self):
        """Test that S < 2 is rejected."""
        with pytest.raises(DatasetError):
            log_chi2_std(1)

    def test_statistic_of_zero_variance(self):
        """Test that a zero variance is reported with its row."""
        with pytest.raises(DatasetError, match="\\[1\\]"):
            log_variance_statistic(np.array([1.0, 0.0]), 3)

    @pytest.mark.slow
    def test_moments_match_log_variance(self):
        """Test E[z] = h and V[z] = omega^2 over 10^6 replicate pairs at h = 0.7."""
        h, S, n = 0.7, 2, 1_000_000
        rng = np.random.default_rng(2024)
        Y = rng.standard_normal((n, S)) * math.sqrt(math.exp(h))
        variance = np.var(Y, axis=1, ddof=1)
        z = log_variance_statistic(variance, S)

        assert abs(z.mean() - h) <= 0.01
        assert z.var(ddof=1) == pytest.approx(math.pi ** 2 / 2.0, rel=0.02)

    @pytest.mark.slow
    def test_scaled_variance_is_chi_square(self):
        """Test (S-1) V / exp(h) ~ chi2(S-1) with a KS test at 10^5 draws."""
        h, S, n = 0.7, 3, 100_000
        X = np.stack([np.arange(n) / n, np.zeros(n)], axis=1)
        data = simulate_observations(
            zero_mean,
            lambda X: np.full(X.shape[0], h),
            X,
            S,
            seed=99,
        )
        scaled = (S - 1) * data.sample_variance / math.exp(h)
        result = stats.kstest(scaled, "chi2", args=(S - 1,))
        assert result.pvalue > 0.01


@pytest.mark.unit
class TestSimulateObservations:
    """Tests for the observation simulator."""

    def test_deterministic(self):
        """Test that equal seeds give equal outputs."""
        X = regular_grid(-1.0, 1.0, 4)
        a = simulate_observations(sinusoid_mean, sigmoid_log_variance, X, 2, seed=3)
        b = simulate_observations(sinusoid_mean, sigmoid_log_variance, X, 2, seed=3)
        c = simulate_observations(sinusoid_mean, sigmoid_log_variance, X, 2, seed=4)
        assert np.array_equal(a.Y, b.Y)
        assert not np.array_equal(a.Y, c.Y)

    def test_vanishing_noise(self):
        """Test that h = -inf (floored variance) reproduces f."""
        X = regular_grid(-1.0, 1.0, 3)
        data = simulate_observations(
            sinusoid_mean,
            lambda X: np.full(X.shape[0], -np.inf),
            X,
            2,
            seed=0,
            # replicates may coincide to the last bit
            require_proposal=False,
        )
        np.testing.assert_allclose(data.y_mean, sinusoid_mean(X), rtol=0.0, atol=1e-10)
        assert np.all(data.sample_variance < 1e3 * MIN_NOISE_VARIANCE)

    def test_benchmark_grid(self):
        """Test the 10x10 benchmark setup."""
        X = regular_grid(-1.0, 1.0, 10)
        data = simulate_observations(sinusoid_mean, sigmoid_log_variance, X, 2, seed=1)
        assert data.num_inputs == 100
        assert data.replicates == 2

    def test_rejects_zero_replicates(self):
        """Test that S must be positive."""
        with pytest.raises(DatasetError):
            simulate_observations(zero_mean, zero_mean, [[0.0, 0.0]], 0, seed=0)

    def test_rejects_nan_log_variance(self):
        """Test that a NaN log-variance is rejected."""
        with pytest.raises(DatasetError):
            simulate_observations(
                zero_mean,
                lambda X: np.full(X.shape[0], np.nan),
                [[0.0, 0.0]],
                2,
                seed=0,
            )


@pytest.mark.unit
class TestGridAndTruth:
    """Tests for the input grid and the truth registry."""

    def test_grid_order(self):
        """Test that the first coordinate varies slowest."""
        X = regular_grid(-1.0, 1.0, 10)
        assert X.shape == (100, 2)
        assert X[0].tolist() == [-1.0, -1.0]
        assert X[1] == pytest.approx([-1.0, -1.0 + 2.0 / 9.0])
        assert X[10] == pytest.approx([-1.0 + 2.0 / 9.0, -1.0])
        assert X[-1].tolist() == [1.0, 1.0]

    def test_grid_bounds(self):
        """Test that an inverted range is rejected."""
        with pytest.raises(DatasetError):
            regular_grid(1.0, -1.0, 3)

    def test_sinusoid_mean(self):
        """Test f at the origin and at (0.5, 0.25)."""
        assert sinusoid_mean(np.array([[0.0, 0.0]]))[0] == 0.0
        assert sinusoid_mean(np.array([[0.5, 0.25]]))[0] == pytest.approx(-20.0, rel=1e-15)

    def test_sigmoid_log_variance(self):
        """Test h(x2 = 0) = ln 0.85."""
        assert sigmoid_log_variance(np.array([[0.3, 0.0]]))[0] == pytest.approx(math.log(0.85), rel=1e-15)

    def test_registry(self):
        """Test lookups by name."""
        mean, log_variance = get_truth("sinusoid")
        assert mean is sinusoid_mean
        assert log_variance is sigmoid_log_variance
        with pytest.raises(DatasetError, match="Available"):
            get_truth("unknown")


@pytest.mark.unit
class TestDatasetCsv:
    """Tests for dataset CSV export and import."""

    def test_round_trip(self, tmp_path):
        """Test exact recovery of inputs and outputs."""
        X = regular_grid(-1.0, 1.0, 3)
        data = simulate_observations(sinusoid_mean, sigmoid_log_variance, X, 3, seed=12)
        path = tmp_path / "dataset.csv"
        assert write_dataset_csv(data, path) == 9

        loaded = read_dataset_csv(path)
        assert np.array_equal(loaded.X, data.X)
        assert np.array_equal(loaded.Y, data.Y)

    def test_header(self, tmp_path, small_dataset):
        """Test the x/y column header."""
        path = tmp_path / "dataset.csv"
        write_dataset_csv(small_dataset, path)
        assert path.read_text().splitlines()[0] == "x1,x2,y1,y2"

    def test_missing_columns(self, tmp_path):
        """Test that a header without y columns is rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2\n0,0\n")
        with pytest.raises(DatasetError):
            read_dataset_csv(path)
