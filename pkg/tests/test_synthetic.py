"""Synthetic data generation: determinism, stream separation, covariance
targets, drift, and round-tripping through the ingestion pipeline."""

import numpy as np
import pytest

from concord.concordance import concordance_subset
from concord.ingest import read_chunks, sample_rows
from concord.linalg import SingularMatrixError, scatter_from_matrix
from concord.synthetic import (
    SyntheticSpec,
    build_sigma,
    generate,
    generate_categorical_demo,
    schema_for_synthetic,
    write_csv,
)


class TestSpecValidation:
    def test_rho_range(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n=10, d=2, rho=1.0)

    def test_bad_response(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n=10, d=2, response="poisson")

    def test_bad_drift_column(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n=10, d=2, drift_column=2)

    def test_equicorrelated_sigma(self):
        sigma = build_sigma(SyntheticSpec(n=5, d=3, rho=0.4))
        np.testing.assert_allclose(sigma, 0.4 * np.ones((3, 3)) + 0.6 * np.eye(3))

    def test_non_pd_sigma_rejected(self):
        spec = SyntheticSpec(n=5, d=2, sigma=np.diag([1.0, -1.0]), response="none")
        with pytest.raises(SingularMatrixError):
            generate(spec)


class TestGenerate:
    def test_noiseless_linear_is_exact(self):
        spec = SyntheticSpec(n=50, d=3, noise_sd=0.0, beta=np.array([1.0, -2.0, 0.5]))
        x, y, _ = generate(spec, seed=7)
        np.testing.assert_allclose(y, x @ np.array([1.0, -2.0, 0.5]), atol=1e-12)

    def test_deterministic_by_seed(self):
        spec = SyntheticSpec(n=20, d=2)
        x1, y1, _ = generate(spec, seed=3)
        x2, y2, _ = generate(spec, seed=3)
        np.testing.assert_array_equal(x1, x2)
        np.testing.assert_array_equal(y1, y2)

    def test_noise_stream_disjoint_from_design(self):
        a = SyntheticSpec(n=30, d=2, noise_sd=1.0)
        b = SyntheticSpec(n=30, d=2, noise_sd=3.0)
        xa, ya, _ = generate(a, seed=11)
        xb, yb, _ = generate(b, seed=11)
        np.testing.assert_array_equal(xa, xb)
        resid_a = ya - xa @ np.ones(2)
        resid_b = yb - xb @ np.ones(2)
        np.testing.assert_allclose(resid_b, 3.0 * resid_a, rtol=1e-12)

    def test_sample_covariance_near_identity(self):
        x, _, _ = generate(SyntheticSpec(n=10_000, d=5, response="none"), seed=13)
        cov = x.T @ x / 10_000
        rel = np.linalg.norm(cov - np.eye(5)) / np.linalg.norm(np.eye(5))
        assert rel <= 0.05

    def test_equicorrelated_covariance_target(self):
        spec = SyntheticSpec(n=20_000, d=4, rho=0.5, response="none")
        x, _, _ = generate(spec, seed=17)
        cov = x.T @ x / 20_000
        sigma = build_sigma(spec)
        assert np.linalg.norm(cov - sigma) / np.linalg.norm(sigma) <= 0.05

    def test_logistic_response_rate_tracks_probability(self):
        spec = SyntheticSpec(n=20_000, d=2, beta=np.zeros(2), response="logistic")
        _, y, _ = generate(spec, seed=19)
        assert y.mean() == pytest.approx(0.5, abs=0.02)
        assert set(np.unique(y)) <= {0.0, 1.0}

    def test_drift_breaks_head_sampling(self):
        spec = SyntheticSpec(
            n=20_000, d=4, response="none", drift_column=0, drift_magnitude=6.0
        )
        x, _, _ = generate(spec, seed=23)
        total = scatter_from_matrix(x)
        head = scatter_from_matrix(x[:500])
        rng = np.random.default_rng(29)
        random_rows = scatter_from_matrix(x[rng.choice(20_000, 500, replace=False)])
        head_dev = abs(concordance_subset(total, head, "overlapping").value - 1)
        rand_dev = abs(concordance_subset(total, random_rows, "overlapping").value - 1)
        assert head_dev > 5 * rand_dev


class TestRoundTrip:
    def test_csv_bit_exact(self, tmp_path):
        spec = SyntheticSpec(n=40, d=3)
        x, y, _ = generate(spec, seed=31)
        path = tmp_path / "data.csv"
        write_csv(path, x, y)
        schema = schema_for_synthetic(3, response="y")
        (chunk,) = read_chunks(str(path), schema)
        np.testing.assert_array_equal(chunk.design, x)
        np.testing.assert_array_equal(chunk.response, y)

    def test_binary_threshold_round_trip(self, tmp_path):
        spec = SyntheticSpec(n=30, d=2, response="logistic")
        x, y, _ = generate(spec, seed=37)
        path = tmp_path / "logit.csv"
        write_csv(path, x, y)
        schema = schema_for_synthetic(2, response="y", binary_threshold=0.5)
        (chunk,) = read_chunks(str(path), schema)
        np.testing.assert_array_equal(chunk.response, y)

    def test_sampling_round_trip(self, tmp_path):
        spec = SyntheticSpec(n=25, d=2, response="none")
        x, _, _ = generate(spec, seed=41)
        path = tmp_path / "x.csv"
        write_csv(path, x)
        schema = schema_for_synthetic(2)
        chunk = sample_rows(str(path), schema, 10, method="head")
        np.testing.assert_array_equal(chunk.design, x[:10])


class TestCategoricalDemo:
    def test_levels_and_width(self, tmp_path):
        path = tmp_path / "demo.csv"
        schema = generate_categorical_demo(path, n=90, seed=43)
        (chunk,) = read_chunks(str(path), schema)
        assert chunk.design.shape == (90, 4)
        assert set(np.unique(chunk.design[:, 1:3])) <= {0.0, 1.0}
        # Tertile thresholding puts roughly a third of rows in each level.
        counts = chunk.design[:, 1:3].sum(axis=0)
        assert np.all(counts >= 20)
