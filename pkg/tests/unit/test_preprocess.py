"""
Unit tests for PCA and per-component scaling
"""

import logging

import numpy as np
import pytest

from koopman_distill.error_handler import PcaError, ShapeError
from koopman_distill.preprocess import (
    PcaModel,
    Scaler,
    components_for_ratio,
    fit_pca,
    fit_scaler,
    pca_transform,
    standardize,
)


class TestFitPca:
    """Test PCA fitting"""

    def test_line_data_has_one_component(self, rng):
        t = rng.standard_normal(50)
        x = np.outer(t, [3.0, 4.0, 0.0]) + np.array([1.0, 2.0, 3.0])
        model = fit_pca(x, 2)
        assert model.explained_ratio[0] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(np.abs(model.components[:, 0]), [0.6, 0.8, 0.0], atol=1e-12)
        np.testing.assert_allclose(model.input_mean, [1.0, 2.0, 3.0] + t.mean() * np.array([3.0, 4.0, 0.0]))

    def test_components_orthonormal(self, rng):
        model = fit_pca(rng.standard_normal((40, 6)), 4)
        np.testing.assert_allclose(model.components.T @ model.components, np.eye(4), atol=1e-12)
        assert np.all(np.diff(model.explained_ratio) <= 0)
        assert model.cumulative_ratio[-1] <= 1.0 + 1e-12

    def test_sign_convention(self, rng):
        model = fit_pca(rng.standard_normal((30, 5)), 5)
        for j in range(5):
            column = model.components[:, j]
            assert column[np.argmax(np.abs(column))] > 0

    def test_refit_is_bit_identical(self, rng):
        x = rng.standard_normal((25, 4))
        np.testing.assert_array_equal(fit_pca(x, 3).components, fit_pca(x.copy(), 3).components)

    def test_dim_out_of_range(self, rng):
        with pytest.raises(PcaError, match='out of range'):
            fit_pca(rng.standard_normal((5, 3)), 4)
        with pytest.raises(PcaError):
            fit_pca(rng.standard_normal((5, 3)), 0)

    def test_needs_two_samples(self):
        with pytest.raises(PcaError, match='at least 2 samples'):
            fit_pca(np.ones((1, 3)), 1)

    def test_identical_rows_are_degenerate(self):
        with pytest.raises(PcaError, match='degenerate'):
            fit_pca(np.tile([1.0, 2.0], (4, 1)), 1)

    def test_component_variance_matches_singular_values(self, rng):
        x = rng.standard_normal((60, 5)) * [5.0, 3.0, 2.0, 1.0, 0.5]
        model = fit_pca(x, 3)
        variance = pca_transform(model, x).var(axis=0)
        np.testing.assert_allclose(variance, model.singular_values ** 2 / 60, rtol=1e-8)


class TestPcaTransform:
    """Test projection"""

    def test_mean_maps_to_origin(self, rng):
        x = rng.standard_normal((20, 4))
        model = fit_pca(x, 2)
        np.testing.assert_allclose(pca_transform(model, x.mean(axis=0)), [0.0, 0.0], atol=1e-12)

    def test_batch_matches_rows(self, rng):
        x = rng.standard_normal((10, 4))
        model = fit_pca(x, 3)
        batch = pca_transform(model, x)
        for i in range(10):
            np.testing.assert_allclose(pca_transform(model, x[i]), batch[i], atol=1e-12)

    def test_wrong_width(self, rng):
        model = fit_pca(rng.standard_normal((10, 4)), 2)
        with pytest.raises(ShapeError):
            pca_transform(model, np.zeros(3))

    def test_dict_round_trip(self, rng):
        model = fit_pca(rng.standard_normal((10, 4)), 2)
        restored = PcaModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(restored.components, model.components)
        assert restored.n_samples == 10


class TestComponentsForRatio:
    """Test the contribution-ratio helper"""

    def _model(self, ratios):
        ratios = np.asarray(ratios)
        return PcaModel(
            components=np.eye(4)[:, :len(ratios)],
            input_mean=np.zeros(4),
            explained_ratio=ratios,
            singular_values=np.sqrt(ratios),
            n_samples=10,
        )

    def test_smallest_dim_reaching_target(self):
        model = self._model([0.5, 0.3, 0.15])
        assert components_for_ratio(model, 0.5) == 1
        assert components_for_ratio(model, 0.8) == 2
        assert components_for_ratio(model, 0.9) == 3

    def test_unreached_target(self):
        assert components_for_ratio(self._model([0.5, 0.3]), 0.99) == 3

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            components_for_ratio(self._model([1.0]), 0.0)


class TestScaler:
    """Test standardization and min-max scaling"""

    def test_standardize_columns(self, rng):
        z = rng.normal(loc=5.0, scale=3.0, size=(100, 3))
        scaled = standardize(fit_scaler(z), z)
        np.testing.assert_allclose(scaled.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.std(axis=0), 1.0, atol=1e-12)

    def test_minmax_columns(self, rng):
        z = rng.uniform(-2.0, 7.0, size=(50, 2))
        scaled = standardize(fit_scaler(z, method='minmax'), z)
        np.testing.assert_allclose(scaled.min(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaled.max(axis=0), 1.0, atol=1e-12)

    def test_constant_column_uses_epsilon(self, caplog):
        z = np.array([[1.0, 2.0], [1.0, 4.0], [1.0, 6.0]])
        with caplog.at_level(logging.WARNING, logger='koopman_distill.preprocess'):
            scaler = fit_scaler(z, epsilon=1e-3)
        assert 'constant column' in caplog.text
        assert scaler.divisor[0] == 1e-3
        np.testing.assert_array_equal(standardize(scaler, z)[:, 0], 0.0)

    def test_single_sample_rejected(self):
        with pytest.raises(ShapeError):
            fit_scaler(np.ones((1, 2)))

    def test_unknown_method(self, rng):
        with pytest.raises(ValueError, match='Unknown scaling'):
            fit_scaler(rng.standard_normal((4, 2)), method='robust')

    def test_dict_round_trip(self, rng):
        scaler = fit_scaler(rng.standard_normal((6, 2)), method='minmax')
        restored = Scaler.from_dict(scaler.to_dict())
        assert restored.method == 'minmax'
        np.testing.assert_array_equal(restored.sigma, scaler.sigma)
