import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randfactor.errors import DimensionError, NotElementIIDError
from randfactor.randproj import (
    FAMILIES,
    IID_FAMILIES,
    NORMALIZED_FAMILIES,
    ProjectionSpec,
    covariance_scale,
    distribution_moments,
    draw_projection,
    draw_projection_batch,
    expected_projection_factor,
    factor_scale,
    make_rng,
    mean_scale,
    resolve_scale,
)


class TestSpec:
    def test_validation(self):
        with pytest.raises(DimensionError):
            ProjectionSpec("gaussian", 0, 10)
        with pytest.raises(DimensionError):
            ProjectionSpec("gaussian", 2, 0)
        with pytest.raises(ValueError):
            ProjectionSpec("cauchy", 2, 10)
        with pytest.raises(ValueError):
            ProjectionSpec("gaussian", 2, 10, seed=-1)
        with pytest.raises(ValueError):
            ProjectionSpec("gaussian", 2, 10, seed=2**64)
        assert ProjectionSpec("gaussian", 2, 10, seed=2**64 - 1).seed == 2**64 - 1

    @pytest.mark.parametrize("family", FAMILIES)
    def test_reproducible(self, family):
        spec = ProjectionSpec(family, 4, 9, seed=123)
        np.testing.assert_array_equal(draw_projection(spec), draw_projection(spec))
        assert draw_projection(spec).shape == (4, 9)
        assert not np.array_equal(draw_projection(spec), draw_projection(spec.with_seed(124)))


class TestDraw:
    def test_coin_flip_support(self):
        B = draw_projection(ProjectionSpec("coin_flip", 30, 40, 1))
        assert set(np.unique(B)) == {-1.0, 1.0}

    def test_sparse_fractions(self):
        B = draw_projection(ProjectionSpec("sparse_achlioptas", 60, 1000, 2))
        assert set(np.unique(B)) <= {-1.0, 0.0, 1.0}
        assert abs(np.mean(B == 0.0) - 2.0 / 3.0) <= 0.01
        assert abs(np.mean(B == 1.0) - 1.0 / 6.0) <= 0.01

    def test_uniform_support(self):
        B = draw_projection(ProjectionSpec("uniform", 20, 50, 3))
        assert B.min() >= -1.0 and B.max() < 1.0

    def test_normalized_lengths(self):
        B = draw_projection(ProjectionSpec("column_normalized_gaussian", 7, 30, 4))
        np.testing.assert_allclose(np.linalg.norm(B, axis=0), 1.0, atol=1e-12)
        B = draw_projection(ProjectionSpec("row_normalized_gaussian", 7, 30, 4))
        np.testing.assert_allclose(np.linalg.norm(B, axis=1), 1.0, atol=1e-12)

    @pytest.mark.parametrize("family", IID_FAMILIES)
    def test_element_moments(self, family):
        m = distribution_moments(family)
        B = draw_projection_batch(family, 50, 200, 20, make_rng(9)).ravel()
        n = B.size
        assert abs(B.mean()) < 5 * math.sqrt(m.c2 / n)
        assert np.mean(B**2) == pytest.approx(m.c2, rel=0.01)
        assert np.mean(B**4) == pytest.approx(m.fourth_moment, rel=0.02)

    def test_batch_streams_differ(self):
        a = draw_projection_batch("gaussian", 2, 5, 3, make_rng(1, 0))
        b = draw_projection_batch("gaussian", 2, 5, 3, make_rng(1, 1))
        assert not np.array_equal(a, b)


class TestMoments:
    def test_values(self):
        def pair(family):
            m = distribution_moments(family)
            return m.c2, m.b4

        assert pair("gaussian") == (1.0, 0.0)
        assert pair("coin_flip") == (1.0, -2.0)
        assert pair("sparse_achlioptas") == pytest.approx((1.0 / 3.0, 0.0), abs=1e-14)
        assert pair("uniform") == pytest.approx((1.0 / 3.0, -1.2), rel=1e-14)

    @pytest.mark.parametrize("family", NORMALIZED_FAMILIES)
    def test_normalized_rejected(self, family):
        with pytest.raises(NotElementIIDError):
            distribution_moments(family)

    @pytest.mark.parametrize("family", IID_FAMILIES)
    def test_kurtosis_bound(self, family):
        m = distribution_moments(family)
        assert m.c2 > 0 and m.b4 >= -2.0


class TestScales:
    def test_gaussian(self):
        assert covariance_scale("gaussian", 10, 100) == pytest.approx(0.0301511344577763, rel=1e-12)

    def test_coin_flip(self):
        assert covariance_scale("coin_flip", 10, 100) == pytest.approx(1.0 / math.sqrt(1080.2), rel=1e-12)

    @given(st.integers(1, 500), st.integers(1, 5000))
    def test_sparse_closed_form(self, k, d):
        assert covariance_scale("sparse_achlioptas", k, d) == pytest.approx(3.0 / math.sqrt(k * (k + d)), rel=1e-12)

    def test_factor_scale(self):
        assert factor_scale(4) == 0.5
        assert factor_scale(1) == 1.0
        assert factor_scale(100) == pytest.approx(0.1)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_mean_scale_unbiased(self, family):
        # E[a B^T B] = I under the mean scale; check the diagonal over many draws
        k, d = 6, 9
        a = mean_scale(family, k, d)
        assert expected_projection_factor(family, k, d, a) == pytest.approx(1.0)
        B = draw_projection_batch(family, k, d, 20000, make_rng(5))
        P = a * np.einsum("tkm,tkn->mn", B, B) / B.shape[0]
        np.testing.assert_allclose(P, np.eye(d), atol=0.03)

    def test_resolve(self):
        assert resolve_scale("gaussian", 10, 100) == covariance_scale("gaussian", 10, 100)
        assert resolve_scale("gaussian", 10, 100, "mean") == 0.1
        assert resolve_scale("gaussian", 10, 100, 0.25) == 0.25
        for bad in ("median", 0.0, -1.0):
            with pytest.raises(ValueError):
                resolve_scale("gaussian", 10, 100, bad)
