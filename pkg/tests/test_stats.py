import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randfactor.errors import (
    DegenerateSampleError,
    DimensionError,
    DomainError,
    PreconditionError,
    ZeroVarianceError,
)
from randfactor.stats import (
    DataPanel,
    center,
    correlation_matrix,
    covariance_matrix,
    is_centered,
    log_returns,
    panel_from_columns,
    sample_corr,
    sample_cov,
    sample_mean,
    sample_std,
    sample_var,
    standardize,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


class TestSampleMean:
    def test_values(self):
        assert sample_mean([1, 2, 3]) == 2.0
        assert sample_mean([0, 0, 0, 0]) == 0.0
        assert sample_mean([1, -1, 3, -3, 5]) == 1.0

    def test_empty(self):
        with pytest.raises(DimensionError):
            sample_mean([])

    def test_two_pass_accuracy(self):
        # large offset: a naive sum loses the small deviations
        x = 1e8 + np.array([0.1, 0.2, 0.3, 0.4])
        assert sample_mean(x) == pytest.approx(1e8 + 0.25, abs=1e-7)


class TestSampleCov:
    def test_values(self):
        assert sample_cov([1, -1], [1, -1]) == 2.0
        assert sample_cov([1, 2, 3], [3, 2, 1]) == -1.0
        assert sample_cov([4.0, -2.0, 7.5], [3.0, 3.0, 3.0]) == 0.0

    def test_errors(self):
        with pytest.raises(DimensionError):
            sample_cov([1, 2], [1, 2, 3])
        with pytest.raises(DegenerateSampleError):
            sample_cov([1.0], [2.0])

    def test_matches_numpy(self, rng):
        x, y = rng.standard_normal((2, 37))
        assert sample_cov(x, y) == pytest.approx(np.cov(x, y)[0, 1], rel=1e-12)
        assert sample_var(x) == pytest.approx(np.var(x, ddof=1), rel=1e-12)
        assert sample_std(x) == pytest.approx(np.std(x, ddof=1), rel=1e-12)

    @given(arrays(np.float64, st.integers(2, 30), elements=finite),
           arrays(np.float64, 30, elements=finite))
    def test_symmetric_and_bilinear(self, x, y):
        y = y[: x.size]
        assert sample_cov(x, y) == pytest.approx(sample_cov(y, x), rel=1e-12, abs=1e-9)
        assert sample_cov(2.0 * x, y) == pytest.approx(2.0 * sample_cov(x, y), rel=1e-9, abs=1e-7)


class TestCorr:
    def test_perfect(self):
        assert sample_corr([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert sample_corr([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_constant(self):
        with pytest.raises(ZeroVarianceError) as info:
            sample_corr([1, 2, 3], [5, 5, 5])
        assert info.value.column == 1

    @given(arrays(np.float64, (12, 2), elements=finite))
    def test_bounded(self, xy):
        if np.ptp(xy[:, 0]) < 1e-3 or np.ptp(xy[:, 1]) < 1e-3:
            return
        assert -1.0 <= sample_corr(xy[:, 0], xy[:, 1]) <= 1.0

    def test_matrices(self, rng):
        X = rng.standard_normal((40, 5))
        np.testing.assert_allclose(covariance_matrix(X), np.cov(X, rowvar=False), rtol=1e-12)
        np.testing.assert_allclose(correlation_matrix(X), np.corrcoef(X, rowvar=False), atol=1e-13)
        X[:, 2] = 1.0
        with pytest.raises(ZeroVarianceError):
            correlation_matrix(X)


class TestLogReturns:
    def test_values(self):
        np.testing.assert_allclose(log_returns([1.0, math.e, math.e**2]), [1.0, 1.0], rtol=1e-15)
        np.testing.assert_array_equal(log_returns([5.0, 5.0, 5.0]), [0.0, 0.0])
        assert log_returns([100.0, 110.0])[0] == pytest.approx(0.09531017980432493, rel=1e-14)

    def test_matrix(self):
        P = np.array([[1.0, 2.0], [2.0, 2.0], [4.0, 1.0]])
        np.testing.assert_allclose(log_returns(P), np.log([[2.0, 1.0], [2.0, 0.5]]))

    @pytest.mark.parametrize("bad", [[1.0, 0.0, 2.0], [1.0, -3.0], [1.0, float("nan")]])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            log_returns(bad)


class TestStandardize:
    def test_simple_column(self):
        out = standardize(panel_from_columns([[1.0, 2.0, 3.0]]))
        np.testing.assert_allclose(out.values[:, 0], [-1.0, 0.0, 1.0], atol=1e-15)
        assert out.preprocessing == "standardized"

    def test_idempotent(self, rng):
        once = standardize(DataPanel(rng.standard_normal((50, 4))))
        twice = standardize(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-12)

    def test_zero_variance_reports_column(self):
        X = np.column_stack([[1.0, 2.0, 3.0], [7.0, 7.0, 7.0]])
        with pytest.raises(ZeroVarianceError) as info:
            standardize(DataPanel(X))
        assert info.value.column == 1

    @settings(max_examples=60)
    @given(arrays(np.float64, st.tuples(st.integers(3, 25), st.integers(1, 5)),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
    def test_invariants(self, X):
        spread = X.max(axis=0) - X.min(axis=0)
        if np.any(spread <= 1e-6 * np.maximum(np.abs(X).max(axis=0), 1.0)):
            return
        out = standardize(DataPanel(X)).values
        assert is_centered(out)
        np.testing.assert_allclose(out.std(axis=0, ddof=1), 1.0, atol=1e-10)


class TestDataPanel:
    def test_read_only_copy(self):
        src = np.array([[1.0, 2.0], [3.0, 4.0]])
        p = DataPanel(src)
        src[0, 0] = 99.0
        assert p.values[0, 0] == 1.0
        with pytest.raises(ValueError):
            p.values[0, 0] = 5.0

    def test_shape_properties(self, rng):
        p = DataPanel(rng.standard_normal((7, 3)), series_ids=["a", "b", "c"])
        assert (p.d, p.N, p.shape) == (7, 3, (7, 3))
        assert p.ids() == ("a", "b", "c")
        assert DataPanel(np.zeros((2, 2))).ids() == ("s0", "s1")

    def test_validation(self):
        with pytest.raises(DegenerateSampleError):
            DataPanel(np.ones((1, 3)))
        with pytest.raises(DimensionError):
            DataPanel(np.ones(4))
        with pytest.raises(DomainError):
            DataPanel(np.array([[1.0, np.inf], [0.0, 1.0]]))
        with pytest.raises(PreconditionError):
            DataPanel(np.array([[1.0], [2.0]]), "centered")
        with pytest.raises(PreconditionError):
            DataPanel(np.array([[1.0], [-1.0]]) * 3.0, "standardized")
        with pytest.raises(DimensionError):
            DataPanel(np.zeros((2, 2)), series_ids=["x"])

    def test_center(self, rng):
        p = center(DataPanel(rng.standard_normal((20, 3)) + 5.0))
        assert p.preprocessing == "centered"
        assert is_centered(p.values)
        p.require_centered()
        with pytest.raises(PreconditionError):
            DataPanel(np.array([[1.0], [2.0]])).require_centered()
