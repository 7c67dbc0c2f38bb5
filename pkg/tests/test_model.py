from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lqgtrack.exceptions import ConfigError, NotPositiveDefinite, NotSymmetric, SingularDiffusion
from lqgtrack.model import (ASSET_NAMES, GPIF_COVARIANCE, GPIF_DRIFT, LiabilityParams, MarketParams, Objective,
                            TimeFunction, check_dimensions, cholesky_lower, excess_drift, market_from_covariance,
                            gpif_market, shortfall_objective, risk_quadratic)

from conftest import scalar_market

# exact rational Gaussian elimination of the GPIF system, frozen
GPIF_THETA = 0.4374861654088855


def _exact_quadratic(S, b):
    A = [[Fraction(str(x)) for x in row] + [Fraction(str(v))] for row, v in zip(S, b)]
    n = len(b)
    for i in range(n):
        for j in range(i + 1, n):
            f = A[j][i] / A[i][i]
            A[j] = [p - f * q for p, q in zip(A[j], A[i])]
    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        x[i] = (A[i][n] - sum(A[i][k] * x[k] for k in range(i + 1, n))) / A[i][i]
    return float(sum(Fraction(str(v)) * xi for v, xi in zip(b, x)))


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(cholesky_lower(np.eye(3)), np.eye(3))

    def test_small_hand_example(self):
        L = cholesky_lower([[4.0, 2.0], [2.0, 5.0]])
        assert np.allclose(L, [[2.0, 0.0], [1.0, 2.0]], atol=1e-15, rtol=0)

    def test_gpif_covariance(self):
        L = cholesky_lower(GPIF_COVARIANCE)
        assert np.max(np.abs(L @ L.T - GPIF_COVARIANCE)) <= 1e-12
        assert abs(L[0, 0] - 0.0545) <= 1e-10
        assert np.all(np.triu(L, 1) == 0)

    def test_matches_numpy(self):
        assert np.allclose(cholesky_lower(GPIF_COVARIANCE), np.linalg.cholesky(GPIF_COVARIANCE),
                           atol=1e-14, rtol=0)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetric):
            cholesky_lower([[1.0, 0.5], [0.4, 1.0]])

    def test_tiny_asymmetry_is_symmetrized(self):
        L = cholesky_lower([[1.0, 0.5 + 1e-13], [0.5, 1.0]])
        assert np.allclose(L @ L.T, [[1.0, 0.5], [0.5, 1.0]], atol=1e-12)

    def test_singular(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_lower([[1.0, 1.0], [1.0, 1.0]])

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_lower([[1.0, 2.0], [2.0, 1.0]])

    def test_not_square(self):
        with pytest.raises(ConfigError):
            cholesky_lower(np.ones((2, 3)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6).flatmap(lambda n: st.tuples(
        arrays(float, (n, n), elements=st.floats(-1, 1)),
        arrays(float, n, elements=st.floats(0.5, 2.0)))))
    def test_reconstructs_lower_factor(self, parts):
        off, diag = parts
        L = np.tril(off, -1) + np.diag(diag)
        assert np.allclose(cholesky_lower(L @ L.T), L, atol=1e-12, rtol=0)


class TestRiskQuadratic:
    def test_scalar(self):
        assert risk_quadratic(scalar_market(mu=0.04, sigma=0.2), 0.0) == pytest.approx(0.04, rel=1e-14)

    def test_zero_excess_drift(self):
        assert risk_quadratic(scalar_market(mu=0.0), 0.0) == 0.0

    def test_gpif_value_against_exact_elimination(self):
        exact = _exact_quadratic(GPIF_COVARIANCE.tolist(), GPIF_DRIFT.tolist())
        assert exact == pytest.approx(GPIF_THETA, rel=1e-15)
        assert risk_quadratic(gpif_market(), 0.0) == pytest.approx(GPIF_THETA, rel=1e-10)

    def test_singular_gram(self):
        mk = MarketParams(r=0.0, b=[0.05, 0.05], sigma_S=[[0.2, 0.0], [0.2, 0.0]])
        with pytest.raises(SingularDiffusion):
            risk_quadratic(mk, 0.0)

    def test_excess_drift(self):
        mk = MarketParams(r=0.01, b=[0.03, 0.05], sigma_S=np.eye(2))
        assert np.allclose(excess_drift(mk, 0.0), [0.02, 0.04])


class TestTimeFunction:
    def test_constant(self):
        f = TimeFunction(0.3)
        assert f.is_constant and f(12.0) == 0.3
        assert f.sample([0.0, 1.0]).shape == (2,)

    def test_knots_exact_and_linear_between(self):
        f = TimeFunction([1.0, 3.0, 2.0], times=[0.0, 1.0, 3.0])
        assert [f(0.0), f(1.0), f(3.0)] == [1.0, 3.0, 2.0]
        assert f(0.5) == pytest.approx(2.0)
        assert f(2.0) == pytest.approx(2.5)

    def test_clamps_outside(self):
        f = TimeFunction([1.0, 3.0], times=[1.0, 2.0])
        assert f(-5.0) == 1.0 and f(10.0) == 3.0

    def test_previous(self):
        f = TimeFunction([1.0, 3.0, 2.0], times=[0.0, 1.0, 3.0], kind="previous")
        assert f(0.99) == 1.0 and f(1.0) == 3.0 and f(2.9) == 3.0 and f(3.0) == 2.0

    def test_matrix_values(self):
        f = TimeFunction([np.eye(2), 3 * np.eye(2)], times=[0.0, 2.0])
        assert f.shape == (2, 2)
        assert np.allclose(f(1.0), 2 * np.eye(2))

    def test_single_knot_is_constant(self):
        f = TimeFunction([[1.0, 2.0]], times=[5.0])
        assert f.is_constant and np.array_equal(f(0.0), [1.0, 2.0])

    def test_immutable(self):
        f = TimeFunction([1.0, 2.0], times=[0.0, 1.0])
        with pytest.raises(AttributeError):
            f.kind = "previous"
        with pytest.raises(ValueError):
            f.values[0] = 3.0

    @pytest.mark.parametrize("kwargs", [
        {"values": [1.0, 2.0], "times": [1.0, 0.0]},
        {"values": [1.0, 2.0], "times": [0.0]},
        {"values": [1.0, np.nan], "times": [0.0, 1.0]},
        {"values": [1.0, 2.0], "times": [0.0, 1.0], "kind": "cubic"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            TimeFunction(**kwargs)


class TestParams:
    def test_gpif_market_shape(self):
        mk = gpif_market()
        assert (mk.n, mk.d) == (4, 6)
        assert np.array_equal(mk.sigma_S(0.0)[:, 4:], np.zeros((4, 2)))
        assert len(ASSET_NAMES) == 4

    def test_upper_factor_changes_covariance(self):
        up = market_from_covariance(GPIF_DRIFT, GPIF_COVARIANCE, factor="upper")
        L = cholesky_lower(GPIF_COVARIANCE)
        assert np.allclose(up.gram(0.0), L.T @ L)

    def test_bad_factor(self):
        with pytest.raises(ConfigError):
            market_from_covariance(GPIF_DRIFT, GPIF_COVARIANCE, factor="middle")

    def test_market_dimension_errors(self):
        with pytest.raises(ConfigError):
            MarketParams(r=0.0, b=[0.1, 0.2], sigma_S=[[0.2, 0.0]])
        with pytest.raises(ConfigError):
            MarketParams(r=[0.0, 0.1], b=[0.1], sigma_S=[[0.2]])
        with pytest.raises(ConfigError):
            MarketParams(r=0.0, b=[0.1, 0.2], sigma_S=[[0.2], [0.1]])

    def test_zero_volatility_market_allowed(self):
        mk = MarketParams(r=0.0, b=[0.1], sigma_S=[[0.0]])
        with pytest.raises(SingularDiffusion):
            risk_quadratic(mk, 0.0)

    def test_liability_shapes(self):
        with pytest.raises(ConfigError):
            LiabilityParams(alpha=np.eye(3), h=[0.0, 0.0], y0=[1.0, 1.0])
        with pytest.raises(ConfigError):
            LiabilityParams(alpha=np.eye(2), h=[0.0], y0=[1.0, 1.0])
        lb = LiabilityParams(alpha=np.eye(2), h=[0.0, 0.0], y0=[1.0, 1.0])
        assert lb.d is None and lb.sigma_Y_sample([0.0, 1.0], 5).shape == (2, 2, 5)

    def test_noise_width_mismatch(self):
        mk = MarketParams(r=0.0, b=[0.1], sigma_S=[[0.2, 0.0]])
        lb = LiabilityParams(alpha=[[0.0]], h=[0.0], y0=[1.0], sigma_Y=[[0.1, 0.1, 0.1]])
        with pytest.raises(ConfigError):
            check_dimensions(mk, lb)

    @pytest.mark.parametrize("g1,g2,T", [(-1.0, 1.0, 1.0), (1.0, -0.1, 1.0), (0.0, 0.0, 1.0), (1.0, 1.0, 0.0)])
    def test_objective_invalid(self, g1, g2, T):
        with pytest.raises(ConfigError):
            Objective(g1, g2, [1.0], [1.0], T)

    def test_objective_projection_mismatch(self):
        with pytest.raises(ConfigError):
            Objective(1.0, 1.0, [1.0, 2.0], [1.0], 1.0)
        lb = LiabilityParams(alpha=[[0.0]], h=[0.0], y0=[1.0])
        with pytest.raises(ConfigError):
            check_dimensions(scalar_market(), lb, shortfall_objective())

    def test_shortfall_objective(self):
        ob = shortfall_objective()
        assert ob.T == 30.0 and np.array_equal(ob.A, [-1.0, 1.0])
