import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deephybrid.exceptions import DivergenceError, NumericalError
from deephybrid.storm import StormParams, storm_init, storm_solve, storm_step


class TestParams:
    @pytest.mark.parametrize("field", ["k_lr", "omega", "c", "grad_tol"])
    @pytest.mark.parametrize("value", [0.0, -1.0, np.inf, np.nan])
    def test_rejects_nonpositive(self, field, value):
        with pytest.raises(ValueError, match=field):
            StormParams(**{field: value})

    @pytest.mark.parametrize("value", [0, -3, 2.5])
    def test_rejects_bad_budget(self, value):
        with pytest.raises(ValueError, match="max_iter"):
            StormParams(max_iter=value)

    def test_step_size_formula(self):
        p = StormParams(k_lr=0.5, omega=2.0)
        assert p.step_size(6.0) == pytest.approx(0.5 / 2.0)


class TestRecursion:
    def test_init(self):
        p = StormParams()
        s = storm_init(np.zeros(3), np.array([1.0, 2.0, 2.0]), p)
        assert s.g_sum == 9.0 and s.t == 1
        assert s.eta == pytest.approx(0.1 / 10.0 ** (1 / 3))
        np.testing.assert_array_equal(s.d, [1.0, 2.0, 2.0])

    def test_step_by_hand(self):
        p = StormParams(k_lr=1.0, omega=1.0, c=0.5)
        s = storm_init(np.zeros(1), np.array([3.0]), p)
        alpha = min(1.0, 0.5 * s.eta**2)
        new = storm_step(s, np.array([2.0]), np.array([1.0]), p)
        d = 2.0 + (1 - alpha) * (3.0 - 1.0)
        eta = 1.0 / (1.0 + 9.0 + 4.0) ** (1 / 3)
        np.testing.assert_allclose(new.d, [d])
        np.testing.assert_allclose(new.x, [-eta * d])
        assert new.eta == pytest.approx(eta)

    def test_deterministic_reduces_to_gradient_descent(self):
        p = StormParams()
        s = storm_init(np.ones(2), np.array([0.5, -0.5]), p)
        g = np.array([0.2, 0.1])
        new = storm_step(s, g, g, p)
        alpha = min(1.0, p.c * s.eta**2)
        np.testing.assert_allclose(new.d, g + (1 - alpha) * (s.d - g))

    def test_shape_mismatch(self):
        p = StormParams()
        s = storm_init(np.zeros(2), np.ones(2), p)
        with pytest.raises(ValueError, match="shape"):
            storm_step(s, np.ones(3), np.ones(3), p)

    def test_nonfinite_gradient(self):
        p = StormParams()
        s = storm_init(np.zeros(2), np.ones(2), p)
        with pytest.raises(NumericalError):
            storm_step(s, np.array([np.nan, 0.0]), np.zeros(2), p)


class TestSolve:
    def test_zero_gradient_returns_start(self):
        res = storm_solve(lambda x: np.zeros_like(x), np.ones(3))
        assert res.n_iter == 0 and res.converged
        np.testing.assert_array_equal(res.x, np.ones(3))

    def test_quadratic_matrix_iterate(self, rng):
        target = rng.standard_normal((3, 4))
        p = StormParams(k_lr=1.0, grad_tol=1e-9, max_iter=50_000)
        res = storm_solve(lambda x: x - target, np.zeros((3, 4)), p)
        assert res.converged
        np.testing.assert_allclose(res.x, target, atol=1e-8)

    def test_budget_respected(self):
        p = StormParams(max_iter=7)
        res = storm_solve(lambda x: x - 10.0, np.zeros(2), p)
        assert res.n_iter == 7 and not res.converged

    def test_divergence(self):
        p = StormParams(k_lr=1e6, max_iter=100, c=1e-12)
        with pytest.raises(DivergenceError):
            storm_solve(lambda x: -(x + 1.0) * 1e3, np.zeros(2), p)

    @settings(max_examples=25, deadline=None)
    @given(
        scale=st.floats(0.1, 10.0),
        shift=st.floats(-5.0, 5.0),
    )
    def test_loss_decreases_on_scaled_quadratic(self, scale, shift):
        # Gradient normalized by its Lipschitz constant, as inside the engine.
        f = lambda x: 0.5 * scale * np.sum((x - shift) ** 2)
        res = storm_solve(lambda x: (x - shift), np.zeros(3), StormParams(k_lr=1.0, max_iter=50))
        assert f(res.x) <= f(np.zeros(3))
