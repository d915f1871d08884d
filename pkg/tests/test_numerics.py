import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prospect.errors import ConvergenceError, DomainError, NotSPDError
from prospect.numerics import (MonotoneRootProblem, cubic_residual, invert_monotone, power_polynomial, power_psi,
                               safeguarded_newton, solve_depressed_cubic, solve_power_polynomial, spd_solve)


def bisect_cubic(p, q, iters=200):
    lo, hi = 0.0, 1.0
    while hi**3 + p * hi + q < 0:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid**3 + p * mid + q < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestDepressedCubic:
    def test_examples(self):
        assert solve_depressed_cubic(2.0, -4.0) == pytest.approx(1.1795090246, abs=1e-9)
        assert solve_depressed_cubic(0.0, -8.0) == pytest.approx(2.0, abs=1e-14)

    def test_matches_bisection(self):
        assert solve_depressed_cubic(2.0, -4.0) == pytest.approx(bisect_cubic(2.0, -4.0), abs=1e-12)

    def test_trig_branch_largest_root(self):
        # (s - 1)^2 (s + 2) = s^3 - 3 s + 2
        assert solve_depressed_cubic(-3.0, 2.0) == pytest.approx(1.0, abs=1e-7)
        # roots 1, 2, -3
        assert solve_depressed_cubic(-7.0, 6.0) == pytest.approx(2.0, abs=1e-12)

    def test_vectorized(self):
        p = np.array([2.0, 0.0, 5.0])
        q = np.array([-4.0, -8.0, -1e-9])
        t = solve_depressed_cubic(p, q)
        assert t.shape == (3,)
        assert np.all(np.abs(cubic_residual(t, p, q)) <= 1e-12 * np.maximum(1, np.maximum(abs(p), abs(q))))

    def test_errors(self):
        with pytest.raises(ValueError):
            solve_depressed_cubic(np.nan, -1.0)
        with pytest.raises(DomainError):
            solve_depressed_cubic(1.0, 1.0)

    @given(st.floats(0, 1e6), st.floats(-1e6, -1e-8))
    def test_residual_property(self, p, q):
        t = solve_depressed_cubic(p, q)
        assert t > 0
        assert abs(t**3 + p * t + q) <= 1e-12 * max(1.0, abs(p), abs(q))


class TestInvertMonotone:
    def test_linear(self):
        assert invert_monotone(MonotoneRootProblem(lambda s: 2 * s, 3.0)) == pytest.approx(1.5)

    def test_cubic_with_derivative(self):
        prob = MonotoneRootProblem(lambda s: s**3 + 2 * s, 4.0, derivative=lambda s: 3 * s * s + 2)
        assert invert_monotone(prob) == pytest.approx(1.1795090246, abs=1e-10)

    def test_origin(self):
        assert invert_monotone(MonotoneRootProblem(lambda s: s, 0.0)) == 0.0

    def test_bracket_expansion(self):
        assert invert_monotone(MonotoneRootProblem(lambda s: s, 1e6, bracket_hi=1.0)) == pytest.approx(1e6)

    def test_expansion_limit(self):
        with pytest.raises(ConvergenceError):
            invert_monotone(MonotoneRootProblem(lambda s: 0.0 * s, 1.0))

    def test_nonfinite(self):
        with pytest.raises(DomainError):
            invert_monotone(MonotoneRootProblem(lambda s: np.nan, 1.0))


def test_safeguarded_newton_batch():
    target = np.array([1.0, 8.0, 27.0])
    t = safeguarded_newton(lambda s: s**3, lambda s: 3 * s * s, target, 0.0, 10.0)
    np.testing.assert_allclose(t, [1.0, 2.0, 3.0], atol=1e-13)


class TestPowerPolynomial:
    def test_quadratic_reduces_to_cardano(self):
        # alpha = 2, q = 2: rho = 1 and the root equation is s^3 + 2 s - 4 = 0
        t = solve_power_polynomial(2.0, 0.0, 1.0, 1.0, 2.0)
        assert t == pytest.approx(1.1795090246, abs=1e-10)

    def test_dominant_linear_term(self):
        # s ~ (q* rhs / (gamma rho^2)) / (q* eta / (gamma rho)) = rhs / (rho eta)
        t = solve_power_polynomial(2.0, 1e6, 1.0, 0.5, 1e-3)
        assert t == pytest.approx(1e-3 / (0.5 * 1e6), rel=1e-5)

    @pytest.mark.parametrize("qstar", [1.5, 3.0, 9.0])
    def test_residual(self, qstar, rng):
        shift = rng.uniform(-1, 2, 50)
        rhs = rng.uniform(0.5, 5, 50)
        rho = 0.7
        # keep inputs outside the gate
        ok = qstar * shift + rho * rhs**qstar > 0
        t = solve_power_polynomial(qstar, shift[ok], 1.0, rho, rhs[ok])
        val, _ = power_psi(t, qstar, shift[ok], rho)
        assert np.max(np.abs(val - rhs[ok])) <= 1e-10 * max(1.0, rhs.max())

    def test_polynomial_form(self):
        poly = power_polynomial(3.0, 0.5, 1.0, 0.8, 2.0)
        t = solve_power_polynomial(3.0, 0.5, 1.0, 0.8, 2.0)
        assert abs(poly(t)) <= 1e-9 * max(1.0, np.max(np.abs(poly.coef)))

    def test_rejects_qstar_one(self):
        with pytest.raises(ValueError):
            solve_power_polynomial(1.0, 0.0, 1.0, 1.0, 1.0)


class TestSpdSolve:
    def test_identity(self, rng):
        B = rng.normal(size=(4, 3))
        np.testing.assert_allclose(spd_solve(np.eye(4), B), B)

    def test_scalar(self):
        np.testing.assert_allclose(spd_solve(2 * np.eye(3), np.eye(3)), np.eye(3) / 2)

    def test_residual(self, rng):
        G = rng.normal(size=(5, 5))
        A = G.T @ G + np.eye(5)
        B = rng.normal(size=(5, 2))
        assert np.max(np.abs(A @ spd_solve(A, B) - B)) < 1e-12

    def test_not_spd(self):
        with pytest.raises(NotSPDError):
            spd_solve(-np.eye(2), np.eye(2))
