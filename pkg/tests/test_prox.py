import numpy as np
import pytest

from prospect.errors import DomainError
from prospect.oracles import make_kind, project_onto_gamma_C
from prospect.prox import (ConjugateGate, ProxStep, ScaledPair, as_pair, as_step, moreau_residual,
                           prox_norm_plus_support, soft_threshold, threshold_gate)


def half_square_conj(u):
    return 0.5 * np.sum(np.asarray(u) ** 2, axis=-1)


class TestSoftThreshold:
    @pytest.mark.parametrize("x, expected", [([3.0], [2.0]), ([0.5], [0.0]), ([-2.0, 0.0, 4.0], [-1.0, 0.0, 3.0])])
    def test_examples(self, x, expected):
        np.testing.assert_array_equal(soft_threshold(np.array(x), 1.0), expected)


class TestNormPlusSupport:
    # D is the nonpositive orthant, so C = gamma D and x - P_C x is the positive part
    @staticmethod
    def proj(x):
        return np.minimum(x, 0.0)

    def test_outside(self):
        np.testing.assert_allclose(prox_norm_plus_support(np.array([3.0, 4.0]), 1.0, self.proj), [2.4, 3.2])

    def test_vanishes(self):
        np.testing.assert_array_equal(prox_norm_plus_support(np.array([-1.0, -2.0]), 1.0, self.proj), [0.0, 0.0])

    def test_brute_force(self):
        x = np.array([3.0, 4.0])
        g = np.linspace(0, 4, 801)
        P, Q = np.meshgrid(g, g, indexing="ij")
        obj = np.hypot(P, Q) + 0.5 * ((P - x[0]) ** 2 + (Q - x[1]) ** 2)
        i = np.unravel_index(np.argmin(obj), obj.shape)
        np.testing.assert_allclose([P[i], Q[i]], [2.4, 3.2], atol=5e-3)

    def test_trivial_D_rejected(self):
        with pytest.raises(ValueError):
            prox_norm_plus_support(np.ones(2), 1.0, self.proj, trivial_D=True)


class TestThresholdGate:
    gate = ConjugateGate(half_square_conj)

    def test_examples(self):
        assert threshold_gate(-1.0, [0.0], 1.0, self.gate) is True
        assert threshold_gate(1.0, [0.0], 1.0, self.gate) is False
        assert threshold_gate(-0.125, [0.5], 1.0, self.gate) is True

    def test_batched(self):
        out = threshold_gate(np.array([-1.0, 1.0]), np.zeros((2, 1)), ProxStep(1.0), self.gate)
        np.testing.assert_array_equal(out, [True, False])

    def test_nan_conjugate(self):
        with pytest.raises(DomainError):
            threshold_gate(0.0, [1.0], 1.0, ConjugateGate(lambda u: np.full(np.shape(u)[:-1], np.nan)))

    def test_infinite_conjugate_is_outside(self):
        assert threshold_gate(-5.0, [1.0], 1.0, ConjugateGate(lambda u: np.full(np.shape(u)[:-1], np.inf))) is False


class TestMoreauResidual:
    def test_exact_huber(self):
        kind = make_kind("huber", dim=1)
        point = ScaledPair(np.array([0.3, -0.8, 1.0]), np.array([[1.9], [0.1], [-3.0]]))
        out = kind.prox(0.9, point.eta, point.y)

        def proj(pt):
            return project_onto_gamma_C(kind.conj, 0.9, pt.eta, pt.y[:, 0], u_max=kind.conj_radius)

        def proj_pair(pt):
            pr = proj(pt)
            return ScaledPair(pr.eta, np.asarray(pr.y)[:, None])

        assert np.max(moreau_residual(out, proj_pair, point)) <= 1e-6

    def test_perturbation(self):
        point = ScaledPair(np.array(1.0), np.array([2.0, 0.0]))
        zero = ScaledPair(np.array(0.0), np.zeros(2))

        def proj(pt):
            return zero

        delta = ScaledPair(point.eta + 0.3, point.y + np.array([0.0, 0.4]))
        assert float(moreau_residual(delta, proj, point)) == pytest.approx(0.5)


def test_step_validation():
    assert as_step(2.0) == 2.0
    assert as_step(ProxStep(0.5)) == 0.5
    for bad in (0.0, -1.0, np.inf, np.nan):
        with pytest.raises(ValueError):
            ProxStep(bad)


def test_pair_validation():
    pair = as_pair(1.0, [1.0, 2.0])
    assert pair.y.shape == (2,)
    assert as_pair(np.zeros(3), np.zeros(3)).y.shape == (3, 1)
    with pytest.raises(ValueError):
        as_pair(np.zeros(2), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        as_pair(np.nan, [0.0])
