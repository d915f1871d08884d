import numpy as np
import pytest

from prospect.prox import soft_threshold
from prospect.solvers import (DRConfig, DRState, Trace, build_graph_projector, douglas_rachford, dr_composite,
                              project_graph)

CFG = DRConfig(gamma=1.0, relaxation=1.0, tol=1e-12, max_iter=10_000)


def prox_sq(a):
    return lambda v, g: (v + g * a) / (1.0 + g)


class TestDouglasRachford:
    def test_two_quadratics(self):
        res = douglas_rachford(prox_sq(np.array([0.0])), prox_sq(np.array([2.0])), CFG, np.zeros(1))
        assert res.converged
        assert float(res.solution[0]) == pytest.approx(1.0, abs=1e-10)

    def test_abs_plus_quadratic(self):
        res = douglas_rachford(lambda v, g: soft_threshold(v, g), prox_sq(np.array([3.0])), CFG, np.zeros(1))
        assert float(res.solution[0]) == pytest.approx(2.0, abs=1e-10)

    def test_indicator_of_origin(self):
        zero = lambda v, g: np.zeros_like(v)  # noqa: E731
        res = douglas_rachford(zero, zero, CFG, np.array([5.0, -3.0]))
        np.testing.assert_array_equal(res.solution, [0.0, 0.0])

    def test_budget_exhausted_is_flagged(self):
        cfg = DRConfig(gamma=0.1, relaxation=1.0, tol=1e-300, max_iter=5)
        res = douglas_rachford(lambda v, g: soft_threshold(v, g), prox_sq(np.array([3.0])), cfg, np.zeros(1))
        assert not res.converged
        assert int(res.iterations) == 5

    def test_trace(self):
        res = douglas_rachford(prox_sq(np.array([0.0])), prox_sq(np.array([2.0])), CFG, np.zeros(1),
                               objective=lambda x: float(x @ x))
        assert len(res.trace) == int(res.iterations)
        assert res.trace.column(3)[-1] == pytest.approx(1.0, abs=1e-9)


class TestGraphProjector:
    def test_on_graph_is_fixed(self, rng):
        M = rng.normal(size=(4, 3))
        proj = build_graph_projector(M)
        b = rng.normal(size=3)
        v, c = project_graph(proj, b, M @ b)
        np.testing.assert_allclose(v, b, atol=1e-13)
        np.testing.assert_allclose(c, M @ b, atol=1e-13)

    def test_is_orthogonal_projection(self, rng):
        M = rng.normal(size=(3, 5))
        proj = build_graph_projector(M)
        b, c = rng.normal(size=5), rng.normal(size=3)
        v, w = project_graph(proj, b, c)
        # residual orthogonal to the graph {(u, M u)}
        u = rng.normal(size=5)
        assert abs((b - v) @ u + (c - w) @ (M @ u)) < 1e-12

    def test_shape_check(self):
        proj = build_graph_projector(np.eye(2))
        with pytest.raises(ValueError):
            project_graph(proj, np.zeros(3), np.zeros(2))
        with pytest.raises(ValueError):
            build_graph_projector(np.array([[np.inf]]))


class TestComposite:
    def test_least_squares(self, rng):
        M = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        a = np.array([1.0, -2.0, 0.5])
        proj = build_graph_projector(M)
        res = dr_composite(lambda v, g, r: v, lambda v, g, r: (v + g * (M @ a)) / (1 + g), proj, CFG)
        np.testing.assert_allclose(res.solution, a, atol=1e-9)

    def test_tiny_lasso(self):
        z = np.array([3.0, 0.5])
        proj = build_graph_projector(np.eye(2))
        res = dr_composite(lambda v, g, r: soft_threshold(v, g), lambda v, g, r: (v + g * z) / (1 + g), proj, CFG)
        np.testing.assert_allclose(res.solution, [2.0, 0.0], atol=1e-9)
        assert res.converged

    def test_pause_and_resume(self):
        z = np.array([3.0, 0.5])
        proj = build_graph_projector(np.eye(2))
        args = (lambda v, g, r: soft_threshold(v, g), lambda v, g, r: (v + g * z) / (1 + g), proj, CFG)
        full = dr_composite(*args)
        part = dr_composite(*args, max_iter=3)
        assert not part.converged
        rest = dr_composite(*args, init=part.state)
        np.testing.assert_array_equal(rest.solution, full.solution)
        assert int(rest.iterations) == int(full.iterations)


class TestConfig:
    def test_relaxation_forms(self):
        assert DRConfig(relaxation=1.5).mu(7) == 1.5
        seq = DRConfig(relaxation=[1.0, 1.5])
        assert (seq.mu(0), seq.mu(1), seq.mu(9)) == (1.0, 1.5, 1.5)
        assert DRConfig(relaxation=lambda k: 1.0 + 1.0 / (k + 2)).mu(0) == 1.5

    @pytest.mark.parametrize("kwargs", [dict(gamma=0.0), dict(tol=0.0), dict(max_iter=0), dict(relaxation=2.0),
                                        dict(relaxation=[1.0, 0.0])])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DRConfig(**kwargs)

    def test_callable_out_of_range(self):
        with pytest.raises(ValueError):
            DRConfig(relaxation=lambda k: 3.0).mu(0)

    def test_defaults(self):
        cfg = DRConfig()
        assert (cfg.gamma, cfg.mu(0), cfg.tol, cfg.max_iter) == (70.0, 1.95, 1e-10, 100_000)


def test_trace_thinning():
    tr = Trace(cap=4)
    for k in range(1, 20):
        tr.add(k, 0.0, 0.0)
    assert len(tr) < 4
    assert tr.stride > 1


def test_state_rows():
    st = DRState(np.arange(6.0).reshape(3, 2), np.zeros((3, 1)))
    sub = st.rows([2])
    assert sub.x.tolist() == [[4.0, 5.0]]
    sub.x[0, 0] = -1
    assert st.x[2, 0] == 4.0
