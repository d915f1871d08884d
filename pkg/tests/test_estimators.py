import warnings

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.utils.estimator_checks import parametrize_with_checks

from prospect import ConcomitantLassoRegressor, TrexRegressor
from prospect.trex import TrexProblem, eval_trex_objective


def data(seed=0, n=60, p=10):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    coef = np.zeros(p)
    coef[:3] = (2.0, -1.5, 1.0)
    return X, X @ coef + 0.1 * rng.normal(size=n), coef


@parametrize_with_checks([TrexRegressor(gamma=1.0, tol=1e-6, max_iter=2000),
                          ConcomitantLassoRegressor(tol=1e-6, max_iter=2000)])
def test_sklearn_compatible(estimator, check):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        check(estimator)


class TestTrexRegressor:
    def test_recovers_support(self):
        X, y, coef = data()
        est = TrexRegressor(gamma=1.0).fit(X, y)
        np.testing.assert_array_equal(np.abs(est.coef_) > 0.05, coef != 0)
        assert est.converged_
        assert est.objective_ == pytest.approx(eval_trex_objective(TrexProblem(X, y, 0.5, 2.0), est.coef_))
        assert est.score(X, y) > 0.95

    def test_predict_is_linear(self):
        X, y, _ = data(1)
        est = TrexRegressor(q=1.5, gamma=1.0).fit(X, y)
        np.testing.assert_allclose(est.predict(X[:4]), X[:4] @ est.coef_)
        assert est.n_features_in_ == X.shape[1]

    def test_params_round_trip(self):
        est = TrexRegressor(alpha=0.8, q=1.25)
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_q_one_rejected(self):
        X, y, _ = data()
        with pytest.raises(ValueError, match="square-root Lasso"):
            TrexRegressor(q=1.0).fit(X, y)

    def test_in_pipeline(self):
        X, y, _ = data(2)
        pipe = make_pipeline(StandardScaler(), TrexRegressor(gamma=1.0)).fit(X, y - y.mean())
        assert pipe.predict(X).shape == (X.shape[0],)


class TestConcomitantLassoRegressor:
    def test_noise_level(self):
        X, y, _ = data(3, n=200)
        est = ConcomitantLassoRegressor(lam=np.sqrt(2 * np.log(10) / 200)).fit(X, y)
        resid = np.linalg.norm(X @ est.coef_ - y) / np.sqrt(200)
        assert est.sigma_ == pytest.approx(resid, abs=1e-4)
        assert est.converged_

    def test_large_penalty(self):
        X, y, _ = data(4)
        est = ConcomitantLassoRegressor(lam=1e4).fit(X, y)
        np.testing.assert_array_equal(est.coef_, 0.0)
