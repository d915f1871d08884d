"""scikit-learn style wrappers around the TREX and concomitant Lasso solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .solvers import DRConfig
from .trex import TrexProblem, solve_concomitant_lasso, solve_trex_full

__all__ = ["ConcomitantLassoRegressor", "TrexRegressor"]


class TrexRegressor(RegressorMixin, BaseEstimator):
    """Generalized TREX: sparse linear regression with no noise-level parameter.

    ``alpha`` scales the data term and ``q > 1`` is the exponent; ``q = 2``
    gives the original TREX. No intercept is fitted, so center the data
    first if needed.

    Attributes after ``fit``: ``coef_``, ``objective_``, ``winner_`` (column
    and sign of the winning subproblem), ``converged_``, ``n_iter_`` (winner
    iterations) and ``result_`` (the full :class:`~prospect.trex.TrexResult`).
    """

    def __init__(self, alpha=0.5, q=2.0, gamma=70.0, relaxation=1.95, tol=1e-10, max_iter=100_000, n_jobs=1):
        self.alpha = alpha
        self.q = q
        self.gamma = gamma
        self.relaxation = relaxation
        self.tol = tol
        self.max_iter = max_iter
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        problem = TrexProblem(X, y, self.alpha, self.q)
        config = DRConfig(gamma=self.gamma, relaxation=self.relaxation, tol=self.tol, max_iter=self.max_iter)
        res = solve_trex_full(problem, config, n_jobs=self.n_jobs)
        self.result_ = res
        self.coef_ = res.b_hat
        self.objective_ = res.objective
        self.winner_ = res.winner
        self.converged_ = res.converged
        self.n_iter_ = next(r.iterations for r in res.per_subproblem if r.id == res.winner)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_


class ConcomitantLassoRegressor(RegressorMixin, BaseEstimator):
    """Lasso with jointly estimated noise level (scaled Lasso).

    Minimizes ``||X b - y||^2 / (2 n sigma) + sigma / 2 + lam ||b||_1`` over
    ``b`` and ``sigma >= 0``. Fitted attributes: ``coef_``, ``sigma_``,
    ``objective_``, ``converged_``, ``n_iter_``.
    """

    def __init__(self, lam=0.1, gamma=1.0, relaxation=1.5, tol=1e-10, max_iter=100_000):
        self.lam = lam
        self.gamma = gamma
        self.relaxation = relaxation
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        config = DRConfig(gamma=self.gamma, relaxation=self.relaxation, tol=self.tol, max_iter=self.max_iter)
        res = solve_concomitant_lasso(X, y, self.lam, config)
        self.coef_ = res.b
        self.sigma_ = res.sigma
        self.objective_ = res.objective
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_
