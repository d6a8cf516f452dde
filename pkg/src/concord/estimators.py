"""Scikit-learn style estimators wrapping the functional core, so the
fitting paths and the concordance diagnostic compose with pipelines,
cloning and parameter search.

All regressors operate on the design matrix as given: no intercept is
added, matching the convention that encoded model matrices carry their own
intercept column when they want one.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .concordance import concordance_subset, concordance_trace
from .linalg import ScatterSummary, scatter_from_matrix
from .regression import (
    fit_dnr,
    fit_irls_logistic,
    fit_pooled_normal,
    fit_reference,
    make_partition,
)
from .validation import as_matrix, as_vector

__all__ = [
    "DivideAndRecombineRegressor",
    "IRLSLogisticRegression",
    "PooledGramRegressor",
    "ReferenceLeastSquares",
    "ScatterConcordance",
]


class ReferenceLeastSquares(RegressorMixin, BaseEstimator):
    """Plain least squares via Householder QR: the reference fit that the
    block-averaged estimator approximates."""

    def fit(self, X, y):
        X = as_matrix(X, name="X")
        y = as_vector(y, length=X.shape[0])
        result = fit_reference(X, y)
        self.coef_ = result.coefficients
        self.n_features_in_ = X.shape[1]
        self.fit_result_ = result
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return as_matrix(X, name="X") @ self.coef_


class DivideAndRecombineRegressor(RegressorMixin, BaseEstimator):
    """Least squares by averaging per-block QR fits over a row partition.

    Parameters
    ----------
    n_blocks : int
        Number of partition blocks (sizes differ by at most one).
    partition : {"random", "contiguous"}
        Random partitions are the intended use; contiguous slicing is kept
        for demonstrating what ordering artifacts do to the averaged fit.
    random_state : int or None
        Seed for the random partition.
    weight_by_rows : bool
        Use a row-count-weighted average instead of the plain mean.
    """

    def __init__(self, n_blocks=10, partition="random", random_state=None,
                 weight_by_rows=False):
        self.n_blocks = n_blocks
        self.partition = partition
        self.random_state = random_state
        self.weight_by_rows = weight_by_rows

    def fit(self, X, y):
        X = as_matrix(X, name="X")
        y = as_vector(y, length=X.shape[0])
        plan = make_partition(
            X.shape[0], self.n_blocks, kind=self.partition, seed=self.random_state
        )
        result = fit_dnr(plan.blocks(X, y), weight_by_rows=self.weight_by_rows)
        self.coef_ = result.coefficients
        self.block_coefs_ = result.per_block
        self.partition_plan_ = plan
        self.n_features_in_ = X.shape[1]
        self.fit_result_ = result
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return as_matrix(X, name="X") @ self.coef_


class PooledGramRegressor(RegressorMixin, BaseEstimator):
    """Least squares from merged scatter summaries (normal equations).

    Supports incremental fitting: ``partial_fit`` folds one block into the
    running summary and re-solves, so arbitrarily large data reduces to a
    d x d solve. Exact up to floating point regardless of how the rows
    were blocked, but numerically fragile for ill-conditioned designs.
    """

    def fit(self, X, y):
        self.summary_ = None
        return self.partial_fit(X, y)

    def partial_fit(self, X, y):
        X = as_matrix(X, name="X")
        y = as_vector(y, length=X.shape[0])
        summary = getattr(self, "summary_", None)
        if summary is None:
            summary = ScatterSummary(X.shape[1], track_response=True)
        self.summary_ = summary.accumulate(X, y)
        result = fit_pooled_normal([self.summary_])
        self.coef_ = result.coefficients
        self.n_features_in_ = X.shape[1]
        self.fit_result_ = result
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return as_matrix(X, name="X") @ self.coef_


class IRLSLogisticRegression(BaseEstimator):
    """Logistic regression fitted by iteratively reweighted least squares
    with step-halving; no regularization, no intercept handling."""

    def __init__(self, max_iter=25, tol=1e-8):
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X = as_matrix(X, name="X")
        y = as_vector(y, length=X.shape[0])
        result = fit_irls_logistic(X, y, max_iter=self.max_iter, tol=self.tol)
        self.coef_ = result.coefficients
        self.n_iter_ = result.diagnostics["iterations"]
        self.converged_ = result.diagnostics["converged"]
        self.classes_ = np.array([0.0, 1.0])
        self.n_features_in_ = X.shape[1]
        self.fit_result_ = result
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return as_matrix(X, name="X") @ self.coef_

    def predict_proba(self, X):
        eta = self.decision_function(X)
        p = np.empty_like(eta)
        pos = eta >= 0
        p[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        e = np.exp(eta[~pos])
        p[~pos] = e / (1.0 + e)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) >= 0.0).astype(np.float64)


class ScatterConcordance(BaseEstimator):
    """Concordance diagnostic against a fitted reference data set.

    ``fit`` (or repeated ``partial_fit``) accumulates the reference scatter
    summary; ``score`` then measures how well a subset of rows captures the
    reference's variance-covariance structure (1 means a perfect match).
    In ``mode="nonoverlapping"`` the scored rows must be part of the fitted
    reference, since the comparison target is their complement, formed by
    summary subtraction.
    """

    def __init__(self, mode="overlapping", center=False):
        self.mode = mode
        self.center = center

    def fit(self, X, y=None):
        self.reference_scatter_ = None
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        X = as_matrix(X, name="X")
        summary = getattr(self, "reference_scatter_", None)
        if summary is None:
            summary = ScatterSummary(X.shape[1])
        self.reference_scatter_ = summary.accumulate(X)
        self.n_features_in_ = X.shape[1]
        return self

    def evaluate(self, X):
        """Full concordance result for the rows in ``X``."""
        check_is_fitted(self, "reference_scatter_")
        subset = scatter_from_matrix(as_matrix(X, name="X"))
        return concordance_subset(
            self.reference_scatter_, subset, self.mode, center=self.center
        )

    def score(self, X, y=None):
        return self.evaluate(X).value

    def compare(self, other_scatter):
        """Concordance of an arbitrary scatter summary against the fitted
        reference (no subset relationship assumed)."""
        check_is_fitted(self, "reference_scatter_")
        return concordance_trace(
            other_scatter, self.reference_scatter_, center=self.center
        )
