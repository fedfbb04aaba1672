"""Variance-based dimensionality reduction fitted fresh per use.

Three methods behind one transformer:

* ``pca``: mean-center, thin SVD of the centered n x d matrix, keep the top
  right-singular vectors. The thin SVD avoids ever forming the d x d
  covariance (d can be ~1e5).
* ``truncated-svd``: identical but without centering.
* ``none``: identity pass-through.

Components follow a fixed sign convention (largest-magnitude entry positive)
so repeated fits are bit-identical; explained variance uses the n-1 divisor.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .dataset import DataError, check_feature_matrix

METHODS = ("pca", "truncated-svd", "none")


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its largest-magnitude entry is positive."""
    if components.size == 0:
        return components
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


class DimensionReducer(BaseEstimator, TransformerMixin):
    """Project features onto their top variance directions.

    Parameters
    ----------
    method : {"pca", "truncated-svd", "none"}
    n_components : int
        Requested output dimensionality; the effective value is
        ``min(n_components, n_samples, n_dims)`` of the fitting data
        (ignored for ``none``, which keeps all dims).
    """

    def __init__(self, method: str = "pca", n_components: int = 20):
        self.method = method
        self.n_components = n_components

    def fit(self, X, y=None):
        if self.method not in METHODS:
            raise DataError(f"unknown reduction method {self.method!r}")
        if self.n_components < 1:
            raise DataError("n_components must be >= 1")
        X = check_feature_matrix(X)
        n, d = X.shape
        if n == 0:
            raise DataError("cannot fit a projection on 0 samples")

        if self.method == "none":
            self.mean_ = None
            self.components_ = None
            self.explained_variance_ = np.zeros(0)
            self.k_ = d
            self.n_features_in_ = d
            return self

        k = min(self.n_components, n, d)
        if self.method == "pca":
            mean = X.mean(axis=0)
            centered = X - mean
        else:
            mean = None
            centered = X
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        denominator = max(n - 1, 1)
        variance = (svals**2) / denominator
        if n == 1:
            variance = np.zeros_like(variance)

        self.mean_ = mean
        self.components_ = _fix_signs(vt[:k])
        self.explained_variance_ = variance[:k]
        self.k_ = k
        self.n_features_in_ = d
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(
                f"expected {self.n_features_in_} dims, got {X.shape[1]}"
            )
        if self.method == "none":
            return X.copy()
        if self.mean_ is not None:
            X = X - self.mean_
        return X @ self.components_.T

    def _check_fitted(self):
        if not hasattr(self, "k_"):
            raise NotFittedError("DimensionReducer is not fitted")

    def to_dict(self) -> dict:
        """JSON-ready summary of the fitted model."""
        self._check_fitted()
        return {
            "method": self.method,
            "k": int(self.k_),
            "mean": None if self.mean_ is None else self.mean_.tolist(),
            "components": None
            if self.components_ is None
            else self.components_.tolist(),
            "explained_variance": self.explained_variance_.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DimensionReducer":
        model = cls(method=payload["method"])
        model.k_ = payload["k"]
        model.mean_ = None if payload["mean"] is None else np.asarray(payload["mean"])
        model.components_ = (
            None
            if payload["components"] is None
            else np.asarray(payload["components"])
        )
        model.explained_variance_ = np.asarray(payload["explained_variance"])
        if model.components_ is not None:
            model.n_features_in_ = model.components_.shape[1]
            model.n_components = model.k_
        else:
            model.n_features_in_ = model.k_
        return model


def fit_projection(data, method: str, n_components: int) -> DimensionReducer:
    """Fit a reducer on data; functional alias for the estimator API."""
    return DimensionReducer(method=method, n_components=n_components).fit(data)
