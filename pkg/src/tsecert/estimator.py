"""scikit-learn style wrapper around the density estimator.

The solvers and certification machinery are plain functions; only the
trainable model gets the estimator treatment, since fit/predict is exactly
its shape. X rows are (x, t) coordinates, y is density.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .network import InputNormalization, forward
from .training import TrainConfig, train

__all__ = ["DensityMlp"]


class DensityMlp(RegressorMixin, BaseEstimator):
    """Dense tanh network fit with Adam followed by L-BFGS.

    Parameters mirror TrainConfig; the defaults are the full
    protocol (10 hidden layers of 40 units, 15,000 + 50,000 iterations).
    After fit, the raw network parameters are available as ``params_``
    and the phase statistics as ``report_``.

    Example:
        >>> est = DensityMlp(hidden_layers=2, hidden_width=8,
        ...                  adam_iterations=200, lbfgs_iterations=100)
        >>> _ = est.fit(X, y)   # X of shape (n, 2): columns x, t
        >>> rho_hat = est.predict(X)
    """

    def __init__(self, hidden_layers=10, hidden_width=40,
                 adam_iterations=15000, adam_learning_rate=1e-3,
                 lbfgs_iterations=50000, lbfgs_memory=10,
                 lbfgs_tolerance=1e-9, seed=0, normalization=None):
        self.hidden_layers = hidden_layers
        self.hidden_width = hidden_width
        self.adam_iterations = adam_iterations
        self.adam_learning_rate = adam_learning_rate
        self.lbfgs_iterations = lbfgs_iterations
        self.lbfgs_memory = lbfgs_memory
        self.lbfgs_tolerance = lbfgs_tolerance
        self.seed = seed
        self.normalization = normalization

    def _config(self) -> TrainConfig:
        norm = self.normalization
        if norm is not None and not isinstance(norm, InputNormalization):
            norm = InputNormalization(*norm)
        return TrainConfig(
            adam_iterations=self.adam_iterations,
            adam_learning_rate=self.adam_learning_rate,
            lbfgs_iterations=self.lbfgs_iterations,
            lbfgs_memory=self.lbfgs_memory,
            lbfgs_tolerance=self.lbfgs_tolerance,
            hidden_layers=self.hidden_layers,
            hidden_width=self.hidden_width,
            seed=self.seed,
            input_normalization=norm)

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError(f"X must have exactly 2 columns (x, t), got {X.shape[1]}")
        cfg = self._config()
        samples = SimpleNamespace(points=np.column_stack([X, y]).astype(float))
        self.params_, self.report_ = train(samples, cfg)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError(f"X must have exactly 2 columns (x, t), got {X.shape[1]}")
        return forward(self.params_, X[:, 0], X[:, 1])
