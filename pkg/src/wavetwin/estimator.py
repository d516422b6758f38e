"""scikit-learn style front end to the stochastic EnKF.

``fit`` stores an initial ensemble, ``forecast`` pushes every member through a
model, ``partial_fit`` assimilates one batch of perturbed observations and
``predict`` returns the ensemble mean. Hyper-parameters follow the usual
``get_params``/``set_params`` protocol.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .enkf import ObservationOperator, anomalies, kalman_gain
from .exceptions import DegenerateEnsembleError, InvalidInputError


class EnsembleKalmanFilter(BaseEstimator):
    """Perturbed-observation EnKF over flat state vectors.

    Parameters
    ----------
    inflation : float
        Multiplicative anomaly inflation applied before each analysis.
    r_mode : {"known", "empirical"}
        Use the supplied ``R`` or the sample covariance of the observation members.
    """

    def __init__(self, inflation=1.0, r_mode="known"):
        self.inflation = inflation
        self.r_mode = r_mode

    def fit(self, X, y=None):
        """Store the ``(N, dim)`` initial ensemble ``X``."""
        X = check_array(X, dtype=float, ensure_min_samples=2)
        self.ensemble_ = X.copy()
        self.n_members_, self.n_features_in_ = X.shape
        self.n_updates_ = 0
        return self

    def forecast(self, model):
        """Replace every member by ``model(members)``; ``model`` maps ``(N, dim)`` to ``(N, dim)``."""
        check_is_fitted(self)
        out = np.asarray(model(self.ensemble_.copy()), dtype=float)
        if out.shape != self.ensemble_.shape:
            raise InvalidInputError(f"model returned shape {out.shape}, expected {self.ensemble_.shape}")
        if not np.all(np.isfinite(out)):
            raise DegenerateEnsembleError("forecast produced non-finite members")
        self.ensemble_ = out
        return self

    def partial_fit(self, Y, indices, R=None):
        """Assimilate perturbed observations ``Y`` ``(N, d)`` of state entries ``indices``."""
        check_is_fitted(self)
        if self.inflation < 1:
            raise InvalidInputError("inflation must be >= 1")
        Y = check_array(Y, dtype=float)
        op = indices if isinstance(indices, ObservationOperator) else ObservationOperator(indices)
        if Y.shape != (self.n_members_, op.dim):
            raise InvalidInputError(f"Y must be ({self.n_members_}, {op.dim}), got {Y.shape}")
        if max(op.indices) >= self.n_features_in_:
            raise InvalidInputError("observation index outside the state vector")
        if self.r_mode == "empirical":
            R = anomalies(Y) @ anomalies(Y).T
        elif self.r_mode == "known":
            if R is None:
                raise InvalidInputError("r_mode='known' needs R")
            R = np.atleast_2d(np.asarray(R, dtype=float))
            if R.shape == (1, op.dim):
                R = np.diag(R[0])
        else:
            raise InvalidInputError(f"unknown r_mode {self.r_mode!r}")
        X = self.ensemble_
        mean = X.mean(axis=0)
        X = mean + self.inflation * (X - mean)
        K = kalman_gain(anomalies(X), op, R)
        self.ensemble_ = X + (Y - op(X)) @ K.T
        self.n_updates_ += 1
        return self

    def predict(self, X=None):
        """Ensemble mean state (``X`` is ignored and accepted for API symmetry)."""
        check_is_fitted(self)
        return self.ensemble_.mean(axis=0)

    def spread(self):
        """Per-entry ensemble standard deviation."""
        check_is_fitted(self)
        return self.ensemble_.std(axis=0, ddof=1)
