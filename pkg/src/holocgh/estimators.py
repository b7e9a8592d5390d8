"""Scikit-learn style estimators over the functional core."""

import numpy as np
from sklearn.base import BaseEstimator

from .jod import JodResult, bootstrap_ci, check_votes, scale_jod, screen_outliers
from .losses import SupervisionLoss
from .optimizer import OptimizerConfig, optimize

__all__ = ["HologramOptimizer", "JodScaler"]


class HologramOptimizer(BaseEstimator):
    """Estimator wrapper around :func:`optimize`.

    ``fit(spec)`` learns binary frames for a supervision spec; ``predict``
    returns them and ``score(spec)`` is the negative loss of those frames.
    """

    def __init__(self, cfg=None, learning_rate=None, iterations=2000, surrogate="gumbel",
                 tau_start=1.0, tau_decay=0.999, tau_min=0.1, sharpness=1.0, seed=0,
                 precision="float32"):
        self.cfg = cfg
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.surrogate = surrogate
        self.tau_start = tau_start
        self.tau_decay = tau_decay
        self.tau_min = tau_min
        self.sharpness = sharpness
        self.seed = seed
        self.precision = precision

    def _opt_config(self):
        params = self.get_params()
        params.pop("cfg")
        return OptimizerConfig(**params)

    def fit(self, X, y=None):
        if self.cfg is None:
            raise ValueError("cfg must be set before fit")
        result = optimize(self.cfg, X, self._opt_config())
        self.result_ = result
        self.frames_ = result.frames
        self.loss_trace_ = result.loss_trace
        self.scale_ = result.final_scale
        return self

    def predict(self, X=None):
        if not hasattr(self, "frames_"):
            raise AttributeError("HologramOptimizer is not fitted yet")
        return self.frames_

    def score(self, X, y=None):
        frames = self.predict()
        loss, _, _ = SupervisionLoss(X, self.cfg).evaluate(frames.astype(float), grad=False)
        return -loss


class JodScaler(BaseEstimator):
    """Estimator interface: ``fit(votes)`` then read ``scores_`` and ``covariance_``.

    Per-observer vote stacks also yield bootstrap intervals and outlier flags.
    """

    def __init__(self, pseudo_votes=0.5, n_bootstrap=500, seed=0, alpha=0.05,
                 exclude_outliers=False):
        self.pseudo_votes = pseudo_votes
        self.n_bootstrap = n_bootstrap
        self.seed = seed
        self.alpha = alpha
        self.exclude_outliers = exclude_outliers

    def fit(self, X, y=None):
        v = check_votes(X)
        self.outliers_ = []
        if v.ndim == 3:
            self.outliers_ = screen_outliers(v, self.pseudo_votes)
            if self.exclude_outliers and self.outliers_:
                v = np.delete(v, self.outliers_, axis=0)
        res = scale_jod(v, self.pseudo_votes)
        if v.ndim == 3 and v.shape[0] >= 2 and self.n_bootstrap:
            lo, hi = bootstrap_ci(v, self.n_bootstrap, self.seed, self.alpha, self.pseudo_votes)
            res = JodResult(res.scores, res.covariance, lo, hi, res.log_likelihood, res.iterations)
        self.result_ = res
        self.scores_ = res.scores
        self.covariance_ = res.covariance
        return self

    def transform(self, X=None):
        return self.scores_

