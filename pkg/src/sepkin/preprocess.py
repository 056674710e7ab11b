"""Row filtering, temporal smoothing and row normalisation of a measurement
matrix (frequencies x times)."""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .linalg import as_nonneg_matrix

__all__ = [
    "PreprocessReport",
    "estimate_noise_level",
    "filter_rows",
    "smooth_time",
    "normalize_rows",
    "Preprocessor",
]


@dataclass
class PreprocessReport:
    noise_level_estimate: float
    removed_row_indices: list
    kept_row_map: list
    threshold: float
    window: int = 1
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "noise_level_estimate": self.noise_level_estimate,
            "threshold": self.threshold,
            "removed_row_indices": list(map(int, self.removed_row_indices)),
            "kept_row_map": list(map(int, self.kept_row_map)),
            "window": int(self.window),
            **self.extras,
        }


def estimate_noise_level(M):
    """Sample standard deviation of the row with the smallest mean."""
    M = as_nonneg_matrix(M)
    if M.shape[1] < 2:
        raise ValueError("need at least two time points to estimate noise")
    i = int(np.argmin(M.mean(axis=1)))
    return float(np.std(M[i], ddof=1))


def filter_rows(M, threshold_multiplier=3.0):
    """Drop rows whose maximum is at most ``threshold_multiplier`` times the noise level.

    Returns the filtered matrix and a :class:`PreprocessReport` whose
    ``kept_row_map[k]`` is the original index of filtered row ``k``.
    """
    M = as_nonneg_matrix(M)
    if not threshold_multiplier > 0:
        raise ValueError("threshold_multiplier must be positive")
    sigma = estimate_noise_level(M)
    thresh = threshold_multiplier * sigma
    keep = M.max(axis=1) > thresh
    if not keep.any():
        raise ValueError("no significant frequencies: every row is at or below the noise threshold")
    report = PreprocessReport(
        noise_level_estimate=sigma,
        removed_row_indices=np.flatnonzero(~keep).tolist(),
        kept_row_map=np.flatnonzero(keep).tolist(),
        threshold=thresh,
    )
    return M[keep], report


def smooth_time(M, window=5):
    """Running mean along each row; windows shrink at both ends."""
    M = as_nonneg_matrix(M)
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    n = M.shape[1]
    if window > n:
        raise ValueError(f"window {window} exceeds the number of time points {n}")
    if window == 1:
        return M
    half = (window - 1) // 2
    csum = np.concatenate([np.zeros((M.shape[0], 1)), np.cumsum(M, axis=1)], axis=1)
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half, n - 1) + 1
    out = (csum[:, hi] - csum[:, lo]) / (hi - lo)
    # cumulative-sum differences can dip a hair below zero
    return np.maximum(out, 0.0)


def normalize_rows(M):
    """Scale rows to unit sum. Returns ``(M / d[:, None], d)``."""
    M = as_nonneg_matrix(M)
    d = M.sum(axis=1)
    if np.any(d <= 0):
        raise ValueError(f"row {int(np.argmin(d))} sums to zero; filter rows first")
    return M / d[:, None], d


class Preprocessor(TransformerMixin, BaseEstimator):
    """Filter insignificant frequencies then smooth along time.

    ``fit`` learns which rows to keep from the data's noise level;
    ``transform`` applies the same row selection and the running mean.

    Parameters
    ----------
    threshold_multiplier : float, default=3.0
        Rows with maximum at or below this multiple of the noise estimate are dropped.
    window : int, default=5
        Odd running-mean window along the time axis. 1 disables smoothing.
    """

    def __init__(self, threshold_multiplier=3.0, window=5):
        self.threshold_multiplier = threshold_multiplier
        self.window = window

    def fit(self, X, y=None):
        X = as_nonneg_matrix(X, "X")
        _, report = filter_rows(X, self.threshold_multiplier)
        report.window = int(self.window)
        self.report_ = report
        self.kept_rows_ = np.asarray(report.kept_row_map, dtype=int)
        self.noise_level_ = report.noise_level_estimate
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "kept_rows_")
        X = as_nonneg_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} time points, fitted on {self.n_features_in_}")
        return smooth_time(X[self.kept_rows_], self.window)
