"""Separable NMF of a measurement matrix ``M ~ W H``.

Rows of ``M`` are frequencies, columns are times. Under near-separability a
few rows of ``M`` are (scaled) rows of the kinetics ``H``; the successive
non-negative projection algorithm (SNPA) finds them greedily. The selected
rows are rescaled so that concentrations sum to one, and the spectra ``W``
follow from row-wise NNLS.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .linalg import as_nonneg_matrix, nnls_solve, nnls_solve_multi, singular_values
from .preprocess import normalize_rows

__all__ = [
    "SelectedIndices",
    "UnmixResult",
    "estimate_species_count",
    "snpa_select",
    "rescale_kinetics",
    "recover_spectra",
    "unmix",
    "align_species",
    "SeparableNMF",
]

MAX_SPECIES = 10
# relative gap under which two residual norms count as a tie
TIE_RTOL = 1e-12
# weight of the sum-to-one row relative to the selected rows' norms
HULL_LAMBDA = 10.0
HULL_MAX_UPDATES = 60


@dataclass
class SelectedIndices:
    indices: list
    residual_norms: list
    original_indices: list = None

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("selected indices must be distinct")
        if self.original_indices is None:
            self.original_indices = list(self.indices)


@dataclass
class UnmixResult:
    H: np.ndarray
    W: np.ndarray
    selected: SelectedIndices
    scaling: np.ndarray
    relative_residual: float
    warnings: list = field(default_factory=list)

    @property
    def r(self):
        return self.H.shape[0]


def estimate_species_count(M, drop_ratio=0.01, max_species=MAX_SPECIES):
    """Number of singular values of ``M`` that are at least ``drop_ratio * sigma_1``.

    Returns the smallest ``r`` with ``sigma_{r+1} < drop_ratio * sigma_1``,
    capped at ``max_species``.
    """
    if not 0 < drop_ratio < 1:
        raise ValueError(f"drop_ratio must lie in (0, 1), got {drop_ratio}")
    M = as_nonneg_matrix(M)
    sv = singular_values(M)
    if sv[0] == 0:
        return 0
    limit = min(max_species, len(sv))
    for r in range(1, limit + 1):
        nxt = sv[r] if r < len(sv) else 0.0
        if nxt < drop_ratio * sv[0]:
            return r
    return limit


def _hull_projection(V, x):
    """Coefficients ``a >= 0, sum(a) <= 1`` minimising ``||x - V.T a||``.

    Plain NNLS settles the common case where the sum bound is slack. Otherwise
    the origin joins as an extra vertex whose coefficient absorbs the slack,
    and the sum-to-one row is enforced by multiplier updates on its target.
    """
    a = nnls_solve(V.T, x)
    if a.sum() <= 1.0:
        return a
    k, n = V.shape
    lam = HULL_LAMBDA * max(float(np.linalg.norm(V, axis=1).max()), 1e-300)
    A = np.zeros((n + 1, k + 1))
    A[:n, :k] = V.T
    A[n, :] = lam
    shift = 0.0
    for _ in range(HULL_MAX_UPDATES):
        beta = nnls_solve(A, np.append(x, lam * (1.0 + shift)))
        gap = 1.0 - beta.sum()
        if abs(gap) <= 1e-13:
            break
        shift += gap
    return beta[:k]


def snpa_select(Mn, r):
    """Greedy SNPA selection of ``r`` rows of a row-normalised matrix.

    Each step picks the row with the largest residual norm after projecting
    every row onto the convex hull of the already selected rows and the
    origin. Ties go to the lowest index.
    """
    Mn = as_nonneg_matrix(Mn, "Mn")
    m = Mn.shape[0]
    r = int(r)
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if r > m:
        raise ValueError(f"cannot select {r} rows from a matrix with {m} rows")

    R = Mn.copy()
    norms = np.linalg.norm(R, axis=1)
    selected, picked_norms = [], []
    for _ in range(r):
        avail = norms.copy()
        avail[selected] = -np.inf
        best = avail.max()
        i = int(np.flatnonzero(avail >= best - TIE_RTOL * abs(best))[0])
        selected.append(i)
        picked_norms.append(float(norms[i]))

        V = Mn[selected]
        floor = 1e-14 * max(float(norms.max()), 1e-300)
        for row in range(m):
            if norms[row] <= floor:
                continue  # already inside the hull, which only grows
            a = _hull_projection(V, Mn[row])
            R[row] = Mn[row] - a @ V
        norms = np.linalg.norm(R, axis=1)
    return SelectedIndices(indices=selected, residual_norms=picked_norms)


def rescale_kinetics(Hhat):
    """Diagonal rescaling so that columns of ``diag(d) @ Hhat`` sum close to 1.

    Returns ``(H, d, notes)``; ``notes`` lists rows that received ``d_i = 0``.
    """
    Hhat = as_nonneg_matrix(Hhat, "Hhat")
    if np.any(Hhat.max(axis=1) == 0):
        raise ValueError("pseudo-kinetics has an all-zero row")
    d = nnls_solve(Hhat.T, np.ones(Hhat.shape[1]))
    notes = []
    for i in np.flatnonzero(d == 0):
        msg = f"species row {int(i)} received zero scale; its kinetics are degenerate"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    return d[:, None] * Hhat, d, notes


def recover_spectra(M, H):
    """Row-wise NNLS for ``W >= 0`` minimising ``||M - W H||_F``."""
    M = as_nonneg_matrix(M, "M")
    H = as_nonneg_matrix(H, "H")
    if M.shape[1] != H.shape[1]:
        raise ValueError(f"M has {M.shape[1]} time points but H has {H.shape[1]}")
    if np.linalg.matrix_rank(H) < H.shape[0]:
        warnings.warn("kinetics matrix is row-rank deficient; spectra are not unique",
                      RuntimeWarning, stacklevel=2)
    return nnls_solve_multi(H.T, M.T).T


def unmix(M, r):
    """Select, rescale and recover: the core factorisation of a preprocessed ``M``."""
    M = as_nonneg_matrix(M, "M")
    Mn, _ = normalize_rows(M)
    selected = snpa_select(Mn, r)
    Hhat = M[selected.indices]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        H, d, notes = rescale_kinetics(Hhat)
    W = recover_spectra(M, H)
    norm = np.linalg.norm(M)
    resid = np.linalg.norm(M - W @ H) / norm if norm > 0 else 0.0
    return UnmixResult(H=H, W=W, selected=selected, scaling=d,
                       relative_residual=float(resid), warnings=notes)


def align_species(W_true, W_est):
    """Permutation ``p`` so that ``W_est[:, p[s]]`` matches true column ``s``.

    Greedy: repeatedly pair the (true, estimate) columns with the highest
    remaining cosine similarity.
    """
    W_true = np.asarray(W_true, dtype=float)
    W_est = np.asarray(W_est, dtype=float)
    if W_true.shape != W_est.shape:
        raise ValueError(f"shape mismatch: {W_true.shape} vs {W_est.shape}")
    nt = np.linalg.norm(W_true, axis=0)
    ne = np.linalg.norm(W_est, axis=0)
    C = (W_true.T @ W_est) / np.maximum(np.outer(nt, ne), 1e-300)
    r = C.shape[0]
    perm = np.full(r, -1)
    C = C.copy()
    for _ in range(r):
        s, e = np.unravel_index(np.argmax(C), C.shape)
        perm[s] = e
        C[s, :] = -np.inf
        C[:, e] = -np.inf
    return perm


class SeparableNMF(TransformerMixin, BaseEstimator):
    """Separable NMF estimator. Samples are frequencies, features are times.

    After ``fit(M)``, ``components_`` holds the kinetics ``H`` (species x times)
    and ``transform`` returns the spectra ``W`` for any matrix on the same
    time grid.

    Parameters
    ----------
    n_components : int or None
        Number of species. ``None`` estimates it from the singular values.
    drop_ratio : float
        Singular value cut-off relative to the largest, used when
        ``n_components`` is None.
    """

    def __init__(self, n_components=None, drop_ratio=0.01):
        self.n_components = n_components
        self.drop_ratio = drop_ratio

    def fit(self, X, y=None):
        self._fit(X)
        return self

    def fit_transform(self, X, y=None):
        return self._fit(X).W

    def _fit(self, X):
        X = as_nonneg_matrix(X, "X")
        r = self.n_components
        if r is None:
            r = estimate_species_count(X, self.drop_ratio)
        elif int(r) != r or r < 1:
            raise ValueError(f"n_components must be a positive integer, got {r}")
        res = unmix(X, int(r))
        self.result_ = res
        self.n_components_ = res.r
        self.components_ = res.H
        self.spectra_ = res.W
        self.selected_rows_ = np.asarray(res.selected.indices)
        self.scaling_ = res.scaling
        self.reconstruction_err_ = res.relative_residual
        self.n_features_in_ = X.shape[1]
        return res

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = as_nonneg_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} time points, fitted on {self.n_features_in_}")
        return recover_spectra(X, self.components_)

    def inverse_transform(self, W):
        check_is_fitted(self, "components_")
        return np.asarray(W, dtype=float) @ self.components_
