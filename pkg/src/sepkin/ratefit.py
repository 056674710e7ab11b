"""Rate-matrix extraction from kinetics and recovery error metrics."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .kinetics import KineticsMatrix, TimeGrid, evolve
from .linalg import as_matrix, expm
from .sepnmf import align_species

__all__ = [
    "RateFitError",
    "RateFitResult",
    "fit_rates",
    "objective",
    "fd_gradient",
    "regenerate_kinetics",
    "kinetics_error",
    "spectra_error",
    "score_recovery",
    "RateFitter",
]

_SQRT_EPS = np.sqrt(np.finfo(float).eps)


class RateFitError(ArithmeticError):
    """Objective became non-finite; ``last_iterate`` holds the last good ``K``."""

    def __init__(self, message, last_iterate):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(eq=False)
class RateFitResult:
    K_hat: np.ndarray
    h0_used: np.ndarray
    objective: float
    iterations: int
    converged: bool
    fitted_kinetics: KineticsMatrix
    gradient_norm: float = float("nan")
    message: str = ""

    def to_dict(self):
        return {
            "K": self.K_hat.tolist(),
            "h0": self.h0_used.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": bool(self.converged),
            "gradient_inf_norm": self.gradient_norm,
            "max_abs_column_sum": float(np.abs(self.K_hat.sum(axis=0)).max()),
            "message": self.message,
        }


def objective(K, H, times, h0):
    """Sum over time points of the squared residual ``||H_j - expm(K t_j) h0||^2``."""
    R = H - evolve(K, h0, times)
    return float(np.sum(R * R))


def _model_batch(Ks, times, h0):
    # (b, r, r) rate matrices -> (b, n, r) predicted concentrations
    E = np.asarray(Ks)[:, None, :, :] * times[None, :, None, None]
    return expm(E) @ h0


def fd_gradient(K, H, times, h0, central=False):
    """Gradient of :func:`objective` with respect to the entries of ``K``.

    The model ``expm(K t) h0`` is differentiated by forward differences (one
    batched exponential per entry of ``K``) and contracted with the residual,
    so the gradient error shrinks with the residual. ``central=True`` instead
    takes central differences of the objective itself, as an independent check.
    """
    K = np.asarray(K, dtype=float)
    times = np.asarray(times, dtype=float)
    r = K.shape[0]
    if central:
        steps = np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(K.ravel()))
        basis = np.eye(r * r).reshape(r * r, r, r) * steps[:, None, None]
        out = []
        for sign in (1.0, -1.0):
            R = H.T[None] - _model_batch(K[None] + sign * basis, times, h0)
            out.append(np.einsum("bnr,bnr->b", R, R))
        return ((out[0] - out[1]) / (2 * steps)).reshape(r, r)
    steps = _SQRT_EPS * np.maximum(1.0, np.abs(K.ravel()))
    basis = np.eye(r * r).reshape(r * r, r, r) * steps[:, None, None]
    pred = _model_batch(np.concatenate([K[None], K[None] + basis]), times, h0)
    J = (pred[1:] - pred[0]) / steps[:, None, None]
    R = H.T - pred[0]
    return (-2.0 * np.einsum("bnr,nr->b", J, R)).reshape(r, r)


def fit_rates(H, times, h0=None, K0=None, tol=1e-7, max_iter=2000):
    """Least-squares first-order rate matrix for kinetics ``H`` sampled at ``times``.

    BFGS over all ``r*r`` entries of ``K`` without structural constraints.
    Internally time is measured in units of ``max(times)`` and the objective
    is averaged over time points, which keeps the first steps well scaled.
    ``converged`` means the max-norm of the gradient of :func:`objective`
    with respect to ``K`` reached ``tol``. ``h0`` defaults to the first
    column of ``H`` and ``K0`` to the zero matrix.
    """
    H = as_matrix(H, "H")
    r, n = H.shape
    times = np.asarray(times, dtype=float)
    if times.shape != (n,):
        raise ValueError(f"need {n} time points, got shape {times.shape}")
    if n < r:
        raise ValueError(f"need at least as many time points ({n}) as species ({r})")
    if np.any(times < 0) or not times.max() > 0:
        raise ValueError("times must be non-negative and not all zero")
    h0 = H[:, 0].copy() if h0 is None else np.asarray(h0, dtype=float)
    if h0.shape != (r,) or np.any(h0 < 0):
        raise ValueError("h0 must be a non-negative vector with one entry per species")
    K0 = np.zeros((r, r)) if K0 is None else as_matrix(K0, "K0")
    if K0.shape != (r, r):
        raise ValueError(f"K0 must be {r}x{r}")

    tau = float(times.max())
    s = times / tau
    # d objective / dK = n * tau * d f / d theta
    gscale = n * tau
    last = {"K": K0.copy()}

    def f(theta):
        try:
            val = objective(theta.reshape(r, r), H, s, h0) / n
        except OverflowError as exc:
            raise RateFitError(f"objective overflowed: {exc}", last["K"].copy()) from exc
        if not np.isfinite(val):
            raise RateFitError("objective became non-finite", last["K"].copy())
        return val

    def g(theta):
        try:
            grad = fd_gradient(theta.reshape(r, r), H, s, h0) / n
        except OverflowError as exc:
            raise RateFitError(f"gradient overflowed: {exc}", last["K"].copy()) from exc
        return grad.ravel()

    def remember(theta):
        last["K"] = theta.reshape(r, r) / tau

    theta0 = (K0 * tau).ravel()
    f_init = f(theta0)
    res = minimize(f, theta0, jac=g, method="BFGS", callback=remember,
                   options={"gtol": tol / gscale, "norm": np.inf, "maxiter": max_iter})
    theta = res.x
    f_hat = f(theta)
    if not f_hat <= f_init:
        theta, f_hat = theta0, f_init
    gnorm = float(np.abs(g(theta)).max()) * gscale
    K_hat = theta.reshape(r, r) / tau
    return RateFitResult(
        K_hat=K_hat, h0_used=h0, objective=objective(K_hat, H, times, h0),
        iterations=int(res.nit), converged=gnorm <= tol,
        fitted_kinetics=regenerate_kinetics(K_hat, h0, times),
        gradient_norm=gnorm, message=str(res.message),
    )


def regenerate_kinetics(K_hat, h0, grid):
    """Kinetics implied by ``K_hat`` on ``grid``; ``K_hat`` need not be conservative."""
    times = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=float)
    return KineticsMatrix(evolve(K_hat, h0, times), times)


def _rel_frob(A_true, A_est):
    A_true = np.asarray(A_true, dtype=float)
    A_est = np.asarray(A_est, dtype=float)
    if A_true.shape != A_est.shape:
        raise ValueError(f"shape mismatch: {A_true.shape} vs {A_est.shape}")
    return float(np.linalg.norm(A_true - A_est) / np.linalg.norm(A_true))


def kinetics_error(H_true, H_est, perm=None):
    """``||H - H~||_F / ||H||_F``; ``perm`` reorders the estimated rows first."""
    H_est = np.asarray(H_est)
    if perm is not None:
        H_est = H_est[np.asarray(perm)]
    return _rel_frob(H_true, H_est)


def spectra_error(W_true, W_est, perm=None):
    """``||W - W~||_F / ||W||_F``; ``perm`` reorders the estimated columns first."""
    W_est = np.asarray(W_est)
    if perm is not None:
        W_est = W_est[:, np.asarray(perm)]
    return _rel_frob(W_true, W_est)


def score_recovery(W_true, H_true, W_est, H_est):
    """Align species by spectral cosine similarity and return both relative errors."""
    perm = align_species(W_true, W_est)
    return {
        "perm": perm.tolist(),
        "kinetics_error": kinetics_error(H_true, H_est, perm),
        "spectra_error": spectra_error(W_true, W_est, perm),
    }


class RateFitter(RegressorMixin, BaseEstimator):
    """Fit a first-order rate matrix to concentration time courses.

    ``fit(times, C)`` takes times of shape ``(n,)`` or ``(n, 1)`` and
    concentrations ``C`` of shape ``(n, r)`` (the transposed kinetics matrix).
    ``predict(times)`` returns concentrations implied by the fitted ``K``.
    """

    def __init__(self, h0=None, K0=None, tol=1e-7, max_iter=2000):
        self.h0 = h0
        self.K0 = K0
        self.tol = tol
        self.max_iter = max_iter

    @staticmethod
    def _times(X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError("times must be a single column")
            X = X[:, 0]
        return X

    def fit(self, X, y):
        times = self._times(X)
        C = np.asarray(y, dtype=float)
        res = fit_rates(C.T, times, h0=self.h0, K0=self.K0, tol=self.tol, max_iter=self.max_iter)
        self.result_ = res
        self.rate_matrix_ = res.K_hat
        self.h0_ = res.h0_used
        self.n_iter_ = res.iterations
        return self

    def predict(self, X):
        check_is_fitted(self, "rate_matrix_")
        return evolve(self.rate_matrix_, self.h0_, self._times(X)).T
