"""First-order reaction networks.

Concentrations follow ``h(t) = expm(K t) h0``. A valid rate matrix is
Metzler (non-negative off-diagonal) with zero column sums, which conserves
total concentration.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, expm

__all__ = [
    "RateMatrixError",
    "RateMatrix",
    "ReactionNetwork",
    "TimeGrid",
    "KineticsMatrix",
    "validate_rate_matrix",
    "propagate",
    "discretize_kinetics",
    "evolve",
]

COLUMN_SUM_TOL = 1e-9
H0_SUM_TOL = 1e-12
# pre-clamp floor for propagated concentrations
NEGATIVE_TOL = 1e-9


class RateMatrixError(ValueError):
    """Raised when a rate matrix breaks first-order network structure."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


def validate_rate_matrix(K):
    """Check ``K`` and wrap it as a :class:`RateMatrix`.

    Violations are reported with 1-based ``(row, col)`` indices.
    """
    K = as_matrix(K, "K")
    r = K.shape[0]
    if K.shape != (r, r):
        raise RateMatrixError(f"rate matrix must be square, got shape {K.shape}")
    violations = []
    for i in range(r):
        for j in range(r):
            if i != j and K[i, j] < 0:
                violations.append(f"negative off-diagonal ({i + 1},{j + 1}) = {K[i, j]:g}")
    for i in range(r):
        if K[i, i] > 0:
            violations.append(f"positive diagonal ({i + 1},{i + 1}) = {K[i, i]:g}")
    sums = K.sum(axis=0)
    for j in np.flatnonzero(np.abs(sums) > COLUMN_SUM_TOL):
        violations.append(f"column {j + 1} sums to {sums[j]:.3g}, expected 0")
    if violations:
        raise RateMatrixError("invalid rate matrix: " + "; ".join(violations), violations)
    return RateMatrix(K)


@dataclass(frozen=True, eq=False)
class RateMatrix:
    K: np.ndarray

    @property
    def r(self):
        return self.K.shape[0]


@dataclass(frozen=True)
class TimeGrid:
    """Equidistant times ``0 = t_0 < ... < t_{n-1} = T``."""

    T: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"time grid needs n >= 2 points, got {self.n}")
        if not self.T > 0:
            raise ValueError(f"duration T must be > 0, got {self.T}")

    @property
    def points(self):
        return np.linspace(0.0, self.T, int(self.n))


@dataclass(frozen=True, eq=False)
class ReactionNetwork:
    rates: RateMatrix
    h0: np.ndarray

    def __post_init__(self):
        h0 = np.array(self.h0, dtype=np.float64)
        if h0.shape != (self.rates.r,):
            raise ValueError(f"h0 must have length {self.rates.r}, got shape {h0.shape}")
        if np.any(h0 < 0):
            raise ValueError("h0 must be non-negative")
        if abs(h0.sum() - 1.0) > H0_SUM_TOL:
            raise ValueError(f"h0 must sum to 1, sums to {h0.sum()!r}")
        object.__setattr__(self, "h0", h0)

    @classmethod
    def from_arrays(cls, K, h0):
        return cls(validate_rate_matrix(K), h0)

    @property
    def r(self):
        return self.rates.r


@dataclass(frozen=True, eq=False)
class KineticsMatrix:
    H: np.ndarray
    times: np.ndarray

    @property
    def r(self):
        return self.H.shape[0]


def evolve(K, h0, times):
    """``expm(K t_j) @ h0`` for every time, shape ``(r, n)``; no structure checks."""
    K = np.asarray(K, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    E = expm(times[:, None, None] * K[None, :, :])
    return (E @ np.asarray(h0, dtype=np.float64)).T


def _checked(H):
    if H.min(initial=0.0) < -NEGATIVE_TOL:
        raise ArithmeticError(f"propagated concentration {H.min():.3g} below tolerance")
    sums = H.sum(axis=0)
    if np.max(np.abs(sums - 1.0)) > COLUMN_SUM_TOL:
        raise ArithmeticError(f"concentration not conserved: sum {sums[np.argmax(np.abs(sums - 1))]!r}")
    return np.maximum(H, 0.0)


def propagate(net, t):
    """Concentrations of ``net`` at time ``t >= 0``."""
    if not t >= 0:
        raise ValueError(f"time must be >= 0, got {t}")
    if t == 0:
        return net.h0.copy()
    return _checked(evolve(net.rates.K, net.h0, [t]))[:, 0]


def discretize_kinetics(net, grid):
    """Kinetics matrix whose column ``j`` is ``propagate(net, t_j)``."""
    times = grid.points if isinstance(grid, TimeGrid) else np.asarray(grid, dtype=np.float64)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("times must be a strictly increasing, non-negative sequence of length >= 2")
    H = _checked(evolve(net.rates.K, net.h0, times))
    H[:, times == 0] = net.h0[:, None]
    return KineticsMatrix(H, times)
