"""Dense numerical kernels: non-negative least squares, matrix exponential,
singular values, plus the array validation helpers shared by the package.

Matrices are plain 2-D ``numpy`` float arrays. Every kernel copies its inputs,
so caller data is never modified.
"""

import math

import numpy as np

__all__ = [
    "as_matrix",
    "as_nonneg_matrix",
    "nnls_solve",
    "nnls_solve_multi",
    "expm",
    "singular_values",
    "PADE_ORDER",
    "EXPM_MAX_NORM",
]

# Diagonal Pade degree. With the scaled 1-norm <= 0.5 the truncation error
# is below 1e-16 relative.
PADE_ORDER = 6
# Beyond this 1-norm the number of squarings makes rounding unbounded.
EXPM_MAX_NORM = 1e7


def as_matrix(A, name="A"):
    """Return a finite float64 copy of ``A``, which must be 2-D and non-empty."""
    A = np.array(A, dtype=np.float64, copy=True)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_nonneg_matrix(A, name="M"):
    """Like :func:`as_matrix` but also require every entry to be >= 0."""
    A = as_matrix(A, name)
    if np.any(A < 0):
        i, j = np.argwhere(A < 0)[0]
        raise ValueError(f"{name} must be non-negative; entry ({i}, {j}) = {A[i, j]!r}")
    return A


def _as_vector(b, name="b"):
    b = np.array(b, dtype=np.float64, copy=True)
    if b.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError(f"{name} contains non-finite entries")
    return b


def _scaled_norm(v):
    """Frobenius norm that does not underflow for tiny entries."""
    s = float(np.abs(v).max())
    return s * float(np.linalg.norm(v / s)) if s > 0 else 0.0


def _nnls_core(A, b, tol, max_iter):
    """Lawson-Hanson active set iteration on validated arrays."""
    q = A.shape[1]
    x = np.zeros(q)
    passive = np.zeros(q, dtype=bool)
    # coordinates whose positive gradient turned out to be rounding noise
    blocked = np.zeros(q, dtype=bool)
    gtol = tol * _scaled_norm(A) * _scaled_norm(b)
    w = A.T @ b
    it = 0
    while True:
        cand = ~passive & ~blocked & (w > gtol)
        if not cand.any():
            break
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        x_prev = x
        passive[j] = True
        first = True
        while True:
            it += 1
            if it > max_iter:
                raise RuntimeError("nnls: iteration limit reached")
            z = np.zeros(q)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if first and z[j] <= 0:
                passive[j] = False
                blocked[j] = True
                break
            first = False
            if np.all(z[passive] > 0):
                x = z
                break
            neg = np.flatnonzero(passive & (z <= 0))
            ratios = x[neg] / (x[neg] - z[neg])
            alpha = ratios.min()
            x = x + alpha * (z - x)
            x[neg[np.argmin(ratios)]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
        if first:
            continue
        # a step that leaves x unchanged would pick the same j forever
        if np.array_equal(x, x_prev):
            blocked[j] = True
        else:
            blocked[:] = False
        w = A.T @ (b - A @ x)
    return x


def nnls_solve(A, b, tol=1e-10, max_iter=None):
    """Solve ``min ||A x - b||_2`` subject to ``x >= 0``.

    Lawson-Hanson active set method. Terminates when no inactive coordinate
    has a gradient component ``(A^T (b - A x))_i`` larger than ``tol`` times
    the problem scale ``||A||_F * ||b||``.

    Parameters
    ----------
    A : array_like, shape (p, q)
    b : array_like, shape (p,)
    tol : float
        Relative KKT tolerance, must be positive.
    max_iter : int, optional
        Cap on inner iterations, default ``30 * q + 30``.

    Returns
    -------
    x : ndarray, shape (q,)
    """
    A = as_matrix(A, "A")
    b = _as_vector(b, "b")
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has length {b.shape[0]}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = 30 * A.shape[1] + 30
    return _nnls_core(A, b, tol, max_iter)


def nnls_solve_multi(A, B, tol=1e-10):
    """Column-wise NNLS: column ``j`` of the result solves ``nnls_solve(A, B[:, j])``."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, B is {B.shape}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    max_iter = 30 * A.shape[1] + 30
    X = np.empty((A.shape[1], B.shape[1]))
    for j in range(B.shape[1]):
        X[:, j] = _nnls_core(A, B[:, j], tol, max_iter)
    return X


def _pade_coefficients(p):
    return [
        math.factorial(2 * p - k) * math.factorial(p)
        / (math.factorial(2 * p) * math.factorial(k) * math.factorial(p - k))
        for k in range(p + 1)
    ]


_PADE_C = _pade_coefficients(PADE_ORDER)


def expm(K):
    """Matrix exponential by scaling and squaring with a diagonal Pade approximant.

    Accepts a single square matrix or a stack of shape ``(..., r, r)``; each
    matrix in a stack gets its own squaring count. The count ``s`` is the
    smallest with ``||K||_1 / 2**s <= 0.5``.

    Raises ``ValueError`` for non-square or non-finite input and
    ``OverflowError`` when ``||K||_1`` exceeds ``EXPM_MAX_NORM`` or the result
    is not finite.
    """
    K = np.array(K, dtype=np.float64, copy=True)
    if K.ndim < 2 or K.shape[-1] != K.shape[-2]:
        raise ValueError(f"expm needs square matrices, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError("expm input contains non-finite entries")
    r = K.shape[-1]
    batch = K.shape[:-2]
    K = K.reshape((-1, r, r))

    norms = np.abs(K).sum(axis=-2).max(axis=-1)
    if np.any(norms > EXPM_MAX_NORM):
        raise OverflowError(f"expm: 1-norm {norms.max():.3g} exceeds validated range {EXPM_MAX_NORM:g}")
    with np.errstate(divide="ignore"):
        s = np.where(norms > 0.5, np.ceil(np.log2(np.maximum(norms, 1e-300) / 0.5)), 0.0)
    s = s.astype(int)
    A = K / (2.0 ** s)[:, None, None]

    eye = np.broadcast_to(np.eye(r), A.shape)
    N = np.zeros_like(A)
    D = np.zeros_like(A)
    P = np.array(eye)
    for k, c in enumerate(_PADE_C):
        if k:
            P = P @ A
        N += c * P
        D += (-1) ** k * c * P
    X = np.linalg.solve(D, N)

    with np.errstate(over="ignore", invalid="ignore"):
        for level in range(int(s.max(initial=0))):
            need = s > level
            X[need] = X[need] @ X[need]

    if not np.all(np.isfinite(X)):
        raise OverflowError("expm: result overflowed")
    return X.reshape(batch + (r, r))


def _round_robin(n):
    """Pair schedule for one Jacobi sweep: n-1 rounds of disjoint pairs (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        rounds.append((np.array(players[:half]), np.array(players[half:][::-1])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def singular_values(A, k=None, tol=1e-15, max_sweeps=60):
    """Top ``k`` singular values of ``A`` in descending order.

    One-sided (Hestenes) cyclic Jacobi: orthogonalises the columns of the
    thinner orientation of ``A`` pairwise, which diagonalises the smaller Gram
    matrix without forming it. Pairs are processed in round-robin order so
    each round is a batch of disjoint rotations.
    """
    A = as_matrix(A, "A")
    kmax = min(A.shape)
    if k is None:
        k = kmax
    if not (1 <= k <= kmax):
        raise ValueError(f"k must be in [1, {kmax}], got {k}")
    if A.shape[0] < A.shape[1]:
        A = A.T.copy()
    n = A.shape[1]
    if n % 2:
        A = np.hstack([A, np.zeros((A.shape[0], 1))])
    rounds = _round_robin(A.shape[1]) if A.shape[1] > 1 else []

    for _ in range(max_sweeps):
        rotated = False
        for P, Q in rounds:
            ap = A[:, P]
            aq = A[:, Q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            g = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t = np.where(zeta == 0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            sn = c * t
            A[:, P] = c * ap - sn * aq
            A[:, Q] = sn * ap + c * aq
        if not rotated:
            break
    sv = np.sort(np.linalg.norm(A, axis=0))[::-1]
    return sv[:k]
