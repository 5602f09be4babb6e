"""Dense matrix primitives: distances, cosine similarity, ridge least squares.

A token matrix is a 2-D ``float64`` array with one token per row.  Row order is
the token's sequence position and is never changed by anything in here.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidMatrix, NonFiniteValue, SingularGram

EPS_NORM = 1e-12
DEFAULT_RIDGE = 1e-6
MAX_JITTER_STEPS = 5
PIVOT_RTOL = 1e-13


def as_tokens(x, name: str = "x") -> np.ndarray:
    """Validate ``x`` as an ``n x d`` token matrix and return a float64 copy-or-view."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidMatrix(f"{name} must be 2-D (tokens x features), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidMatrix(f"{name} must have n >= 1 and d >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return arr


def pairwise_sq_dist(x) -> np.ndarray:
    """Squared Euclidean distances between all pairs of rows.

    Differences are formed explicitly (no ``|a|^2 + |b|^2 - 2ab`` expansion), so
    near-duplicate tokens get accurate small distances.  Only the upper
    triangle is computed; the lower triangle is its mirror.
    """
    x = as_tokens(x)
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n - 1):
        diff = x[i + 1 :] - x[i]
        row = np.einsum("ij,ij->i", diff, diff)
        out[i, i + 1 :] = row
        out[i + 1 :, i] = row
    return out


def cosine_to_rows(x, q) -> np.ndarray:
    """Cosine similarity between every row of ``x`` and the vector ``q``.

    Entries where either vector has norm below ``EPS_NORM`` are 0.
    """
    x = as_tokens(x)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if q.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"query has dimension {q.shape[0]}, tokens have {x.shape[1]}")
    return cosine_matrix(x, q[None, :])[:, 0]


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``out[i, j]`` = cosine of ``a[i]`` and ``b[j]``, degenerate norms give 0."""
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"dimension {a.shape[1]} != {b.shape[1]}")
    na = np.sqrt(np.einsum("ij,ij->i", a, a))
    nb = np.sqrt(np.einsum("ij,ij->i", b, b))
    ok_a = na >= EPS_NORM
    ok_b = nb >= EPS_NORM
    ua = np.where(ok_a[:, None], a / np.where(ok_a, na, 1.0)[:, None], 0.0)
    ub = np.where(ok_b[:, None], b / np.where(ok_b, nb, 1.0)[:, None], 0.0)
    return ua @ ub.T


def ridge_solve(basis: np.ndarray, targets: np.ndarray, ridge_rel: float):
    """Solve the ridge least-squares fit and report the ridge actually applied.

    Returns ``(coefficients, ridge_abs, escalations)`` where ``coefficients``
    is ``n x m``.  See :func:`lstsq_fit` for the objective.
    """
    basis = as_tokens(basis, "basis")
    targets = as_tokens(targets, "targets")
    if basis.shape[1] != targets.shape[1]:
        raise DimensionMismatch(
            f"basis has dimension {basis.shape[1]}, targets have {targets.shape[1]}"
        )
    if not ridge_rel >= 0 or not np.isfinite(ridge_rel):
        raise ValueError(f"ridge_rel must be a finite nonnegative number, got {ridge_rel}")
    m = basis.shape[0]
    gram = basis @ basis.T
    scale = np.trace(gram) / m
    lam = ridge_rel * scale
    jitter = 1e-10 * scale
    eye = np.eye(m)

    floor = PIVOT_RTOL * np.diag(gram).max()
    escalations = 0
    while True:
        chol = _cholesky(gram + lam * eye, floor)
        if chol is not None:
            break
        if escalations == MAX_JITTER_STEPS or scale == 0:
            raise SingularGram(
                f"Gram matrix of {m} basis tokens is not positive definite "
                f"(ridge {lam:.3g} after {escalations} escalations)"
            )
        lam = max(lam, jitter) * 10.0
        escalations += 1

    coef = _cho_solve(chol, basis @ targets.T).T
    return np.ascontiguousarray(coef), lam, escalations


# The m x m factorization and substitutions are written out instead of calling
# LAPACK: threaded potrf/getrs round differently depending on the BLAS thread
# count, and results must not.  Dot products go through einsum (no BLAS).


def _cholesky(a: np.ndarray, floor: float):
    """Lower Cholesky factor of ``a``, or None if a squared pivot is <= ``floor``."""
    m = a.shape[0]
    low = np.zeros_like(a)
    for j in range(m):
        row = low[j, :j]
        pivot = a[j, j] - np.einsum("i,i->", row, row)
        if not pivot > floor:
            return None
        low[j, j] = np.sqrt(pivot)
        low[j + 1 :, j] = (a[j + 1 :, j] - np.einsum("ik,k->i", low[j + 1 :, :j], row)) / low[j, j]
    return low


def _cho_solve(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``low @ low.T @ out = rhs`` by forward then back substitution."""
    m = low.shape[0]
    half = np.empty_like(rhs)
    for i in range(m):
        half[i] = (rhs[i] - np.einsum("k,kn->n", low[i, :i], half[:i])) / low[i, i]
    out = np.empty_like(rhs)
    for i in range(m - 1, -1, -1):
        out[i] = (half[i] - np.einsum("k,kn->n", low[i + 1 :, i], out[i + 1 :])) / low[i, i]
    return out


def lstsq_fit(basis, targets, ridge_rel: float = DEFAULT_RIDGE) -> np.ndarray:
    """Express every target row as a linear combination of the basis rows.

    Minimizes ``|targets - C @ basis|_F^2 + lam * |C|_F^2`` with
    ``lam = ridge_rel * trace(G) / m`` and ``G = basis @ basis.T``.  The trace
    scaling makes the fit invariant to a uniform rescaling of the data.  When
    the Cholesky factorization of ``G + lam I`` fails (a squared pivot at or
    below ``PIVOT_RTOL`` times the largest Gram diagonal), ``lam`` is raised in up
    to five tenfold steps before :class:`SingularGram` is raised.

    Parameters
    ----------
    basis : array_like, shape (m, d)
    targets : array_like, shape (n, d)
    ridge_rel : float
        Ridge strength relative to the mean squared basis norm.

    Returns
    -------
    ndarray, shape (n, m)
        Row ``i`` holds the coefficients of target ``i``.
    """
    return ridge_solve(basis, targets, ridge_rel)[0]
