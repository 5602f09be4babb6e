"""Per-token approximation error against a linear basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBudget
from .linalg import DEFAULT_RIDGE, as_tokens, ridge_solve
from .sampling import BasisSelection


@dataclass(frozen=True)
class ApproximationResult:
    """Coefficients, residual norms and the basis they were computed with.

    ``coefficients[i]`` expresses token ``i`` in the basis rows (tokens are
    rows, so this is the transpose of a tokens-as-columns coefficient
    matrix).  ``residuals[i]`` is the raw L2 norm of token ``i`` minus its
    reconstruction.  ``ridge_abs`` is the absolute ridge finally used, which
    exceeds the requested one only if the solver had to add jitter.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    basis: BasisSelection
    ridge_rel: float
    ridge_abs: float
    jitter_steps: int = 0
    reconstruction: np.ndarray | None = None


def fit_basis(
    x,
    basis: BasisSelection,
    ridge_rel: float = DEFAULT_RIDGE,
    keep_reconstruction: bool = False,
) -> ApproximationResult:
    """Reconstruct every token (basis tokens included) from the basis rows."""
    x = as_tokens(x)
    idx = basis.as_array()
    n = x.shape[0]
    if idx.size == 0 or idx.min() < 0 or idx.max() >= n or np.unique(idx).size != idx.size:
        raise InvalidBudget(f"basis indices {basis.indices} invalid for {n} tokens")
    coef, ridge_abs, steps = ridge_solve(x[idx], x, ridge_rel)
    recon = coef @ x[idx]
    diff = x - recon
    residuals = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return ApproximationResult(
        coefficients=coef,
        residuals=residuals,
        basis=basis,
        ridge_rel=float(ridge_rel),
        ridge_abs=float(ridge_abs),
        jitter_steps=steps,
        reconstruction=recon if keep_reconstruction else None,
    )


def rank_by_error(result_or_residuals) -> np.ndarray:
    """Token indices by descending residual, ties to the smaller index."""
    res = getattr(result_or_residuals, "residuals", result_or_residuals)
    res = np.asarray(res, dtype=np.float64)
    return np.lexsort((np.arange(res.size), -res))
