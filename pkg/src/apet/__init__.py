"""Approximation-error guided token compression (ApET).

Typical use::

    from apet import ApetConfig, compress
    merged, report = compress(tokens, ApetConfig(keep=64))
"""

from .approximation import ApproximationResult, fit_basis, rank_by_error
from .compression import (
    ApetConfig,
    CompressionPlan,
    CompressionReport,
    apply_merge,
    compress,
    plan_compression,
)
from .errors import (
    ApetError,
    BadMagic,
    DimensionMismatch,
    InvalidBudget,
    SingularGram,
    TruncatedPayload,
)
from .linalg import cosine_to_rows, lstsq_fit, pairwise_sq_dist
from .sampling import BasisSelection, sample_basis, sample_dpc, sample_fps, sample_random

__all__ = [
    "ApetConfig",
    "ApetError",
    "ApproximationResult",
    "BadMagic",
    "BasisSelection",
    "CompressionPlan",
    "CompressionReport",
    "DimensionMismatch",
    "InvalidBudget",
    "SingularGram",
    "TruncatedPayload",
    "apply_merge",
    "compress",
    "cosine_to_rows",
    "fit_basis",
    "lstsq_fit",
    "pairwise_sq_dist",
    "plan_compression",
    "rank_by_error",
    "sample_basis",
    "sample_dpc",
    "sample_fps",
    "sample_random",
]
