"""Approximation-error guided token compression.

One compression stage runs three steps on an ``n x d`` token matrix:

1. pick ``M`` basis tokens (farthest point sampling by default),
2. fit every token on the basis and score it by its residual norm,
3. keep the basis plus the ``K - M`` highest-residual other tokens, and fold
   each dropped token into the retained token it is most cosine-similar to.

Multi-stage use (e.g. after an encoder and again deeper in a model) is just
two calls on whatever matrices the caller has.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .approximation import ApproximationResult, fit_basis, rank_by_error
from .errors import InvalidBudget, PlanMismatch
from .linalg import DEFAULT_RIDGE, as_tokens, cosine_matrix
from .sampling import DEFAULT_DC_PERCENTILE, STRATEGIES, BasisSelection, sample_basis

log = logging.getLogger(__name__)

DEFAULT_BASIS_M = 10
MERGE_MODES = ("mean", "drop")
REPORT_SCHEMA = "1"


@dataclass(frozen=True)
class ApetConfig:
    """Settings for one compression stage.

    Exactly one of ``keep`` (absolute token count) and ``keep_ratio`` should
    be given; a ratio resolves to ``max(1, round(ratio * n))``.
    """

    keep: int | None = None
    keep_ratio: float | None = None
    basis_m: int = DEFAULT_BASIS_M
    sampler: str = "fps"
    dc_percentile: float = DEFAULT_DC_PERCENTILE
    ridge_rel: float = DEFAULT_RIDGE
    merge: str = "mean"
    seed: int = 0

    def __post_init__(self):
        if (self.keep is None) == (self.keep_ratio is None):
            raise InvalidBudget("give exactly one of keep and keep_ratio")
        if self.keep_ratio is not None and not 0 < self.keep_ratio <= 1:
            raise InvalidBudget(f"keep_ratio must be in (0, 1], got {self.keep_ratio}")
        if self.sampler not in STRATEGIES:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.merge not in MERGE_MODES:
            raise ValueError(f"unknown merge mode {self.merge!r}")
        if not self.ridge_rel >= 0:
            raise ValueError(f"ridge_rel must be >= 0, got {self.ridge_rel}")

    def resolve_keep(self, n: int) -> int:
        if self.keep is not None:
            return int(self.keep)
        return max(1, int(round(self.keep_ratio * n)))

    def resolve(self, n: int) -> tuple[int, int]:
        """``(K, M)`` for an input of ``n`` tokens; raises if not ``1 <= M <= K <= n``."""
        k = self.resolve_keep(n)
        m = int(self.basis_m)
        if not 1 <= k <= n:
            raise InvalidBudget(f"keep K={k} outside [1, {n}]")
        if not 1 <= m <= k:
            raise InvalidBudget(f"basis size M={m} outside [1, K={k}]; basis tokens are always kept")
        return k, m


@dataclass(frozen=True)
class CompressionPlan:
    """Which tokens survive and where each dropped token goes.

    ``groups[j]`` lists (ascending) the dropped indices merged into
    ``retained[j]``.
    """

    n: int
    retained: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    basis: BasisSelection
    residuals: np.ndarray

    @property
    def k(self) -> int:
        return len(self.retained)

    def dropped(self) -> list[int]:
        return sorted(i for g in self.groups for i in g)

    def check(self) -> None:
        """Raise :class:`PlanMismatch` unless retained and groups partition ``range(n)``."""
        if len(self.groups) != len(self.retained):
            raise PlanMismatch("one group per retained token required")
        if any(a >= b for a, b in zip(self.retained, self.retained[1:])):
            raise PlanMismatch("retained indices must be strictly ascending")
        if not set(self.basis.indices) <= set(self.retained):
            raise PlanMismatch("basis tokens must be retained")
        seen = np.zeros(self.n, dtype=np.int64)
        for i in self.retained:
            seen[i] += 1
        for g in self.groups:
            for i in g:
                seen[i] += 1
        if not np.all(seen == 1):
            raise PlanMismatch("retained tokens and groups do not partition the input")


@dataclass
class CompressionReport:
    config: ApetConfig
    n: int
    d: int
    k: int
    m: int
    basis: tuple[int, ...]
    retained: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    residual_min: float
    residual_max: float
    residual_mean: float
    flags: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    residuals: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_timings: bool = False) -> dict:
        """Plain-data view in the documented key order.

        Wall times are left out unless asked for, so that identical runs
        serialize to identical bytes.
        """
        out = {
            "schema": REPORT_SCHEMA,
            "config": asdict(self.config),
            "n": self.n,
            "d": self.d,
            "k": self.k,
            "m": self.m,
            "basis": list(self.basis),
            "retained": list(self.retained),
            "groups": [list(g) for g in self.groups],
            "residuals": {
                "min": self.residual_min,
                "max": self.residual_max,
                "mean": self.residual_mean,
            },
            "flags": dict(self.flags),
        }
        if include_timings:
            out["timings_ms"] = {k: round(v * 1e3, 3) for k, v in self.timings.items()}
        return out


def select_retained(residuals: np.ndarray, basis: BasisSelection, k: int) -> np.ndarray:
    """Basis indices plus the ``k - M`` non-basis indices with largest residual, ascending."""
    in_basis = np.zeros(residuals.size, dtype=bool)
    in_basis[basis.as_array()] = True
    order = rank_by_error(residuals)
    extra = order[~in_basis[order]][: k - basis.m]
    return np.sort(np.concatenate([basis.as_array(), extra]))


def assign_groups(x: np.ndarray, retained: np.ndarray) -> tuple[tuple[int, ...], ...]:
    """Attach each non-retained token to its most cosine-similar retained token.

    Ties go to the smaller retained index (``argmax`` takes the first
    maximum and ``retained`` is ascending).
    """
    n = x.shape[0]
    keep = np.zeros(n, dtype=bool)
    keep[retained] = True
    dropped = np.flatnonzero(~keep)
    buckets: list[list[int]] = [[] for _ in range(retained.size)]
    if dropped.size:
        sim = cosine_matrix(x[dropped], x[retained])
        target = np.argmax(sim, axis=1)
        for i, t in zip(dropped.tolist(), target.tolist()):
            buckets[t].append(i)
    return tuple(tuple(b) for b in buckets)


def _plan(x: np.ndarray, cfg: ApetConfig, timings: dict):
    n = x.shape[0]
    k, m = cfg.resolve(n)

    t0 = time.perf_counter()
    basis = sample_basis(x, m, cfg.sampler, seed=cfg.seed, dc_percentile=cfg.dc_percentile)
    t1 = time.perf_counter()
    approx = fit_basis(x, basis, cfg.ridge_rel)
    t2 = time.perf_counter()
    retained = select_retained(approx.residuals, basis, k)
    groups = assign_groups(x, retained)
    t3 = time.perf_counter()
    timings.update(sample=t1 - t0, fit=t2 - t1, select=t3 - t2)

    plan = CompressionPlan(
        n=n,
        retained=tuple(int(i) for i in retained),
        groups=groups,
        basis=basis,
        residuals=approx.residuals,
    )
    plan.check()
    return plan, approx


def plan_compression(x, cfg: ApetConfig) -> CompressionPlan:
    """Choose the retained tokens and merge groups without touching the data."""
    x = as_tokens(x)
    return _plan(x, cfg, {})[0]


def apply_merge(x, plan: CompressionPlan, mode: str = "mean") -> np.ndarray:
    """Build the ``K x d`` compressed matrix, rows in ascending retained order.

    ``mean`` replaces each retained token by the unweighted mean of itself
    and its group; ``drop`` keeps retained tokens unchanged.
    """
    x = as_tokens(x)
    if x.shape[0] != plan.n:
        raise PlanMismatch(f"plan is for {plan.n} tokens, matrix has {x.shape[0]}")
    if mode not in MERGE_MODES:
        raise ValueError(f"unknown merge mode {mode!r}")
    plan.check()
    out = x[list(plan.retained)].copy()
    if mode == "mean":
        for j, g in enumerate(plan.groups):
            if g:
                out[j] = x[[plan.retained[j], *g]].mean(axis=0)
    return out


def compress(x, cfg: ApetConfig) -> tuple[np.ndarray, CompressionReport]:
    """Run one full compression stage; deterministic in ``(x, cfg)``."""
    x = as_tokens(x)
    timings: dict = {}
    plan, approx = _plan(x, cfg, timings)
    t0 = time.perf_counter()
    out = apply_merge(x, plan, cfg.merge)
    timings["merge"] = time.perf_counter() - t0
    timings["total"] = sum(timings.values())
    report = build_report(x, cfg, plan, approx, timings)
    log.debug("compressed %d -> %d tokens in %.1f ms", x.shape[0], plan.k, timings["total"] * 1e3)
    return out, report


def build_report(
    x: np.ndarray,
    cfg: ApetConfig,
    plan: CompressionPlan,
    approx: ApproximationResult,
    timings: dict,
) -> CompressionReport:
    res = approx.residuals
    return CompressionReport(
        config=cfg,
        n=int(x.shape[0]),
        d=int(x.shape[1]),
        k=plan.k,
        m=plan.basis.m,
        basis=plan.basis.indices,
        retained=plan.retained,
        groups=plan.groups,
        residual_min=float(res.min()),
        residual_max=float(res.max()),
        residual_mean=float(res.mean()),
        flags={
            "dpc_degenerate": bool(plan.basis.degenerate),
            "ridge_escalated": approx.jitter_steps > 0,
        },
        timings=dict(timings),
        residuals=res,
    )
