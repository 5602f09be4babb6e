"""Synthetic data, baselines, retention metrics and the entropy/MSE bound.

Information kept by a subset ``S`` of tokens is measured as how well the full
matrix can be linearly reconstructed from ``S``.  The scalar bound

    mse >= exp(2 * h / d) / (2 * pi * e)

ties that reconstruction error to the conditional entropy ``h`` (nats) of
the data given ``S``; a Gaussian with per-dimension variance ``s**2`` has
``h = d/2 * ln(2 pi e s**2)`` and meets it with equality.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .compression import ApetConfig, compress
from .errors import InvalidBudget, ZeroMatrix
from .linalg import as_tokens, lstsq_fit
from .sampling import check_budget, portable_choice

KINDS = ("lowrank", "outliers", "clusters")
BASELINES = ("random", "norm", "stride")
ABLATION_M = (6, 8, 10, 12, 14)


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "lowrank"
    n: int = 576
    d: int = 64
    rank: int = 5
    outliers: int = 0
    sigma: float = 0.0
    outlier_scale: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown synthetic kind {self.kind!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 1 <= self.rank <= min(self.n, self.d):
            raise ValueError(f"rank must be in [1, min(n, d)] = [1, {min(self.n, self.d)}]")
        if not 0 <= self.outliers < self.n:
            raise ValueError(f"outliers must be in [0, n), got {self.outliers}")
        if self.outliers and self.rank >= self.d:
            raise ValueError("outliers need rank < d to leave an orthogonal complement")
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")


def gen_synthetic(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray | None]:
    """Generate ``(x, truth)``; ``truth`` is the outlier indices for ``outliers``.

    ``lowrank`` is ``L @ R.T + sigma * noise`` with standard normal factors.
    ``outliers`` replaces ``o`` random rows of that by ``outlier_scale`` times
    unit vectors orthogonal to the column space of ``R``.  ``clusters`` draws
    ``rank`` standard normal centers and scatters points around them with
    standard deviation ``sigma``.
    """
    rng = np.random.default_rng(spec.seed)
    n, d, r = spec.n, spec.d, spec.rank
    if spec.kind == "clusters":
        centers = rng.standard_normal((r, d))
        labels = rng.integers(0, r, size=n)
        return centers[labels] + spec.sigma * rng.standard_normal((n, d)), None

    left = rng.standard_normal((n, r))
    right = rng.standard_normal((d, r))
    x = left @ right.T + spec.sigma * rng.standard_normal((n, d))
    if spec.kind == "lowrank":
        return x, None

    truth = np.sort(rng.permutation(n)[: spec.outliers])
    q, _ = np.linalg.qr(right)
    dirs = rng.standard_normal((spec.outliers, d))
    dirs -= (dirs @ q) @ q.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    x[truth] = spec.outlier_scale * dirs
    return x, truth


def baseline_select(x, k: int, strategy: str, seed: int = 0) -> np.ndarray:
    """Reference selectors: seeded random, largest norm, or uniform stride."""
    x = as_tokens(x)
    n = x.shape[0]
    check_budget(k, n, "k")
    if strategy == "random":
        return np.sort(portable_choice(n, k, seed))
    if strategy == "norm":
        norms = np.linalg.norm(x, axis=1)
        return np.sort(np.lexsort((np.arange(n), -norms))[:k])
    if strategy == "stride":
        picked = list(dict.fromkeys(int(math.floor(i * n / k + 0.5)) for i in range(k)))
        present = set(picked)
        fill = (i for i in range(n) if i not in present)
        while len(picked) < k:
            picked.append(next(fill))
        return np.sort(np.asarray(picked, dtype=np.int64))
    raise ValueError(f"unknown baseline {strategy!r}; expected one of {BASELINES}")


def reconstruction_quality(x, retained, ridge_rel: float = 0.0) -> float:
    """Relative Frobenius error of reconstructing all of ``x`` from the retained rows."""
    x = as_tokens(x)
    idx = np.asarray(retained, dtype=np.int64)
    if idx.size == 0:
        raise InvalidBudget("retained set is empty")
    total = _fro(x)
    if total == 0:
        raise ZeroMatrix("reconstruction error is undefined for an all-zero matrix")
    basis = x[idx]
    coef = lstsq_fit(basis, x, ridge_rel)
    return float(_fro(x - coef @ basis) / total)


def _fro(a: np.ndarray) -> float:
    # np.linalg.norm goes through BLAS dot, whose rounding depends on the thread count
    return float(np.sqrt(np.einsum("ij,ij->", a, a)))


def outlier_recall(retained, truth) -> float:
    truth = set(int(i) for i in truth)
    if not truth:
        raise ValueError("recall needs at least one true index")
    return len(truth & set(int(i) for i in retained)) / len(truth)


def mse_entropy_bound(h_cond: float, d: int) -> float:
    """Smallest per-dimension reconstruction MSE allowed by conditional entropy ``h_cond`` (nats)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not math.isfinite(h_cond):
        raise ValueError("h_cond must be finite")
    return math.exp(2.0 * h_cond / d) / (2.0 * math.pi * math.e)


def gaussian_entropy(sigma: float, d: int) -> float:
    """Differential entropy (nats) of an isotropic ``d``-dimensional Gaussian."""
    return 0.5 * d * math.log(2.0 * math.pi * math.e * sigma**2)


def gaussian_mse_monte_carlo(sigma: float, d: int, samples: int = 100_000, seed: int = 0) -> float:
    """Per-dimension MSE of the conditional-mean estimate of ``x ~ N(0, sigma^2 I)``.

    With nothing observed the conditional mean is the prior mean, 0.
    """
    rng = np.random.default_rng(seed)
    x = sigma * rng.standard_normal((samples, d))
    return float(np.mean(x**2))


@dataclass
class EvalResult:
    """Aggregated table plus the per-seed retained sets behind it.

    Wall times live in ``timings`` and are written only on request, which
    keeps the serialized table byte-identical across identical runs.
    """

    rows: list[dict]
    runs: list[dict]
    seeds: list[int]
    timings: dict = field(default_factory=dict)

    COLUMNS = ("method", "sampler", "m", "k", "runs", "rel_error_mean", "rel_error_std", "recall_mean")

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {"schema": "1", "seeds": list(self.seeds), "table": self.rows, "runs": self.runs}
        if include_timings:
            out["timings_ms"] = {k: round(v * 1e3, 3) for k, v in self.timings.items()}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows:
            w.writerow(["" if row[c] is None else row[c] for c in self.COLUMNS])
        return buf.getvalue()


def _method_key(method: str, sampler: str | None, m: int | None, k: int) -> str:
    if method == "apet":
        return f"apet[{sampler},M={m},K={k}]"
    return f"{method}[K={k}]"


def run_grid(
    x,
    *,
    keeps,
    basis_ms=(10,),
    samplers=("fps",),
    baselines=(),
    seeds=(0,),
    truth=None,
    ridge_rel: float = 1e-6,
    quality_ridge: float = 0.0,
    dc_percentile: float = 2.0,
) -> EvalResult:
    """Compress ``x`` for every grid cell and seed, then aggregate.

    ApET cells span ``samplers x basis_ms x keeps``; each baseline runs once
    per ``keep``.  Every cell is scored by :func:`reconstruction_quality`
    (with ``quality_ridge``) and, when ``truth`` is given, by outlier recall.
    """
    x = as_tokens(x)
    seeds = [int(s) for s in seeds]
    cells = [("apet", s, m, k) for s in samplers for m in basis_ms for k in keeps]
    cells += [(b, None, None, k) for b in baselines for k in keeps]

    rows, runs, timings = [], [], {}
    for method, sampler, m, k in cells:
        errs, recalls, elapsed = [], [], 0.0
        for seed in seeds:
            t0 = time.perf_counter()
            if method == "apet":
                cfg = ApetConfig(keep=k, basis_m=m, sampler=sampler, seed=seed,
                                 ridge_rel=ridge_rel, dc_percentile=dc_percentile)
                _, report = compress(x, cfg)
                retained = np.asarray(report.retained)
            else:
                retained = baseline_select(x, k, method, seed)
            elapsed += time.perf_counter() - t0
            err = reconstruction_quality(x, retained, quality_ridge)
            rec = outlier_recall(retained, truth) if truth is not None and len(truth) else None
            errs.append(err)
            if rec is not None:
                recalls.append(rec)
            runs.append({
                "method": method, "sampler": sampler, "m": m, "k": k, "seed": seed,
                "rel_error": err, "recall": rec, "retained": [int(i) for i in retained],
            })
        timings[_method_key(method, sampler, m, k)] = elapsed / len(seeds)
        rows.append({
            "method": method,
            "sampler": sampler,
            "m": m,
            "k": k,
            "runs": len(seeds),
            "rel_error_mean": float(np.mean(errs)),
            "rel_error_std": float(np.std(errs)),
            "recall_mean": float(np.mean(recalls)) if recalls else None,
        })
    return EvalResult(rows=rows, runs=runs, seeds=seeds, timings=timings)


def run_ablation(
    x_or_spec,
    *,
    samplers=("random", "dpc", "fps"),
    basis_ms=ABLATION_M,
    keeps=(64,),
    seeds=(0,),
    truth=None,
    **kwargs,
) -> EvalResult:
    """Sampler x basis-size x keep-count sweep of the full pipeline.

    Accepts a matrix (with optional ``truth``) or a :class:`SyntheticSpec`,
    whose generated outlier indices then serve as ``truth``.
    """
    if isinstance(x_or_spec, SyntheticSpec):
        x, truth = gen_synthetic(x_or_spec)
    else:
        x = x_or_spec
    return run_grid(x, keeps=keeps, basis_ms=basis_ms, samplers=samplers,
                    seeds=seeds, truth=truth, **kwargs)
