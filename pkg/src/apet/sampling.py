"""Basis token selection: farthest point, density peaks, and seeded random.

Random draws use a fixed, portable recipe so that a seed selects the same
tokens on every platform and numpy version: the PCG64 bit generator seeded
through ``SeedSequence(seed)``, consumed 64 raw bits at a time by a partial
Fisher-Yates shuffle with rejection sampling for unbiased bounded integers.
Both the bit stream and the seeding are frozen by numpy's stream policy;
``Generator`` methods, which are not, are never used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBudget
from .linalg import as_tokens, pairwise_sq_dist

STRATEGIES = ("fps", "dpc", "random")
DEFAULT_DC_PERCENTILE = 2.0

_TWO64 = 1 << 64


@dataclass(frozen=True)
class BasisSelection:
    """Basis token indices, in selection order, plus how they were chosen."""

    indices: tuple[int, ...]
    strategy: str
    seed: int = 0
    degenerate: bool = False
    params: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)


def check_budget(m: int, n: int, what: str = "m") -> None:
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
        raise InvalidBudget(f"{what} must be an integer, got {m!r}")
    if m < 1 or m > n:
        raise InvalidBudget(f"{what}={m} outside [1, {n}]")


def portable_choice(n: int, m: int, seed: int) -> np.ndarray:
    """``m`` distinct integers from ``range(n)`` in draw order (see module doc)."""
    bitgen = np.random.PCG64(np.random.SeedSequence(int(seed)))
    pool = list(range(n))
    for i in range(m):
        bound = n - i
        limit = _TWO64 - (_TWO64 % bound)
        while True:
            r = int(bitgen.random_raw())
            if r < limit:
                break
        j = i + r % bound
        pool[i], pool[j] = pool[j], pool[i]
    return np.asarray(pool[:m], dtype=np.int64)


def sample_fps(x, m: int) -> BasisSelection:
    """Greedy farthest point sampling.

    The first token is the one farthest from the centroid; every later token
    maximizes its minimum squared distance to those already chosen.  Ties go
    to the smallest index, so the result is deterministic and the selection
    for ``m`` is a prefix of the selection for any larger ``m``.
    """
    x = as_tokens(x)
    n = x.shape[0]
    check_budget(m, n)
    diff = x - x.mean(axis=0)
    first = int(np.argmax(np.einsum("ij,ij->i", diff, diff)))

    chosen = [first]
    min_d = np.full(n, np.inf)
    taken = np.zeros(n, dtype=bool)
    taken[first] = True
    last = first
    for _ in range(m - 1):
        diff = x - x[last]
        np.minimum(min_d, np.einsum("ij,ij->i", diff, diff), out=min_d)
        # -1 < any real distance, so selected tokens never win the argmax
        last = int(np.argmax(np.where(taken, -1.0, min_d)))
        taken[last] = True
        chosen.append(last)
    return BasisSelection(tuple(chosen), "fps")


def dpc_scores(x, dc_percentile: float = DEFAULT_DC_PERCENTILE):
    """Density-peak quantities ``(rho, delta, gamma, degenerate)`` for every token.

    The cutoff ``dc`` is the given percentile of the off-diagonal squared
    distances, ``rho_i = sum_{j != i} exp(-D_ij / dc)`` with ``D`` the squared
    distances, and ``delta_i`` is the Euclidean distance to the nearest token
    ranked denser (density descending, index ascending); the densest token
    gets its largest distance instead.  ``gamma = rho * delta``.
    """
    x = as_tokens(x)
    if not 0 < dc_percentile < 100:
        raise ValueError(f"dc_percentile must be in (0, 100), got {dc_percentile}")
    n = x.shape[0]
    sq = pairwise_sq_dist(x)
    if n == 1:
        return np.zeros(1), np.zeros(1), np.zeros(1), True
    off = sq[~np.eye(n, dtype=bool)]
    if not np.any(off > 0):
        zeros = np.zeros(n)
        return zeros, zeros.copy(), zeros.copy(), True
    dc = float(np.percentile(off, dc_percentile))
    if dc == 0.0:
        # mostly duplicates: fall back to the smallest nonzero separation
        dc = float(off[off > 0].min())
    kernel = np.exp(-sq / dc)
    np.fill_diagonal(kernel, 0.0)
    rho = kernel.sum(axis=1)

    dist = np.sqrt(sq)
    order = np.lexsort((np.arange(n), -rho))
    delta = np.empty(n)
    delta[order[0]] = dist[order[0]].max()
    for rank in range(1, n):
        i = order[rank]
        delta[i] = dist[i, order[:rank]].min()
    return rho, delta, rho * delta, False


def sample_dpc(x, m: int, dc_percentile: float = DEFAULT_DC_PERCENTILE) -> BasisSelection:
    """The ``m`` tokens with the largest density-peak score ``rho * delta``.

    Output is ordered by descending score, ties by smaller index.  If every
    pairwise distance is zero the first ``m`` indices are returned and the
    selection is flagged ``degenerate``.
    """
    x = as_tokens(x)
    n = x.shape[0]
    check_budget(m, n)
    params = {"dc_percentile": float(dc_percentile)}
    _, _, gamma, degenerate = dpc_scores(x, dc_percentile)
    if degenerate:
        return BasisSelection(tuple(range(m)), "dpc", degenerate=True, params=params)
    order = np.lexsort((np.arange(n), -gamma))
    return BasisSelection(tuple(int(i) for i in order[:m]), "dpc", params=params)


def sample_random(x, m: int, seed: int = 0) -> BasisSelection:
    """``m`` distinct tokens drawn uniformly without replacement, sorted ascending."""
    x = as_tokens(x)
    n = x.shape[0]
    check_budget(m, n)
    idx = np.sort(portable_choice(n, m, seed))
    return BasisSelection(tuple(int(i) for i in idx), "random", seed=int(seed))


def sample_basis(
    x,
    m: int,
    strategy: str = "fps",
    *,
    seed: int = 0,
    dc_percentile: float = DEFAULT_DC_PERCENTILE,
) -> BasisSelection:
    if strategy == "fps":
        return sample_fps(x, m)
    if strategy == "dpc":
        return sample_dpc(x, m, dc_percentile)
    if strategy == "random":
        return sample_random(x, m, seed)
    raise ValueError(f"unknown sampler {strategy!r}; expected one of {STRATEGIES}")
