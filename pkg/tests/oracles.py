"""Pure-Python reference implementations used as independent test oracles.

Nothing here imports the package or numpy linear algebra: loops, lists and
Gaussian elimination only.
"""

import math


def sq_dist(a, b):
    return sum((p - q) ** 2 for p, q in zip(a, b))


def dot(a, b):
    return sum(p * q for p, q in zip(a, b))


def solve(mat, rhs):
    """Gaussian elimination with partial pivoting on a small dense system."""
    n = len(mat)
    aug = [list(map(float, row)) + [float(r)] for row, r in zip(mat, rhs)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if aug[piv][col] == 0:
            raise ZeroDivisionError("singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(col + 1, n):
            f = aug[r][col] / aug[col][col]
            for c in range(col, n + 1):
                aug[r][c] -= f * aug[col][c]
    out = [0.0] * n
    for r in range(n - 1, -1, -1):
        out[r] = (aug[r][n] - sum(aug[r][c] * out[c] for c in range(r + 1, n))) / aug[r][r]
    return out


def lstsq_residual(basis, v):
    """``(coefficients, residual norm)`` of the exact least-squares fit of ``v``."""
    gram = [[dot(a, b) for b in basis] for a in basis]
    coef = solve(gram, [dot(b, v) for b in basis])
    recon = [sum(c * b[j] for c, b in zip(coef, basis)) for j in range(len(v))]
    return coef, math.sqrt(sq_dist(v, recon))


def fps(x, m):
    n, d = len(x), len(x[0])
    centroid = [sum(row[j] for row in x) / n for j in range(d)]
    dists = [sq_dist(row, centroid) for row in x]
    chosen = [max(range(n), key=lambda i: (dists[i], -i))]
    while len(chosen) < m:
        best, best_val = None, -1.0
        for i in range(n):
            if i in chosen:
                continue
            val = min(sq_dist(x[i], x[j]) for j in chosen)
            if val > best_val:
                best, best_val = i, val
        chosen.append(best)
    return chosen


def cosine(a, b):
    na, nb = math.sqrt(dot(a, a)), math.sqrt(dot(b, b))
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return dot(a, b) / (na * nb)


def plan(x, basis, k):
    """``(residuals, retained, groups)`` by exhaustive search, exact solve."""
    n = len(x)
    rows = [x[i] for i in basis]
    residuals = [lstsq_residual(rows, v)[1] for v in x]
    others = sorted((i for i in range(n) if i not in basis), key=lambda i: (-residuals[i], i))
    retained = sorted(list(basis) + others[: k - len(basis)])
    groups = {r: [] for r in retained}
    for i in range(n):
        if i in groups:
            continue
        best = max(retained, key=lambda r: (cosine(x[i], x[r]), -r))
        groups[best].append(i)
    return residuals, retained, [groups[r] for r in retained]


def dpc_gamma(x, dc_percentile):
    """Density-peak ``rho * delta`` by double loops; returns ``None`` if all points coincide."""
    n = len(x)
    d2 = [[sq_dist(a, b) for b in x] for a in x]
    off = sorted(d2[i][j] for i in range(n) for j in range(n) if i != j)
    if off[-1] == 0:
        return None
    pos = (len(off) - 1) * dc_percentile / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, len(off) - 1)
    dc = off[lo] + (off[hi] - off[lo]) * (pos - lo)
    if dc == 0:
        dc = min(v for v in off if v > 0)
    rho = [sum(math.exp(-d2[i][j] / dc) for j in range(n) if j != i) for i in range(n)]
    order = sorted(range(n), key=lambda i: (-rho[i], i))
    delta = [0.0] * n
    delta[order[0]] = max(math.sqrt(v) for v in d2[order[0]])
    for rank in range(1, n):
        i = order[rank]
        delta[i] = min(math.sqrt(d2[i][j]) for j in order[:rank])
    return [r * s for r, s in zip(rho, delta)]
