"""Independent oracles used by the test suite.

These deliberately avoid the library's solver paths: the dual oracle is a
dense projected-gradient method (FISTA-accelerated, with an exact
bisection projection onto the box-intersect-hyperplane feasible set), the
statistics oracle evaluates the textbook formulas in 50-digit arithmetic,
and the vote oracle enumerates.
"""

import mpmath
import numpy as np

mpmath.mp.dps = 50


def project_feasible(v, C, y):
    """Euclidean projection of v onto {0 <= a <= C, y.a = 0}.

    With y in {+1, -1}, g(lam) = y @ clip(v - lam*y, 0, C) is piecewise
    linear and nonincreasing with breakpoints where a coordinate enters or
    leaves its bound, so the root is found exactly by scanning segments.
    """
    def g(lam):
        return float(y @ np.clip(v - lam * y, 0.0, C))

    bps = np.unique(np.concatenate([
        v[y > 0] - C, v[y > 0], -v[y < 0], C - v[y < 0]]))
    vals = np.array([g(b) for b in bps])
    if vals[0] <= 0.0:
        lam = bps[0]
    elif vals[-1] >= 0.0:
        lam = bps[-1]
    else:
        k = int(np.searchsorted(-vals, 0.0, side="left"))
        # root lies in [bps[k-1], bps[k]] where g is linear
        g0, g1 = vals[k - 1], vals[k]
        lam = bps[k - 1] if g0 == g1 else \
            bps[k - 1] + (bps[k] - bps[k - 1]) * g0 / (g0 - g1)
    return np.clip(v - lam * y, 0.0, C)


def solve_dual_pg(K, y, C, tol=1e-8, max_iter=300_000):
    """Brute-force dual solve: accelerated projected gradient on
    min 1/2 a'Qa - sum(a) with Q = yy' * K, run to a step-norm of ``tol``.

    Returns (alpha, bias) with the bias from free support vectors, or the
    feasible-interval midpoint when none are free.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = K.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    Qs = 0.5 * (Q + Q.T)
    lip = float(np.max(np.abs(np.linalg.eigvalsh(Qs))))
    step = 1.0 / max(lip, 1e-12)

    a = project_feasible(np.zeros(n), C, y)
    z = a.copy()
    t_acc = 1.0
    for _ in range(max_iter):
        g = Qs @ z - 1.0
        a_new = project_feasible(z - step * g, C, y)
        if float(np.max(np.abs(a_new - a))) < tol:
            a = a_new
            break
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        z = a_new + ((t_acc - 1.0) / t_new) * (a_new - a)
        # monotone restart
        if float((a_new - a) @ g) > 0.0:
            z = a_new
            t_new = 1.0
        a = a_new
        t_acc = t_new

    dec = (a * y) @ K
    E = dec - y
    free = (a > 1e-9 * C) & (a < C * (1.0 - 1e-9))
    if free.any():
        bias = float(np.mean(-E[free]))
    else:
        up = ((y > 0) & (a < C * (1 - 1e-9))) | ((y < 0) & (a > 1e-9 * C))
        low = ((y < 0) & (a < C * (1 - 1e-9))) | ((y > 0) & (a > 1e-9 * C))
        lo = np.max(-E[up]) if up.any() else -np.inf
        hi = np.min(-E[low]) if low.any() else np.inf
        if not np.isfinite(lo) and not np.isfinite(hi):
            bias = 0.0
        elif not np.isfinite(lo):
            bias = float(hi)
        elif not np.isfinite(hi):
            bias = float(lo)
        else:
            bias = float(0.5 * (lo + hi))
    return a, bias


def oracle_decision(K_train_probe, alpha, y, bias):
    """Decision values at probe points given the training kernel block."""
    return (alpha * y) @ K_train_probe + bias


def summarize_mp(series):
    """50-digit evaluation of the summary statistics."""
    xs = [mpmath.mpf(repr(float(v))) for v in series]
    n = len(xs)
    mean = mpmath.fsum(xs) / n
    centered = [x - mean for x in xs]
    var = mpmath.fsum(c ** 2 for c in centered) / n
    std = mpmath.sqrt(var)
    if std > 0:
        skew = (mpmath.fsum(c ** 3 for c in centered) / n) / std ** 3
        kurt = (mpmath.fsum(c ** 4 for c in centered) / n) / std ** 4 - 3
    else:
        skew = mpmath.mpf(0)
        kurt = mpmath.mpf(0)

    def pct(q):
        srt = sorted(xs)
        if n == 1:
            return srt[0]
        pos = mpmath.mpf(q) / 100 * (n - 1)
        lo = int(mpmath.floor(pos))
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        return srt[lo] + (srt[hi] - srt[lo]) * frac

    p1 = pct(1)
    p99 = pct(99)
    return {
        "mean": mean, "median": pct(50), "variance": var, "std": std,
        "max": max(xs), "min": min(xs), "p1": p1, "p99": p99,
        "p_range": p99 - p1, "skewness": skew, "kurtosis": kurt,
    }


def percentile_closest_ranks(series, q):
    """Direct float64 reimplementation of the linear-interpolation
    percentile (position q*(N-1) in the sorted series)."""
    srt = sorted(float(v) for v in series)
    n = len(srt)
    if n == 1:
        return srt[0]
    pos = q / 100.0 * (n - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return srt[lo] + (srt[hi] - srt[lo]) * frac


def enumerate_vote(preds, weights, tie=1):
    """Reference weighted sign vote."""
    s = sum(w * p for w, p in zip(weights, preds))
    if s > 0:
        return 1
    if s < 0:
        return -1
    return tie
