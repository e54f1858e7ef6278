"""Independent reference computations used by the tests.

None of these call into the stack-based prox.
"""

import itertools

import mpmath
import numpy as np


def sorted_l1_norm_perm(b, lam):
    """Sorted-l1 norm as the maximum of ``sum lam_i |b|_pi(i)`` over all permutations."""
    a = np.abs(np.asarray(b, dtype=float))
    lam = np.asarray(lam, dtype=float)
    return max(float(np.dot(lam, a[list(perm)])) for perm in itertools.permutations(range(a.size)))


def _block_candidates(d, nonneg):
    """All equality-constrained solutions of the monotone QP, one per active set."""
    p = d.size
    nbits = p if nonneg else p - 1
    for mask in range(1 << nbits):
        x = np.empty(p)
        start = 0
        for i in range(p):
            joined = i < p - 1 and (mask >> i) & 1
            if not joined:
                x[start:i + 1] = d[start:i + 1].mean()
                start = i + 1
        if nonneg and (mask >> (p - 1)) & 1:
            # x_p = 0 active: the final block is pinned at zero
            last = p - 1
            while last > 0 and (mask >> (last - 1)) & 1:
                last -= 1
            x[last:] = 0.0
        yield x


def monotone_qp_bruteforce(d, nonneg, slack=1e-12):
    """``argmin 0.5||d - x||^2`` s.t. ``x_1 >= ... >= x_p`` (and ``x_p >= 0``).

    Enumerates every active set of the ordering constraints; the optimum is
    the feasible candidate with smallest objective.
    """
    d = np.asarray(d, dtype=float)
    best, best_val = None, np.inf
    for x in _block_candidates(d, nonneg):
        if np.any(np.diff(x) > slack) or (nonneg and x[-1] < -slack):
            continue
        val = float(np.sum((d - x) ** 2))
        if val < best_val:
            best, best_val = x, val
    return best


def prox_bruteforce(y, lam):
    """Sorted-l1 prox from the exhaustive QP on the sorted absolute values."""
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float)
    a = np.abs(y)
    order = np.argsort(-a, kind="stable")
    xs = monotone_qp_bruteforce(a[order] - lam, nonneg=True)
    x = np.empty_like(xs)
    x[order] = xs
    return np.sign(y) * x


def prox_kkt_violation(y, x, lam):
    """How far ``y - x`` is from the subdifferential of ``J_lam`` at ``x``.

    ``z`` is a subgradient iff it lies in the dual ball
    (``cumsum(sorted |z|) <= cumsum(lam)``) and ``<z, x> = J_lam(x)``.
    Returns the larger of the two violations.
    """
    z = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    ball = np.max(np.cumsum(np.sort(np.abs(z))[::-1]) - np.cumsum(lam))
    j = float(np.dot(lam, np.sort(np.abs(x))[::-1]))
    return max(ball, abs(float(z @ x) - j), 0.0)


def norm_cdf_hp(x, dps=50):
    """High-precision standard normal CDF."""
    with mpmath.workdps(dps):
        return mpmath.ncdf(mpmath.mpf(x))


def norm_quantile_bisect(alpha, tol=1e-15):
    """Quantile by bisection on the high-precision CDF."""
    with mpmath.workdps(50):
        lo, hi = mpmath.mpf(-40), mpmath.mpf(40)
        target = mpmath.mpf(alpha)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if mpmath.ncdf(mid) < target:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def step_up_count(abs_sorted, crit):
    """Largest ``i`` with ``abs_sorted[i-1] >= crit[i-1]`` by direct scan."""
    count = 0
    for i in range(len(abs_sorted)):
        if abs_sorted[i] >= crit[i]:
            count = i + 1
    return count


def step_down_count(abs_sorted, crit):
    """Number of leading ``i`` with ``abs_sorted[i-1] >= crit[i-1]``."""
    count = 0
    for i in range(len(abs_sorted)):
        if abs_sorted[i] < crit[i]:
            break
        count = i + 1
    return count


def random_lambda(rng, p):
    lam = np.sort(rng.exponential(1.0, p))[::-1]
    # ties are the interesting case for the stack merge
    if p > 1 and rng.random() < 0.3:
        lam[rng.integers(p - 1)] = lam[-1]
        lam = np.sort(lam)[::-1]
    return lam
