"""Regularization sequences for SLOPE.

All generators return sequences designed for unit noise level; multiply by
``sigma`` before fitting when the noise level is known.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.special import erfc

from . import _rng
from .sorted_l1 import check_lambda

# rational approximation coefficients (Acklam) for the initial quantile guess
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_quantile(p):
    # p in (0, 0.5]; returns Phi^{-1}(p) <= 0
    x = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        r = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
        den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
        x[tail] = num / den
    mid = ~tail
    if np.any(mid):
        u = p[mid] - 0.5
        r = u * u
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = num / den
    # one Halley step on the lower-tail probability
    e = 0.5 * erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def inv_norm_cdf(alpha):
    """Standard normal quantile function.

    Accepts scalars or arrays. Upper-tail arguments are mapped to the lower
    tail through ``1 - alpha`` (exact in floating point for ``alpha >= 0.5``)
    so both tails keep full relative accuracy.

    Raises
    ------
    ValueError
        If any ``alpha`` lies outside ``(0, 1)``.
    """
    a = np.asarray(alpha, dtype=float)
    if not np.all((a > 0.0) & (a < 1.0)):
        raise ValueError("alpha must lie strictly inside (0, 1)")
    flat = np.atleast_1d(a).ravel()
    upper = flat > 0.5
    lower = np.where(upper, 1.0 - flat, flat)
    x = _lower_quantile(lower)
    x = np.where(upper, -x, x)
    x[flat == 0.5] = 0.0
    if a.ndim == 0:
        return float(x[0])
    return x.reshape(a.shape)


def norm_isf(tail):
    """``Phi^{-1}(1 - tail)`` computed without forming ``1 - tail``."""
    return -inv_norm_cdf(tail)


def _check_q(q):
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")


def lambda_bh(p, q):
    """Benjamini-Hochberg critical values ``Phi^{-1}(1 - i*q/(2p))``.

    Entries whose level ``1 - i*q/(2p)`` would not exceed one half are set
    to zero; with ``q < 1`` this never happens.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    _check_q(q)
    tail = np.arange(1, p + 1) * q / (2.0 * p)
    out = np.zeros(p)
    pos = tail < 0.5
    out[pos] = norm_isf(tail[pos])
    return out


def lambda_bonferroni(p, alpha):
    """Constant Lasso level ``Phi^{-1}(1 - alpha/(2p))`` repeated ``p`` times."""
    _check_q(alpha)
    return np.full(p, norm_isf(alpha / (2.0 * p)))


class GaussianSequence(NamedTuple):
    raw: np.ndarray
    k_star: int
    sequence: np.ndarray


def lambda_gaussian(p, n, q):
    """Shrinkage-corrected sequence for i.i.d. Gaussian designs.

    The raw sequence starts at the first BH value and inflates each later
    value by ``sqrt(1 + sum_{j<i} raw_j^2 / (n - i))``. It is evaluated
    while ``n - i > 0``; ``k_star`` (1-based) is the first index of its
    global minimum and the returned ``sequence`` holds the raw values up
    to ``k_star`` and stays flat afterwards.

    Returns
    -------
    GaussianSequence
        ``raw`` may be shorter than ``p`` when ``n <= p``.

    Raises
    ------
    ValueError
        When evaluation has to stop before the sequence turns upward, so
        no minimum can be located.
    """
    if n <= 2:
        raise ValueError("n must exceed 2")
    bh = lambda_bh(p, q)
    m = min(p, n - 1)
    raw = np.empty(m)
    total = 0.0
    for i in range(1, m + 1):
        if i == 1:
            raw[0] = bh[0]
        else:
            raw[i - 1] = bh[i - 1] * math.sqrt(1.0 + total / (n - i))
        total += raw[i - 1] ** 2
    k_star = int(np.argmin(raw)) + 1
    if m < p and k_star == m:
        raise ValueError(
            f"lambda_G undefined at index {m + 1} (n - i <= 0) before a minimum was reached")
    seq = np.full(p, raw[k_star - 1])
    seq[:k_star] = raw[:k_star]
    return GaussianSequence(raw, k_star, seq)


def lambda_oscar(p, l1, l2):
    """OSCAR weights ``l1 + (p - i) * l2`` for ``i = 1..p``."""
    if l1 < 0 or l2 < 0:
        raise ValueError("l1 and l2 must be nonnegative")
    if l1 + l2 <= 0:
        raise ValueError("l1 and l2 cannot both be zero")
    return l1 + (p - np.arange(1, p + 1)) * float(l2)


def standardize(X):
    """Center columns and scale them to unit Euclidean norm.

    Returns the standardized matrix, the column means and the column norms
    (after centering).
    """
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    Xc = X - mean
    norms = np.linalg.norm(Xc, axis=0)
    if np.any(norms == 0):
        bad = np.flatnonzero(norms == 0) + 1
        raise ValueError(f"constant columns cannot be standardized: {bad.tolist()}")
    return Xc / norms, mean, norms


class MonteCarloEstimate(NamedTuple):
    index: int
    correction: float
    std_error: float
    draws: int


class MonteCarloSequence(NamedTuple):
    sequence: np.ndarray
    estimates: list
    k_star: int


def default_grid(p, n, size=40):
    """Up to ``size`` log-spaced integer indices from 1 to ``min(p, n//2)``."""
    top = max(1, min(p, n // 2))
    grid = np.unique(np.round(np.geomspace(1, top, size)).astype(int))
    return grid.tolist()


MAX_REDRAWS = 100
_RCOND_MIN = 1e-12


def _mc_correction(X, prefix, draws, seed, index):
    n, p = X.shape
    size = prefix.size
    vals = np.empty(draws)
    for d in range(draws):
        rng = _rng.stream(seed, _rng.LAMBDA, index, d)
        for _ in range(MAX_REDRAWS):
            cols = rng.choice(p, size=size + 1, replace=False)
            XS = X[:, cols[:size]]
            G = XS.T @ XS
            s = np.linalg.svd(G, compute_uv=False)
            if s[-1] > _RCOND_MIN * s[0]:
                break
        else:
            raise np.linalg.LinAlgError(
                f"{MAX_REDRAWS} consecutive singular draws at index {index}")
        coef = np.linalg.solve(G, prefix)
        vals[d] = float(X[:, cols[size]] @ (XS @ coef)) ** 2
    return vals.mean(), vals.std(ddof=1) / math.sqrt(draws) if draws > 1 else 0.0


def lambda_monte_carlo(X, q, draws=1000, grid=None, seed=0, standardized=False):
    """Monte Carlo analogue of the Gaussian correction for an arbitrary design.

    At each grid index ``i`` the correction
    ``E (X_j' X_S (X_S' X_S)^{-1} lambda_{1:i-1})^2`` is averaged over
    ``draws`` random pairs ``(S, j)`` with ``|S| = i - 1`` and ``j`` outside
    ``S``, giving ``lambda_i = lambda_BH(i) * sqrt(1 + correction)``.
    Values between grid points are linearly interpolated. Evaluation stops
    at the first grid point that rises above its predecessor; the sequence
    is flat from that local minimum on (or from the last grid point).

    Parameters
    ----------
    X : ndarray, shape (n, p)
        Design; centered and scaled to unit column norms unless
        ``standardized`` says it already is.
    q : float
        Target FDR level.
    draws : int
        Random ``(S, j)`` pairs per grid point.
    grid : sequence of int, optional
        Sorted 1-based indices starting at 1. Defaults to
        :func:`default_grid`.
    seed : int
        Root of the per-draw random streams.

    Returns
    -------
    MonteCarloSequence
    """
    X = np.asarray(X, dtype=float)
    if not standardized:
        X = standardize(X)[0]
    n, p = X.shape
    if draws < 1:
        raise ValueError("draws must be at least 1")
    grid = default_grid(p, n) if grid is None else [int(g) for g in grid]
    if not grid or grid[0] != 1 or any(b <= a for a, b in zip(grid, grid[1:])) or grid[-1] > p:
        raise ValueError("grid must be strictly increasing, start at 1 and stay within 1..p")
    bh = lambda_bh(p, q)
    known_idx, known_val = [], []
    estimates = []
    k_star = grid[-1]
    for g in grid:
        if g == 1:
            est = MonteCarloEstimate(1, 0.0, 0.0, draws)
        else:
            if g > n - 1:
                raise ValueError(f"grid index {g} leaves no degrees of freedom (n={n})")
            prefix = np.interp(np.arange(1, g), known_idx, known_val)
            # past the last grid point: hold the last correction
            last = known_idx[-1]
            if g - 1 > last:
                tail = np.arange(last + 1, g)
                prefix[last:] = bh[tail - 1] * math.sqrt(1.0 + estimates[-1].correction)
            c, se = _mc_correction(X, prefix, draws, seed, g)
            est = MonteCarloEstimate(g, c, se, draws)
        value = bh[g - 1] * math.sqrt(1.0 + est.correction)
        if known_val and value > known_val[-1]:
            k_star = known_idx[-1]
            break
        estimates.append(est)
        known_idx.append(g)
        known_val.append(value)
    else:
        k_star = known_idx[-1]
    seq = np.full(p, known_val[-1])
    seq[:k_star] = np.interp(np.arange(1, k_star + 1), known_idx, known_val)
    return MonteCarloSequence(check_lambda(seq), estimates, k_star)
