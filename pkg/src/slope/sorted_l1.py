"""Sorted-l1 norm, its proximal operator and nonincreasing isotonic regression.

The prox is computed by a stack-based pool-adjacent-violators pass over
``|y| - lambda`` after sorting ``|y|`` in decreasing order. The pass itself
is linear in ``p``: each block is pushed once and merged at most once.
"""

import numpy as np
from numba import njit


def check_lambda(lam, p=None, allow_zero=False):
    """Validate a regularization sequence and return it as a float array.

    Parameters
    ----------
    lam : array_like
        Candidate weights ``lambda_1 >= ... >= lambda_p >= 0``.
    p : int, optional
        Required length.
    allow_zero : bool
        Accept the all-zero sequence (not a norm, but a valid prox weight).

    Raises
    ------
    ValueError
        If the sequence is not one-dimensional, has the wrong length,
        contains non-finite or negative entries, increases anywhere, or is
        identically zero while ``allow_zero`` is false.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("lambda must be a non-empty 1-d sequence")
    if p is not None and lam.size != p:
        raise ValueError(f"lambda has length {lam.size}, expected {p}")
    if not np.all(np.isfinite(lam)):
        raise ValueError("lambda contains NaN or Inf")
    if np.any(lam < 0):
        raise ValueError("lambda must be nonnegative")
    if np.any(np.diff(lam) > 0):
        raise ValueError("lambda must be nonincreasing")
    if not allow_zero and not np.any(lam > 0):
        raise ValueError("lambda must not be identically zero")
    return lam


def _check_vector(y, name="y"):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-d")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains NaN or Inf")
    return y


def sorted_l1_norm(b, lam):
    """Sorted-l1 norm ``sum_i lam[i] * |b|_(i)`` with ``|b|_(1)`` the largest.

    Examples
    --------
    >>> sorted_l1_norm([3.0, 1.0], [2.0, 0.5])
    6.5
    """
    b = np.asarray(b, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if b.shape != lam.shape or b.ndim != 1:
        raise ValueError(f"dimension mismatch: b {b.shape}, lambda {lam.shape}")
    return float(np.dot(lam, np.sort(np.abs(b))[::-1]))


def dual_norm(z, lam):
    """Dual of the sorted-l1 norm: ``max_k cumsum(|z| sorted)_k / cumsum(lam)_k``.

    ``z`` lies in the unit dual ball iff the result is at most one.
    """
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if z.shape != lam.shape:
        raise ValueError(f"dimension mismatch: z {z.shape}, lambda {lam.shape}")
    num = np.cumsum(np.sort(np.abs(z))[::-1])
    den = np.cumsum(lam)
    return float(np.max(num / den))


class ProxWorkspace:
    """Reusable buffers for the stack pass.

    One workspace serves one thread at a time. ``merges`` holds the number
    of block merges performed by the most recent call, which never exceeds
    ``p - 1``.
    """

    def __init__(self, p):
        self.p = int(p)
        self.start = np.empty(self.p, dtype=np.int64)
        self.end = np.empty(self.p, dtype=np.int64)
        self.sums = np.empty(self.p)
        self.levels = np.empty(self.p)
        self.merges = 0

    def ensure(self, p):
        if p > self.p:
            self.__init__(p)
        return self


@njit(cache=True)
def _stack_pava(d, out, start, end, sums, levels, clamp):
    # d is y - lambda (prox) or raw data (isotonic); the fit is nonincreasing
    p = d.shape[0]
    t = -1
    merges = 0
    for k in range(p):
        t += 1
        start[t] = k
        end[t] = k
        sums[t] = d[k]
        levels[t] = max(d[k], 0.0) if clamp else d[k]
        while t > 0 and levels[t - 1] <= levels[t]:
            end[t - 1] = end[t]
            sums[t - 1] += sums[t]
            avg = sums[t - 1] / (end[t - 1] - start[t - 1] + 1)
            levels[t - 1] = max(avg, 0.0) if clamp else avg
            t -= 1
            merges += 1
    for b in range(t + 1):
        for k in range(start[b], end[b] + 1):
            out[k] = levels[b]
    return merges


def _prox_sorted_core(y, lam, ws):
    # y nonincreasing nonnegative; no checks
    p = y.shape[0]
    ws.ensure(p)
    out = np.empty(p)
    ws.merges = _stack_pava(y - lam, out, ws.start, ws.end, ws.sums, ws.levels, True)
    return out


def prox_sorted_l1_sorted_nonneg(y, lam, workspace=None, check=True):
    """Prox of the sorted-l1 norm for a nonincreasing nonnegative input.

    Solves ``min 0.5*||y - x||^2 + sum_i lam[i]*x[i]`` subject to
    ``x_1 >= ... >= x_p >= 0``.

    Parameters
    ----------
    y : array_like
        Nonincreasing, nonnegative data.
    lam : array_like
        Nonincreasing, nonnegative weights of the same length.
    workspace : ProxWorkspace, optional
        Buffers to reuse across calls.
    check : bool
        Verify the ordering preconditions. Hot loops that have already
        normalized their input pass ``False``.
    """
    if check:
        y = _check_vector(y)
        lam = check_lambda(lam, p=y.size, allow_zero=True)
        if np.any(y < 0) or np.any(np.diff(y) > 0):
            raise ValueError("y must be nonincreasing and nonnegative")
    else:
        y = np.asarray(y, dtype=float)
        lam = np.asarray(lam, dtype=float)
    ws = workspace if workspace is not None else ProxWorkspace(y.size)
    return _prox_sorted_core(y, lam, ws)


def prox_sorted_l1(y, lam, workspace=None):
    """Proximal operator of the sorted-l1 norm.

    Returns the unique minimizer of ``0.5*||y - x||^2 + J_lam(x)`` for
    arbitrary signs and orderings of ``y``. The input is reduced to the
    sorted nonnegative case with a stable sort of ``|y|``; signs and order
    are restored afterwards, and entries with ``y_i == 0`` map to ``0``.

    Parameters
    ----------
    y : array_like, shape (p,)
    lam : array_like, shape (p,)
        Nonincreasing, nonnegative weights.
    workspace : ProxWorkspace, optional

    Returns
    -------
    x : ndarray, shape (p,)

    Examples
    --------
    >>> prox_sorted_l1([5.0, -2.0, 0.5], [1.0, 1.0, 1.0]).tolist()
    [4.0, -1.0, 0.0]
    """
    y = _check_vector(y)
    lam = check_lambda(lam, p=y.size, allow_zero=True)
    return _prox_unchecked(y, lam, workspace)


def _prox_unchecked(y, lam, workspace=None):
    a = np.abs(y)
    order = np.argsort(-a, kind="stable")
    ws = workspace if workspace is not None else ProxWorkspace(y.size)
    xs = _prox_sorted_core(a[order], lam, ws)
    x = np.empty_like(xs)
    x[order] = xs
    return np.sign(y) * x


def soft_threshold(y, t):
    """Componentwise ``sign(y) * max(|y| - t, 0)``."""
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


def isotonic_regression(y, workspace=None):
    """Least-squares nonincreasing fit ``x_1 >= x_2 >= ... >= x_p``.

    Pooled blocks take the mean of their data; no sign constraint.

    >>> isotonic_regression([1.0, 3.0]).tolist()
    [2.0, 2.0]
    """
    y = _check_vector(y)
    ws = workspace if workspace is not None else ProxWorkspace(y.size)
    ws.ensure(y.size)
    out = np.empty(y.size)
    ws.merges = _stack_pava(y, out, ws.start, ws.end, ws.sums, ws.levels, False)
    return out
