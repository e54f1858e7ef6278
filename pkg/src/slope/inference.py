"""Selection and testing procedures built on the SLOPE solver.

Scaled SLOPE for unknown noise level, least-squares refitting on a selected
support, Benjamini-Hochberg step-up (and its step-down cousin), FDR
thresholding and SLOPE selection for orthogonal designs.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .lambdas import lambda_bh
from .solver import SlopeProblem, SolverConfig, operator_norm_sq, solve
from .sorted_l1 import _prox_unchecked, check_lambda


class DegenerateFitError(ValueError):
    """The fit cannot proceed (zero-variance response or too large a support)."""


class RankDeficientError(ValueError):
    """Selected columns are linearly dependent."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"linearly dependent columns (0-based): {self.columns}")


@dataclass
class RejectionSet:
    rejected: np.ndarray
    threshold_index: int
    statistic_scale: float

    def __len__(self):
        return int(self.rejected.size)


@dataclass
class ScaledSlopeResult:
    beta: np.ndarray
    beta_debiased: np.ndarray
    sigma_hat: float
    iterations: int
    converged: bool
    support: np.ndarray = field(init=False)
    last_supports: tuple = ()

    def __post_init__(self):
        self.support = np.flatnonzero(self.beta != 0.0)

    def to_dict(self):
        """JSON-ready summary; support indices are 1-based."""
        out = {
            "support": (self.support + 1).tolist(),
            "beta": self.beta.tolist(),
            "beta_debiased": self.beta_debiased.tolist(),
            "sigma_hat": self.sigma_hat,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        if not self.converged:
            out["last_supports"] = [(np.asarray(s) + 1).tolist() for s in self.last_supports]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def ols_refit(X, y, support):
    """Least-squares fit of ``y`` on the columns of ``X`` listed in ``support``.

    No intercept is fitted; center ``y`` and the columns beforehand when one
    is wanted. An empty support returns an empty coefficient vector and
    ``rss = ||y||^2``.

    Returns
    -------
    coef : ndarray, shape (len(support),)
    rss : float

    Raises
    ------
    RankDeficientError
        If the selected columns are linearly dependent (as judged by a
        column-pivoted QR); the error lists the offending columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        return np.empty(0), float(y @ y)
    if support.size >= X.shape[0]:
        raise DegenerateFitError(f"support of size {support.size} needs more than n={X.shape[0]} rows")
    XS = X[:, support]
    Q, R, piv = scipy.linalg.qr(XS, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(XS.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol))
    if rank < support.size:
        raise RankDeficientError(support[piv[rank:]].tolist())
    qty = Q.T @ y
    coef = np.empty(support.size)
    coef[piv] = scipy.linalg.solve_triangular(R, qty)
    resid = y - XS @ coef
    return coef, float(resid @ resid)


def scaled_slope(X, y, lambda_unit, max_iters=100, config=None, center=True):
    """SLOPE with the noise level estimated alongside the support.

    Starting from the empty model, repeat: estimate
    ``sigma^2 = RSS / (n - |S| - 1)`` from a least-squares fit on the
    current support ``S`` (for the empty model this is the sample variance
    of ``y``), refit SLOPE with ``sigma * lambda_unit`` and take its support
    as the next ``S``. Stop once the support repeats.

    Parameters
    ----------
    X : ndarray, shape (n, p)
        Design with centered, unit-norm columns.
    y : ndarray, shape (n,)
    lambda_unit : array_like
        Sequence calibrated for unit noise level.
    max_iters : int
        Cap on support updates; hitting it returns ``converged=False`` with
        the last two supports recorded.
    config : SolverConfig, optional
    center : bool
        Subtract the mean of ``y`` first.

    Returns
    -------
    ScaledSlopeResult
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    lam = check_lambda(lambda_unit, p=p)
    if center:
        y = y - y.mean()
    if float(np.std(y)) == 0.0:
        raise DegenerateFitError("response has zero variance")
    config = config or SolverConfig()

    support = np.empty(0, dtype=int)
    beta = np.zeros(p)
    history = []
    L = operator_norm_sq(X)
    for it in range(1, max_iters + 1):
        if support.size >= n - 1:
            raise DegenerateFitError(f"support size {support.size} leaves no residual degrees of freedom")
        _, rss = ols_refit(X, y, support)
        sigma = np.sqrt(rss / (n - support.size - 1))
        if sigma == 0.0:
            raise DegenerateFitError("perfect fit on the current support")
        sol = solve(SlopeProblem(X, y, sigma * lam), config, b0=beta, lipschitz=L)
        beta = sol.beta
        new_support = sol.support
        history.append(support)
        if np.array_equal(new_support, support):
            converged = True
            break
        support = new_support
    else:
        converged = False
        history.append(support)
    debiased = np.zeros(p)
    if support.size:
        debiased[support] = ols_refit(X, y, support)[0]
    return ScaledSlopeResult(beta, debiased, float(sigma), it, converged,
                             last_supports=tuple(history[-2:]))


def _sorted_stats(statistics, sigma):
    stats = np.asarray(statistics, dtype=float)
    if not np.all(np.isfinite(stats)):
        raise ValueError("statistics must be finite")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    order = np.argsort(-np.abs(stats), kind="stable")
    return np.abs(stats)[order] / sigma, order


def bh_step_up(statistics, sigma, q):
    """Benjamini-Hochberg step-up on two-sided z statistics.

    Rejects the ``i_BH`` largest ``|statistic|`` values, where ``i_BH`` is
    the last ``i`` with ``|stat|_(i)/sigma >= Phi^{-1}(1 - i*q/(2p))``
    (zero when there is none).
    """
    z, order = _sorted_stats(statistics, sigma)
    crit = lambda_bh(z.size, q)
    hits = np.flatnonzero(z >= crit)
    k = int(hits[-1]) + 1 if hits.size else 0
    return RejectionSet(np.sort(order[:k]), k, float(sigma))


def bh_step_down(statistics, sigma, q):
    """Step-down counterpart: reject until the first ``i`` with ``|stat|_(i)/sigma`` below its critical value."""
    z, order = _sorted_stats(statistics, sigma)
    crit = lambda_bh(z.size, q)
    miss = np.flatnonzero(z < crit)
    k = int(miss[0]) if miss.size else z.size
    return RejectionSet(np.sort(order[:k]), k, float(sigma))


def fdr_threshold_estimate(y_tilde, sigma, q):
    """Hard thresholding at ``|y|_(i_BH)``; all zeros when BH rejects nothing."""
    y_tilde = np.asarray(y_tilde, dtype=float)
    rs = bh_step_up(y_tilde, sigma, q)
    out = np.zeros_like(y_tilde)
    if rs.threshold_index == 0:
        return out
    t = np.sort(np.abs(y_tilde))[::-1][rs.threshold_index - 1]
    keep = np.abs(y_tilde) >= t
    out[keep] = y_tilde[keep]
    return out


def slope_orthogonal_select(y_tilde, sigma, q):
    """SLOPE selection for an orthogonal design: nonzeros of ``prox(y, sigma*lambda_BH)``."""
    y_tilde = np.asarray(y_tilde, dtype=float)
    if not np.all(np.isfinite(y_tilde)):
        raise ValueError("statistics must be finite")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = _prox_unchecked(y_tilde, sigma * lambda_bh(y_tilde.size, q))
    rejected = np.flatnonzero(x != 0.0)
    return RejectionSet(rejected, int(rejected.size), float(sigma))
