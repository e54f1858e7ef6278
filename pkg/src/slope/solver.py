"""Proximal gradient solvers for SLOPE.

Minimizes ``0.5*||y - X b||^2 + J_lambda(b)`` with plain or accelerated
(FISTA) proximal gradient steps. Convergence is declared when the duality
gap, relative to the primal objective, falls below the tolerance and the
fixed-point residual ``||b - prox(b - t X'(Xb - y))||_inf`` (``t = 1/||X||^2``)
is at most ``10 * tol * max(1, ||b||_inf)``.

Matrix-vector products go through numpy/BLAS; with a fixed thread count
their reduction order is fixed, so repeated solves are bitwise identical.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, eigsh

from .sorted_l1 import (ProxWorkspace, _prox_unchecked, check_lambda,
                        dual_norm, sorted_l1_norm)


_DENSE_NORM_MAX = 300


class SolverError(RuntimeError):
    """Raised when the objective becomes non-finite."""

    def __init__(self, iteration, message="non-finite objective"):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SlopeProblem:
    X: np.ndarray
    y: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise ValueError("X must be a non-empty 2-d array")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("X contains NaN or Inf")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError(f"y has shape {self.y.shape}, expected ({self.X.shape[0]},)")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("y contains NaN or Inf")
        self.lam = check_lambda(self.lam, p=self.X.shape[1])

    @property
    def shape(self):
        return self.X.shape

    def objective(self, beta):
        r = self.y - self.X @ beta
        return 0.5 * float(r @ r) + sorted_l1_norm(beta, self.lam)


@dataclass
class SolverConfig:
    """Solver settings.

    ``step_rule`` is ``"backtracking"`` (start at ``step_size`` or
    ``1/||X||^2``, shrink by ``eta``) or ``"fixed"`` (``step_size`` required,
    ``0 < t < 2/||X||^2``). ``acceleration`` is ``"fista"`` or ``"plain"``.
    """

    max_iters: int = 20000
    tol: float = 1e-7
    step_rule: str = "backtracking"
    step_size: float | None = None
    eta: float = 0.5
    acceleration: str = "fista"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.step_rule not in ("backtracking", "fixed"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.acceleration not in ("fista", "plain"):
            raise ValueError(f"unknown acceleration {self.acceleration!r}")
        if self.step_rule == "fixed" and (self.step_size is None or self.step_size <= 0):
            raise ValueError("fixed step rule needs a positive step_size")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")


@dataclass
class SlopeSolution:
    beta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    dual_gap: float
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        self.support = np.flatnonzero(self.beta != 0.0)


def operator_norm_sq(X, tol=0.0):
    """Largest squared singular value of ``X``.

    Small matrices use a dense symmetric eigensolver on the smaller Gram
    matrix; larger ones run Lanczos (ARPACK) from a fixed start vector, so
    the result is reproducible. A zero matrix gives ``0.0``; a Gram matrix
    that overflows gives ``inf``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not np.any(X):
        return 0.0
    m = min(n, p)
    if m <= _DENSE_NORM_MAX:
        with np.errstate(over="ignore"):
            G = X.T @ X if p <= n else X @ X.T
        if not np.all(np.isfinite(G)):
            return np.inf
        return float(scipy.linalg.eigvalsh(G, subset_by_index=[m - 1, m - 1])[0])
    if p <= n:
        op = LinearOperator((p, p), matvec=lambda v: X.T @ (X @ v), dtype=float)
    else:
        op = LinearOperator((n, n), matvec=lambda v: X @ (X.T @ v), dtype=float)
    v0 = 1.0 + np.arange(m) / m
    return float(eigsh(op, k=1, which="LA", v0=v0, tol=tol, return_eigenvectors=False)[0])


def duality_gap(problem, beta):
    """Certified upper bound on ``objective(beta) - optimum``.

    The dual point is the residual ``y - X beta`` shrunk by the smallest
    factor that places ``X' r`` in the unit ball of the dual norm.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.X.shape[1],):
        raise ValueError(f"beta has shape {beta.shape}, expected ({problem.X.shape[1]},)")
    r = problem.y - problem.X @ beta
    return _gap(problem, beta, r, problem.X.T @ r)[0]


def _gap(problem, beta, r, corr):
    primal = 0.5 * float(r @ r) + sorted_l1_norm(beta, problem.lam)
    scale = max(1.0, dual_norm(corr, problem.lam))
    theta = r / scale
    y = problem.y
    d = y - theta
    dual = 0.5 * float(y @ y) - 0.5 * float(d @ d)
    return max(primal - dual, 0.0), primal


def _converged(gap, primal, tol, b, corr, lam, t_fp, ws):
    if gap > tol * max(primal, np.finfo(float).tiny):
        return False
    # the gap alone does not pin down b when X'X is singular
    res = np.max(np.abs(b - _prox_unchecked(b + t_fp * corr, t_fp * lam, ws)), initial=0.0)
    return res <= 10.0 * tol * max(1.0, np.max(np.abs(b), initial=0.0))


def solve(problem, config=None, b0=None, lipschitz=None):
    """Minimize the SLOPE objective.

    Parameters
    ----------
    problem : SlopeProblem
    config : SolverConfig, optional
    b0 : ndarray, optional
        Warm start; zeros by default.
    lipschitz : float, optional
        Precomputed ``||X||^2``, for repeated solves on one design.

    Returns
    -------
    SlopeSolution
    """
    config = config or SolverConfig()
    X, y, lam = problem.X, problem.y, problem.lam
    p = X.shape[1]
    b = np.zeros(p) if b0 is None else np.array(b0, dtype=float)
    if b.shape != (p,):
        raise ValueError(f"b0 has shape {b.shape}, expected ({p},)")

    L = operator_norm_sq(X) if lipschitz is None else float(lipschitz)
    if not np.isfinite(L):
        raise SolverError(0, "operator norm overflows")
    t_fp = 1.0 / L if L > 0 else 1.0
    if config.step_rule == "fixed" and L > 0 and not config.step_size < 2.0 / L:
        raise ValueError(f"fixed step {config.step_size} violates t < 2/||X||^2 = {2.0 / L}")
    t = config.step_size if config.step_size is not None else t_fp
    accelerate = config.acceleration == "fista"
    ws = ProxWorkspace(p)

    Xb = X @ b
    a, Xa = b, Xb
    theta = 1.0
    corr = X.T @ (y - Xb)
    gap, primal = _gap(problem, b, y - Xb, corr)
    if not np.isfinite(primal):
        raise SolverError(0)
    converged = _converged(gap, primal, config.tol, b, corr, lam, t_fp, ws)
    it = 0
    while not converged and it < config.max_iters:
        it += 1
        ra = Xa - y
        fa = 0.5 * float(ra @ ra)
        grad = X.T @ ra
        while True:
            b_new = _prox_unchecked(a - t * grad, t * lam, ws)
            Xb_new = X @ b_new
            rn = Xb_new - y
            f_new = 0.5 * float(rn @ rn)
            if not np.isfinite(f_new):
                raise SolverError(it)
            if config.step_rule == "fixed":
                break
            step = b_new - a
            model = fa + float(grad @ step) + float(step @ step) / (2.0 * t)
            # slack absorbs rounding once the iterates stall
            if f_new - model <= 1e-12 * max(fa, 1.0):
                break
            t *= config.eta
        if accelerate:
            theta_new = 2.0 / (1.0 + np.sqrt(1.0 + 4.0 / theta**2))
            mom = theta_new * (1.0 / theta - 1.0)
            a = b_new + mom * (b_new - b)
            Xa = Xb_new + mom * (Xb_new - Xb)
            theta = theta_new
        else:
            a, Xa = b_new, Xb_new
        b, Xb = b_new, Xb_new
        r = -rn
        corr = X.T @ r
        gap, primal = _gap(problem, b, r, corr)
        if not np.isfinite(primal):
            raise SolverError(it)
        converged = _converged(gap, primal, config.tol, b, corr, lam, t_fp, ws)
    return SlopeSolution(b, problem.objective(b), it, bool(converged), gap)


def solve_proximal_gradient(problem, config=None, b0=None, lipschitz=None):
    """Plain proximal gradient (iterative sorted-l1 thresholding)."""
    config = config or SolverConfig()
    cfg = SolverConfig(**{**config.__dict__, "acceleration": "plain"})
    return solve(problem, cfg, b0, lipschitz)


def solve_fista(problem, config=None, b0=None, lipschitz=None):
    """Accelerated proximal gradient with ``theta_0 = 1``."""
    config = config or SolverConfig()
    cfg = SolverConfig(**{**config.__dict__, "acceleration": "fista"})
    return solve(problem, cfg, b0, lipschitz)


def fixed_point_residual(problem, beta, t=None):
    """``||beta - prox_{tJ}(beta - t X'(X beta - y))||_inf`` with ``t = 1/||X||^2``."""
    X, y, lam = problem.X, problem.y, problem.lam
    if t is None:
        L = operator_norm_sq(X)
        t = 1.0 / L if L > 0 else 1.0
    step = beta - t * (X.T @ (X @ beta - y))
    return float(np.max(np.abs(beta - _prox_unchecked(step, t * lam))))
