"""Reproducible simulation studies of SLOPE's error-rate control.

Scenarios
---------
orthogonal
    ``y ~ N(beta, sigma^2 I)``; SLOPE with ``sigma * lambda_BH`` (one prox)
    against BH step-up.
gaussian_design
    Fresh ``N(0, 1/n)`` design per replicate; SLOPE with a chosen sequence,
    optionally Lasso at the Bonferroni level.
anova
    Multiple testing of means measured in several laboratories; BH on the
    marginal means against SLOPE on the whitened regression.
gwas
    Independent SNP genotypes, scaled SLOPE against BH on marginal t-tests.

Every replicate draws from its own counter-based stream keyed by
``(seed, k, replicate, purpose)``; reports are therefore identical for a
given configuration regardless of ``n_jobs``.
"""

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.stats
from joblib import Parallel, delayed

from . import _rng
from .inference import (RankDeficientError, DegenerateFitError, bh_step_up,
                        fdr_threshold_estimate, ols_refit, scaled_slope)
from .lambdas import (lambda_bh, lambda_bonferroni, lambda_gaussian,
                      lambda_monte_carlo, norm_isf, standardize)
from .solver import SlopeProblem, SolverConfig, solve
from .sorted_l1 import _prox_unchecked

SCENARIOS = ("orthogonal", "gaussian_design", "anova", "gwas")
ERROR_DISTS = ("gaussian", "laplace_unit_var", "contaminated")
COLUMNS = ("scenario", "method", "k", "rep", "R", "V", "FDP", "TPP",
           "relMSE", "relMSE_ols", "sigma_hat", "converged")

# signal size in multiples of sqrt(2 log p) when the config leaves it unset
DEFAULT_MAGNITUDE = {"orthogonal": 5.0, "gaussian_design": 5.0, "gwas": 1.2}


@dataclass
class SimConfig:
    """Description of one simulation study.

    ``signal_magnitude`` is in units of ``sqrt(2 log p)``; ``sigma`` is the
    true noise level; ``sigma_mode`` is ``"known"`` (fit with the true
    ``sigma``) or ``"scaled"`` (estimate it by scaled SLOPE).
    ``sequence_kind`` picks the unit-noise lambda sequence: ``bh``,
    ``gstar``, ``mc`` or ``bonferroni``.
    """

    scenario: str
    n: int = 1000
    p: int = 1000
    k_list: list = field(default_factory=lambda: [0])
    signal_magnitude: float | None = None
    q: float = 0.1
    replicates: int = 200
    seed: int = 0
    sequence_kind: str = "bh"
    sigma: float = 1.0
    sigma_mode: str = "known"
    error_dist: str = "gaussian"
    contamination_fraction: float = 0.01
    contamination_scale: float = 5.0
    methods: list = field(default_factory=list)
    alpha: float | None = None
    dominant: bool = False
    mc_draws: int = 1000
    solver_tol: float = 1e-6
    max_scaled_iters: int = 100

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if any(k < 0 or k > self.p for k in self.k_list):
            raise ValueError("k_list entries must lie in 0..p")
        if not 0 <= self.contamination_fraction <= 1:
            raise ValueError("contamination_fraction must lie in [0, 1]")
        if self.error_dist == "laplace":
            self.error_dist = "laplace_unit_var"
        if self.error_dist not in ERROR_DISTS:
            raise ValueError(f"unknown error_dist {self.error_dist!r}")
        if self.sigma_mode not in ("known", "scaled"):
            raise ValueError("sigma_mode must be 'known' or 'scaled'")
        if self.sequence_kind not in ("bh", "gstar", "mc", "bonferroni"):
            raise ValueError(f"unknown sequence_kind {self.sequence_kind!r}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        self.k_list = [int(k) for k in self.k_list]
        self.methods = list(self.methods)

    @property
    def magnitude(self):
        m = self.signal_magnitude
        if m is None:
            m = DEFAULT_MAGNITUDE.get(self.scenario, 1.0)
        return m * math.sqrt(2.0 * math.log(self.p))


@dataclass
class AnovaConfig:
    """Laboratory-effects testing problem ``y_ij = mu_i + tau_j + z_ij``.

    ``signal`` defaults to ``sqrt(2 log p) / c`` with ``c`` the column norm
    of the whitening matrix.
    """

    p: int = 1000
    labs: int = 5
    sigma_tau2: float = 2.5
    sigma_z2: float = 2.5
    k: int = 0
    variance_mode: str = "known"
    signal: float | None = None

    def __post_init__(self):
        if self.sigma_tau2 < 0 or self.sigma_z2 < 0:
            raise ValueError("variance components must be nonnegative")
        if self.labs < 2:
            raise ValueError("labs must be at least 2")
        if self.variance_mode not in ("known", "estimated"):
            raise ValueError("variance_mode must be 'known' or 'estimated'")
        if not 0 <= self.k <= self.p:
            raise ValueError("k must lie in 0..p")


@dataclass
class SimReport:
    scenario: str
    config: dict
    rows: list = field(default_factory=list)

    def methods(self):
        return sorted({r["method"] for r in self.rows})

    def column(self, name, method, k):
        return np.array([r[name] for r in self.rows if r["method"] == method and r["k"] == k],
                        dtype=float)

    def summary(self):
        """Aggregates per ``(method, k)``: mean FDP with its standard error, power, etc."""
        out = []
        keys = sorted({(r["method"], r["k"]) for r in self.rows})
        for method, k in keys:
            fdp = self.column("FDP", method, k)
            reps = fdp.size
            se = float(fdp.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
            rel = self.column("relMSE", method, k)
            sig = self.column("sigma_hat", method, k)
            out.append({
                "method": method,
                "k": k,
                "replicates": reps,
                "mean_FDP": float(fdp.mean()),
                "se_FDP": se,
                "mean_TPP": float(self.column("TPP", method, k).mean()),
                "mean_R": float(self.column("R", method, k).mean()),
                "frac_FDP_zero": float(np.mean(fdp == 0)),
                "mean_relMSE": _nanmean(rel),
                "mean_relMSE_ols": _nanmean(self.column("relMSE_ols", method, k)),
                "mean_sigma_hat": _nanmean(sig),
                "frac_converged": float(self.column("converged", method, k).mean()),
            })
        return out

    def cell(self, method, k):
        for s in self.summary():
            if s["method"] == method and s["k"] == k:
                return s
        raise KeyError((method, k))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow([_fmt(r[c]) for c in COLUMNS])

    def summary_json(self):
        return json.dumps({"scenario": self.scenario, "config": self.config,
                           "cells": self.summary()}, indent=2, sort_keys=True)


def _nanmean(a):
    a = a[np.isfinite(a)]
    return float(a.mean()) if a.size else None


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else "%.17g" % v
    if isinstance(v, bool):
        return int(v)
    return v


def _row(scenario, method, k, rep, selected, truth, rel=math.nan, rel_ols=math.nan,
         sigma_hat=math.nan, converged=True):
    selected = np.asarray(selected, dtype=int)
    R = int(selected.size)
    tp = int(np.isin(selected, truth).sum())
    V = R - tp
    return {
        "scenario": scenario, "method": method, "k": int(k), "rep": int(rep),
        "R": R, "V": V, "FDP": V / max(R, 1), "TPP": tp / max(int(k), 1),
        "relMSE": float(rel), "relMSE_ols": float(rel_ols),
        "sigma_hat": float(sigma_hat), "converged": bool(converged),
    }


def _rel_mse(mu_hat, mu):
    den = float(mu @ mu)
    if den == 0:
        return math.nan
    d = mu_hat - mu
    return 100.0 * float(d @ d) / den


def draw_errors(rng, size, dist="gaussian", fraction=0.01, scale=5.0):
    """Unit-variance noise: Gaussian, Laplace, or Gaussian with a fraction of ``N(0, scale^2)`` outliers."""
    if dist == "gaussian":
        return rng.standard_normal(size)
    if dist in ("laplace", "laplace_unit_var"):
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)
    if dist == "contaminated":
        z = rng.standard_normal(size)
        m = int(round(fraction * size))
        if m:
            idx = rng.choice(size, m, replace=False)
            z[idx] = scale * rng.standard_normal(m)
        return z
    raise ValueError(f"unknown error distribution {dist!r}")


def _signals(seed, k, rep, p, magnitude):
    rng = _rng.stream(seed, k, rep, _rng.SIGNAL)
    truth = np.sort(rng.choice(p, size=k, replace=False))
    beta = np.zeros(p)
    beta[truth] = magnitude
    return truth, beta


def _run(fn, tasks, n_jobs):
    if n_jobs is None:
        n_jobs = int(os.environ.get("SLOPE_NUM_THREADS", "1"))
    if n_jobs == 1:
        results = [fn(*t) for t in tasks]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(fn)(*t) for t in tasks)
    return [row for rows in results for row in rows]


def _tasks(config):
    return [(k, rep) for k in config.k_list for rep in range(config.replicates)]


# ----------------------------------------------------------------------
# orthogonal design


def _orthogonal_rep(config, k, rep):
    p, sigma = config.p, config.sigma
    truth, beta = _signals(config.seed, k, rep, p, config.magnitude)
    noise = draw_errors(_rng.stream(config.seed, k, rep, _rng.NOISE), p, config.error_dist,
                        config.contamination_fraction, config.contamination_scale)
    y = beta + sigma * noise
    lam = sigma * lambda_bh(p, config.q)
    fit = _prox_unchecked(y, lam)
    rows = [_row("orthogonal", "slope", k, rep, np.flatnonzero(fit), truth,
                 rel=_rel_mse(fit, beta))]
    bh = bh_step_up(y, sigma, config.q)
    rows.append(_row("orthogonal", "bh", k, rep, bh.rejected, truth,
                     rel=_rel_mse(fdr_threshold_estimate(y, sigma, config.q), beta)))
    return rows


def run_orthogonal_fdr(config, n_jobs=1):
    """Orthogonal-design study: SLOPE (``method='slope'``) and BH (``method='bh'``) per replicate."""
    if config.scenario != "orthogonal":
        raise ValueError("config.scenario must be 'orthogonal'")
    rows = _run(_orthogonal_rep, [(config, k, rep) for k, rep in _tasks(config)], n_jobs)
    return SimReport("orthogonal", asdict(config), rows)


# ----------------------------------------------------------------------
# Gaussian design


def unit_sequence(kind, p, n, q, X=None, alpha=None, draws=1000, seed=0):
    """Unit-noise lambda sequence of the given kind for a ``p``-column design."""
    if kind == "bh":
        return lambda_bh(p, q)
    if kind == "gstar":
        return lambda_gaussian(p, n, q).sequence
    if kind == "bonferroni":
        return lambda_bonferroni(p, alpha if alpha is not None else q)
    if kind == "mc":
        if X is None:
            raise ValueError("the Monte Carlo sequence needs a design matrix")
        return lambda_monte_carlo(X, q, draws=draws, seed=seed).sequence
    raise ValueError(f"unknown sequence kind {kind!r}")


def _fit_and_score(scenario, method, k, rep, X, y, lam, sigma_mode, sigma, truth, mu,
                   solver_cfg, max_scaled_iters):
    if sigma_mode == "scaled":
        res = scaled_slope(X, y, lam, max_iters=max_scaled_iters, config=solver_cfg, center=False)
        beta_hat, sigma_hat, conv = res.beta, res.sigma_hat, res.converged
    else:
        sol = solve(SlopeProblem(X, y, sigma * lam), solver_cfg)
        beta_hat, sigma_hat, conv = sol.beta, math.nan, sol.converged
    support = np.flatnonzero(beta_hat)
    rel_ols = math.nan
    if support.size < X.shape[0]:
        try:
            coef, _ = ols_refit(X, y, support)
            rel_ols = _rel_mse(X[:, support] @ coef, mu)
        except (RankDeficientError, DegenerateFitError):
            pass
    return _row(scenario, method, k, rep, support, truth, rel=_rel_mse(X @ beta_hat, mu),
                rel_ols=rel_ols, sigma_hat=sigma_hat, converged=conv)


def _gaussian_rep(config, k, rep, lam, lam_bonf):
    n, p = config.n, config.p
    X = _rng.stream(config.seed, k, rep, _rng.DESIGN).standard_normal((n, p)) / math.sqrt(n)
    truth, beta = _signals(config.seed, k, rep, p, config.magnitude)
    noise = draw_errors(_rng.stream(config.seed, k, rep, _rng.NOISE), n, config.error_dist,
                        config.contamination_fraction, config.contamination_scale)
    y = X @ beta + config.sigma * noise
    if config.sigma_mode == "scaled":
        X, _, norms = standardize(X)
        beta = beta * norms
        y = y - y.mean()
    mu = X @ beta
    cfg = SolverConfig(tol=config.solver_tol)
    rows = [_fit_and_score("gaussian_design", "slope", k, rep, X, y, lam, config.sigma_mode,
                           config.sigma, truth, mu, cfg, config.max_scaled_iters)]
    if "lasso_bonf" in config.methods:
        rows.append(_fit_and_score("gaussian_design", "lasso_bonf", k, rep, X, y, lam_bonf,
                                   config.sigma_mode, config.sigma, truth, mu, cfg,
                                   config.max_scaled_iters))
    return rows


def run_gaussian_design(config, n_jobs=1):
    """Gaussian-design study with a fresh ``N(0, 1/n)`` design per replicate.

    The SLOPE fit is recorded as ``method='slope'``; adding ``"lasso_bonf"``
    to ``config.methods`` also fits the Lasso at ``Phi^{-1}(1 - alpha/2p)``.
    The Monte Carlo sequence, when requested, is estimated once on an
    independent reference design.
    """
    if config.scenario != "gaussian_design":
        raise ValueError("config.scenario must be 'gaussian_design'")
    ref = None
    if config.sequence_kind == "mc":
        rng = _rng.stream(config.seed, 0, 0, _rng.LAMBDA)
        ref = rng.standard_normal((config.n, config.p)) / math.sqrt(config.n)
    lam = unit_sequence(config.sequence_kind, config.p, config.n, config.q, X=ref,
                        alpha=config.alpha, draws=config.mc_draws, seed=config.seed)
    lam_bonf = lambda_bonferroni(config.p, config.alpha if config.alpha is not None else config.q)
    tasks = [(config, k, rep, lam, lam_bonf) for k, rep in _tasks(config)]
    return SimReport("gaussian_design", asdict(config), _run(_gaussian_rep, tasks, n_jobs))


# ----------------------------------------------------------------------
# ANOVA-style multiple testing


def equicorrelated_inv_sqrt(p, sigma2, rho):
    """Inverse square root of ``(sigma2 - rho) I + rho J`` in closed form.

    The matrix has eigenvalue ``sigma2 - rho`` (multiplicity ``p - 1``) and
    ``sigma2 + (p - 1) rho`` along the all-ones direction, so its inverse
    square root is ``a I + b J`` with ``a = (sigma2 - rho)^{-1/2}`` and
    ``b = ((sigma2 + (p-1) rho)^{-1/2} - a) / p``.
    """
    small = sigma2 - rho
    big = sigma2 + (p - 1) * rho
    if small <= 0 or big <= 0:
        raise ValueError("covariance is not positive definite")
    a = small ** -0.5
    b = (big ** -0.5 - a) / p
    return a * np.eye(p) + b


def anova_variance_components(Y):
    """Unweighted-means estimates ``(sigma_tau^2, sigma_z^2)`` for a ``p x labs`` table.

    ``sigma_z^2 = MSE`` and ``sigma_tau^2 = (MS_tau - MSE) / p``, clamped at 0.
    """
    p, labs = Y.shape
    grand = Y.mean()
    rows = Y.mean(axis=1, keepdims=True)
    cols = Y.mean(axis=0, keepdims=True)
    ms_tau = p * float(((cols - grand) ** 2).sum()) / (labs - 1)
    resid = Y - rows - cols + grand
    mse = float((resid ** 2).sum()) / ((p - 1) * (labs - 1))
    return max((ms_tau - mse) / p, 0.0), mse


def _anova_rep(acfg, q, seed, rep, signal):
    p, labs = acfg.p, acfg.labs
    truth, mu = _signals(seed, acfg.k, rep, p, signal)
    rng = _rng.stream(seed, acfg.k, rep, _rng.NOISE)
    tau = math.sqrt(acfg.sigma_tau2) * rng.standard_normal(labs)
    z = math.sqrt(acfg.sigma_z2) * rng.standard_normal((p, labs))
    Y = mu[:, None] + tau[None, :] + z
    ybar = Y.mean(axis=1)
    if acfg.variance_mode == "known":
        s_tau2, s_z2 = acfg.sigma_tau2, acfg.sigma_z2
    else:
        s_tau2, s_z2 = anova_variance_components(Y)
    sigma2 = (s_tau2 + s_z2) / labs
    rho = s_tau2 / labs
    k = acfg.k
    rows = []

    bh = bh_step_up(ybar, math.sqrt(sigma2), q)
    rows.append(_row("anova", "bh", k, rep, bh.rejected, truth))

    W = equicorrelated_inv_sqrt(p, sigma2, rho)
    yt = W @ ybar
    yt -= yt.mean()
    X, _, _ = standardize(W)
    sol = solve(SlopeProblem(X, yt, lambda_bh(p, q)), SolverConfig(tol=1e-6))
    rows.append(_row("anova", "slope", k, rep, sol.support, truth, converged=sol.converged))
    return rows


def run_anova_testing(config, q, replicates, seed, n_jobs=1):
    """Laboratory-effects study: BH on marginal means vs SLOPE after whitening.

    Returns a report with methods ``bh`` and ``slope`` for ``k = config.k``.
    """
    signal = config.signal
    if signal is None:
        W = equicorrelated_inv_sqrt(config.p, (config.sigma_tau2 + config.sigma_z2) / config.labs,
                                    config.sigma_tau2 / config.labs)
        signal = math.sqrt(2 * math.log(config.p)) / float(np.linalg.norm(W[:, 0]))
    tasks = [(config, q, seed, rep, signal) for rep in range(replicates)]
    meta = asdict(config) | {"q": q, "replicates": replicates, "seed": seed, "signal": signal}
    return SimReport("anova", meta, _run(_anova_rep, tasks, n_jobs))


# ----------------------------------------------------------------------
# idealized GWAS


def simulate_genotypes(rng, n, p, maf_range=(0.1, 0.5)):
    """Additive and dominance codings of independent SNPs under Hardy-Weinberg.

    Minor-allele counts are ``Binomial(2, f)`` with ``f ~ U(maf_range)``.
    Additive coding: ``-1`` for aa, ``0`` for aA, ``1`` for AA. Dominance
    coding: ``-1`` for aa or AA, ``1`` for aA. Monomorphic columns are
    redrawn.
    """
    maf = rng.uniform(*maf_range, size=p)
    counts = rng.binomial(2, maf, size=(n, p))
    while True:
        flat = np.flatnonzero(np.ptp(counts, axis=0) == 0)
        if flat.size == 0:
            break
        counts[:, flat] = rng.binomial(2, maf[flat], size=(n, flat.size))
    additive = 1.0 - counts
    dominant = np.where(counts == 1, 1.0, -1.0)
    return additive, dominant, maf


def marginal_z(X, y):
    """Normal scores equivalent to simple-regression t statistics.

    ``X`` has centered unit-norm columns and ``y`` is centered, so
    ``beta_i = x_i'y``, ``RSS_i = ||y||^2 - beta_i^2`` and
    ``t_i = beta_i / sqrt(RSS_i / (n - 2))``. Two-sided t p-values are
    mapped back to ``|z|`` so normal-quantile BH applies.
    """
    n = X.shape[0]
    b = X.T @ y
    rss = np.maximum(float(y @ y) - b * b, np.finfo(float).tiny)
    t = b / np.sqrt(rss / (n - 2))
    pval = 2.0 * scipy.stats.t.sf(np.abs(t), n - 2)
    pval = np.clip(pval, 1e-300, 1.0 - 1e-16)
    return norm_isf(pval / 2.0)


def _gwas_rep(config, k, rep, X, Z, lam):
    n, p = X.shape
    truth, beta = _signals(config.seed, k, rep, p, config.magnitude)
    rng = _rng.stream(config.seed, k, rep, _rng.NOISE)
    y = X @ beta + config.sigma * draw_errors(rng, n, config.error_dist,
                                              config.contamination_fraction,
                                              config.contamination_scale)
    if Z is not None and k:
        gamma = np.zeros(p)
        extra = _rng.stream(config.seed, k, rep, _rng.EXTRA)
        gamma[truth] = extra.normal(0.0, 2.0 * math.sqrt(2.0 * math.log(p)), size=k)
        y += Z @ gamma
    y = y - y.mean()
    mu = X @ beta
    cfg = SolverConfig(tol=config.solver_tol)
    rows = [_fit_and_score("gwas", "slope", k, rep, X, y, lam, config.sigma_mode, config.sigma,
                           truth, mu, cfg, config.max_scaled_iters)]
    bh = bh_step_up(marginal_z(X, y), 1.0, config.q)
    rows.append(_row("gwas", "marginal_bh", k, rep, bh.rejected, truth))
    return rows


def run_gwas_sim(config, n_jobs=1):
    """Idealized GWAS study.

    One genotype design (standardized) is drawn per study; each replicate
    places ``k`` causal SNPs at random with effect ``config.magnitude``,
    centers the trait and records scaled (or known-sigma) SLOPE as
    ``method='slope'`` and BH on marginal t-tests as ``method='marginal_bh'``.
    ``config.dominant`` adds dominance effects ``N(0, (2 sqrt(2 log p))^2)``
    on the causal SNPs that the fitted additive model ignores.
    """
    if config.scenario != "gwas":
        raise ValueError("config.scenario must be 'gwas'")
    rng = _rng.stream(config.seed, 0, 0, _rng.DESIGN)
    additive, dominant, _ = simulate_genotypes(rng, config.n, config.p)
    X = standardize(additive)[0]
    Z = standardize(dominant)[0] if config.dominant else None
    lam = unit_sequence(config.sequence_kind, config.p, config.n, config.q, X=X,
                        alpha=config.alpha, draws=config.mc_draws, seed=config.seed)
    tasks = [(config, k, rep, X, Z, lam) for k, rep in _tasks(config)]
    return SimReport("gwas", asdict(config), _run(_gwas_rep, tasks, n_jobs))


def run(config, n_jobs=1):
    """Dispatch a :class:`SimConfig` to its scenario runner."""
    runners = {"orthogonal": run_orthogonal_fdr, "gaussian_design": run_gaussian_design,
               "gwas": run_gwas_sim}
    if config.scenario not in runners:
        raise ValueError("use run_anova_testing for the anova scenario")
    return runners[config.scenario](config, n_jobs=n_jobs)
