import json
import math

import numpy as np
import pytest

from slope.inference import (DegenerateFitError, RankDeficientError, bh_step_down, bh_step_up,
                             fdr_threshold_estimate, ols_refit, scaled_slope,
                             slope_orthogonal_select)
from slope.lambdas import lambda_bh, lambda_gaussian, standardize

from oracles import step_down_count, step_up_count


# ---- least-squares refit ----------------------------------------------------------

def test_ols_refit_exact_fit():
    X = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    beta = np.array([2.0, -1.0, 0.0])
    coef, rss = ols_refit(X, X @ beta, [0, 1])
    np.testing.assert_allclose(coef, [2.0, -1.0], atol=1e-12)
    assert rss == pytest.approx(0.0, abs=1e-20)


def test_ols_refit_matches_lstsq_and_orthogonal_residual():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 10))
    y = rng.standard_normal(40)
    S = [1, 4, 7]
    coef, rss = ols_refit(X, y, S)
    ref = np.linalg.lstsq(X[:, S], y, rcond=None)[0]
    np.testing.assert_allclose(coef, ref, rtol=1e-10)
    r = y - X[:, S] @ coef
    np.testing.assert_allclose(X[:, S].T @ r, 0, atol=1e-12)
    assert rss == pytest.approx(r @ r)


def test_ols_refit_empty_support():
    y = np.array([1.0, 2.0, 2.0])
    coef, rss = ols_refit(np.eye(3), y, [])
    assert coef.size == 0 and rss == 9.0


def test_ols_refit_rank_deficient():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((10, 3))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])
    with pytest.raises(RankDeficientError) as err:
        ols_refit(X, rng.standard_normal(10), [0, 1, 3])
    assert len(err.value.columns) == 1
    assert err.value.columns[0] in (0, 1, 3)
    with pytest.raises(DegenerateFitError):
        ols_refit(X, np.ones(10), list(range(4)) * 3)


# ---- BH --------------------------------------------------------------------------

@pytest.mark.parametrize("stats, up, down", [
    # critical values for p=2, q=0.2 are 1.645 and 1.282
    ([1.5, -1.3], 2, 0),
    ([1.7, 1.0], 1, 1),
    ([-2.0, 1.4], 2, 2),
    ([0.5, 0.1], 0, 0),
])
def test_bh_examples(stats, up, down):
    assert bh_step_up(stats, 1.0, 0.2).threshold_index == up
    assert bh_step_down(stats, 1.0, 0.2).threshold_index == down


def test_bh_against_direct_scan():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p = int(rng.integers(1, 60))
        stats = rng.normal(size=p) * rng.choice([1, 3])
        stats[: int(rng.integers(0, p + 1))] += 4
        q = float(rng.uniform(0.01, 0.5))
        z = np.sort(np.abs(stats))[::-1]
        crit = lambda_bh(p, q)
        up = bh_step_up(stats, 1.0, q)
        down = bh_step_down(stats, 1.0, q)
        assert up.threshold_index == step_up_count(z, crit)
        assert down.threshold_index == step_down_count(z, crit)
        # the rejected set is the top |stats|
        if up.threshold_index:
            assert np.min(np.abs(stats[up.rejected])) >= z[up.threshold_index - 1]


def test_bh_scale_invariance():
    rng = np.random.default_rng(3)
    stats = rng.normal(size=100)
    stats[:10] += 5
    a = bh_step_up(stats, 1.0, 0.1)
    b = bh_step_up(3.7 * stats, 3.7, 0.1)
    np.testing.assert_array_equal(a.rejected, b.rejected)


def test_bh_none_rejected():
    rs = bh_step_up(np.zeros(10), 1.0, 0.1)
    assert rs.threshold_index == 0 and rs.rejected.size == 0


def test_bh_input_errors():
    with pytest.raises(ValueError):
        bh_step_up([1.0, np.nan], 1.0, 0.1)
    with pytest.raises(ValueError):
        bh_step_up([1.0, 2.0], 0.0, 0.1)
    with pytest.raises(ValueError):
        slope_orthogonal_select([1.0, np.inf], 1.0, 0.1)


def test_bh_fdr_exact_under_independence():
    rng = np.random.default_rng(4)
    p, p0, q, reps = 200, 180, 0.2, 3000
    fdp = np.empty(reps)
    for r in range(reps):
        stats = rng.standard_normal(p)
        stats[p0:] += 3.0
        rs = bh_step_up(stats, 1.0, q)
        fdp[r] = np.sum(rs.rejected < p0) / max(len(rs), 1)
    se = fdp.std(ddof=1) / math.sqrt(reps)
    assert abs(fdp.mean() - q * p0 / p) <= 3 * se


def test_fdr_threshold_keeps_bh_set():
    rng = np.random.default_rng(5)
    for _ in range(50):
        y = rng.normal(size=80)
        y[:8] += 5
        est = fdr_threshold_estimate(y, 1.0, 0.1)
        rs = bh_step_up(y, 1.0, 0.1)
        np.testing.assert_array_equal(np.flatnonzero(est), rs.rejected)
        np.testing.assert_array_equal(est[rs.rejected], y[rs.rejected])


# ---- orthogonal SLOPE selection -----------------------------------------------------

def test_slope_sandwiched_between_step_down_and_step_up():
    rng = np.random.default_rng(6)
    for _ in range(300):
        p = int(rng.integers(1, 80))
        y = rng.normal(size=p)
        y[: int(rng.integers(0, p + 1))] += rng.uniform(1, 5)
        q = float(rng.uniform(0.02, 0.4))
        z = np.sort(np.abs(y))[::-1]
        crit = lambda_bh(p, q)
        r = len(slope_orthogonal_select(y, 1.0, q))
        assert step_down_count(z, crit) <= r <= step_up_count(z, crit)


# ---- scaled SLOPE -------------------------------------------------------------------

def _design(rng, n, p):
    return standardize(rng.standard_normal((n, p)))[0]


def test_scaled_slope_pure_noise():
    rng = np.random.default_rng(7)
    n, p = 200, 100
    X = _design(rng, n, p)
    y = rng.standard_normal(n)
    res = scaled_slope(X, y, lambda_bh(p, 0.1))
    assert res.converged
    assert res.support.size <= 3
    assert 0.8 < res.sigma_hat < 1.2


def test_scaled_slope_single_strong_column():
    rng = np.random.default_rng(8)
    n, p = 200, 100
    X = _design(rng, n, p)
    y = 10 * X[:, 3] + 0.5 * rng.standard_normal(n)
    res = scaled_slope(X, y, lambda_gaussian(p, n, 0.1).sequence)
    assert res.converged
    assert 3 in res.support
    assert 0.35 < res.sigma_hat < 0.8
    assert res.beta_debiased[3] == pytest.approx(10, abs=0.5)


def test_scaled_slope_sigma_equals_sample_sd_first():
    # with an empty model throughout, sigma_hat is the sample standard deviation
    rng = np.random.default_rng(9)
    X = _design(rng, 50, 20)
    y = 1e-3 * rng.standard_normal(50) + 7.0
    lam = lambda_bh(20, 0.1) * 50
    res = scaled_slope(X, y, lam)
    assert res.support.size == 0
    assert res.sigma_hat == pytest.approx(np.std(y, ddof=1))


def test_scaled_slope_degenerate():
    X = _design(np.random.default_rng(10), 20, 5)
    with pytest.raises(DegenerateFitError):
        scaled_slope(X, np.full(20, 3.0), lambda_bh(5, 0.1))


def test_scaled_slope_max_iters_records_supports():
    rng = np.random.default_rng(11)
    n, p = 100, 50
    X = _design(rng, n, p)
    y = X[:, :5] @ np.full(5, 3.0) + rng.standard_normal(n)
    res = scaled_slope(X, y, lambda_bh(p, 0.1), max_iters=1)
    # the first fit moves away from the empty start, so one pass cannot settle
    assert res.iterations == 1 and not res.converged
    d = res.to_dict()
    assert d["last_supports"][0] == [] and len(d["last_supports"]) == 2


def test_scaled_slope_deterministic_and_json():
    rng = np.random.default_rng(12)
    X = _design(rng, 80, 40)
    y = 4 * X[:, 0] - 4 * X[:, 5] + rng.standard_normal(80)
    a = scaled_slope(X, y, lambda_bh(40, 0.1))
    b = scaled_slope(X, y, lambda_bh(40, 0.1))
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert set(d["support"]) >= {1, 6}
    assert min(d["support"]) >= 1
