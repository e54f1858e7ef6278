"""
The sorted-l1 norm and its prox
===============================

A tour of the penalty and the stack-based prox that every solver step calls.
"""

# %%
import time

import numpy as np

from slope import prox_sorted_l1, soft_threshold, sorted_l1_norm
from slope.lambdas import lambda_bh

# %% [markdown]
# The norm pairs the largest weight with the largest magnitude.

# %%
b = np.array([1.0, -2.0, 3.0])
print(sorted_l1_norm(b, [3.0, 2.0, 1.0]))   # 3*3 + 2*2 + 1*1 = 14
print(sorted_l1_norm(b, [1.0, 1.0, 1.0]))   # plain l1

# %% [markdown]
# With a constant weight the prox is soft thresholding. With decreasing
# weights, nearby magnitudes get pulled onto a common value.

# %%
y = np.array([4.0, 3.9, -0.5, 2.0])
print(soft_threshold(y, 1.0))
print(prox_sorted_l1(y, np.full(4, 1.0)))
print(prox_sorted_l1(y, [2.0, 1.5, 1.0, 0.5]))

# %% [markdown]
# Cost after sorting is linear. Time the prox on sorted input at two sizes.

# %%
from slope import prox_sorted_l1_sorted_nonneg

rng = np.random.default_rng(0)
for p in (10 ** 4, 10 ** 5, 10 ** 6):
    a = np.sort(np.abs(rng.standard_normal(p)))[::-1]
    lam = lambda_bh(p, 0.1)
    prox_sorted_l1_sorted_nonneg(a, lam, check=False)
    t0 = time.perf_counter()
    prox_sorted_l1_sorted_nonneg(a, lam, check=False)
    print(f"p={p:>8d}  {1e3 * (time.perf_counter() - t0):7.2f} ms")
