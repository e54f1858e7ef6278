"""
Weights for Gaussian designs
============================

Under a random Gaussian design, the BH weights shrink too fast once many
signals enter, and the FDR drifts above q. The corrected sequence inflates
the later weights and holds them flat past the point where the inflation
would make them grow.
"""

# %%
import numpy as np

from slope.lambdas import lambda_bh, lambda_gaussian, lambda_monte_carlo
from slope.simlab import SimConfig, run

# %%
for p, n in ((10000, 5000), (2500, 5000), (2000, 1000), (500, 250)):
    for q in (0.05, 0.1):
        print(f"p={p:5d} n={n:5d} q={q:.2f}  k*={lambda_gaussian(p, n, q).k_star}")

# %%
g = lambda_gaussian(2000, 1000, 0.1)
bh = lambda_bh(2000, 0.1)
for i in (1, 5, 10, g.k_star, 50, 200):
    print(f"i={i:4d}  bh={bh[i - 1]:.3f}  gstar={g.sequence[i - 1]:.3f}")

# %% [markdown]
# The Monte Carlo estimate works from the design itself and should agree
# with the Gaussian formula on a Gaussian design.

# %%
rng = np.random.default_rng(0)
X = rng.standard_normal((1000, 1000)) / np.sqrt(1000)
mc = lambda_monte_carlo(X, 0.1, draws=300, seed=1)
ref = lambda_gaussian(1000, 1000, 0.1)
print("k* (Monte Carlo, Gaussian):", mc.k_star, ref.k_star)
for e in mc.estimates[1:6]:
    print(e.index, round(mc.sequence[e.index - 1], 4), round(ref.sequence[e.index - 1], 4))

# %% [markdown]
# FDR at n=1000, p=2000 for both sequences (small replicate count).

# %%
for kind in ("bh", "gstar"):
    rep = run(SimConfig("gaussian_design", n=1000, p=2000, k_list=[5, 20, 50], q=0.1,
                        replicates=20, seed=2, sequence_kind=kind))
    print(kind, [(c["k"], round(c["mean_FDP"], 3)) for c in rep.summary()])
