"""
Reservoir replay
================

After ``n`` observations every item sits in a capacity-``M`` buffer with
probability ``M / n``.
"""

# %%
import numpy as np

from paretocl.replay import ReplayBuffer

M, n, trials = 3, 10, 20_000
rng = np.random.default_rng(0)
kept = np.zeros(n)
items = np.arange(n, dtype=float)[:, None]
for _ in range(trials):
    buf = ReplayBuffer(M, rng)
    buf.observe_batch(items, np.zeros(n, dtype=int), task_id=0)
    kept[buf.features[:, 0].astype(int)] += 1
print("retention per item:", (kept / trials).round(3), "expected", M / n)

# %% replay minibatches are drawn with replacement
x, y = buf.sample_arrays(8, np.random.default_rng(5))
print("replayed items:", x[:, 0].astype(int))
