"""
Preferences, scalarization and Pareto fronts
============================================

A preference ``(stability, plasticity)`` lives on the simplex and weights the
replay loss against the new-data loss.
"""

# %%
import numpy as np

from paretocl.moo import MAXIMIZE, ObjectivePoint, mgda_combine, pareto_filter
from paretocl.prefs import (
    PreferencePrior,
    sample_preferences,
    scalarize_linear,
    scalarize_tchebycheff,
    uniform_grid,
)

rng = np.random.default_rng(1)
draws = sample_preferences(PreferencePrior(), rng, 5)
for a in draws:
    print(f"alpha = ({a.stability:.3f}, {a.plasticity:.3f})")

# %% two ways of collapsing (L_replay, L_new) = (0.9, 0.3) to one number
for a in uniform_grid(5):
    lin = scalarize_linear(a, 0.9, 0.3)
    tch = scalarize_tchebycheff(a, 0.9, 0.3, ideal=(0.2, 0.1))
    print(f"{a.stability:.2f}/{a.plasticity:.2f}: linear {lin:.3f}  tchebycheff {tch:.3f}")

# %% a front of (old accuracy, new accuracy) pairs; higher is better
pts = [ObjectivePoint(0.82, 0.40, "a"), ObjectivePoint(0.70, 0.66, "b"),
       ObjectivePoint(0.65, 0.60, "c"), ObjectivePoint(0.45, 0.91, "d")]
print("non-dominated:", [p.tag for p in pareto_filter(pts, MAXIMIZE)])

# %% min-norm direction between two conflicting gradients
g_replay = np.array([1.0, 0.2])
g_new = np.array([-0.6, 1.0])
gamma, d = mgda_combine(g_replay, g_new)
print(f"gamma {gamma:.3f}, d {d.round(3)}, d.g_replay {d @ g_replay:.3f}, d.g_new {d @ g_new:.3f}")
