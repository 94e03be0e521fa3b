"""
One model, many trade-offs
==========================

A single trained hypernetwork can be queried at any preference. Sweeping a grid
after each task traces how old-task and new-task accuracy trade off.
"""

# %%
from paretocl import LearnerKind, TrainConfig, run_experiment, synth_stream, uniform_grid

stream = synth_stream(samples_per_class=300, seed=2)
result = run_experiment(LearnerKind("paretocl"), stream, TrainConfig(seed=2), sweep_grid=uniform_grid(10))

# %%
for sweep in result.fronts:
    print(f"stage {sweep.stage}")
    on_front = {id(p) for p in sweep.front}
    for p in sweep.points:
        mark = "*" if id(p) in on_front else " "
        print(f"  {mark} alpha ({p.tag.stability:.2f}, {p.tag.plasticity:.2f})  A_old {p.v1:.3f}  A_new {p.v2:.3f}")

# %% the same sweep from the command line writes fronts/stage_J.csv
print("paretocl sweep --samples-per-class 300 --seed 2 --out results/sweep")
