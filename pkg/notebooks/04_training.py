"""
Training on a class-incremental stream
======================================

Five tasks of two classes each arrive one after another. We compare the
preference-conditioned learner with experience replay at a fixed trade-off,
on the same stream and seed.
"""

# %%
from paretocl import LearnerKind, TrainConfig, run_experiment, synth_stream

stream = synth_stream(samples_per_class=300, seed=0)
cfg = TrainConfig(seed=0)
print(stream.num_tasks, "tasks,", stream.total_classes, "classes")

# %%
runs = {}
for label in ["paretocl", "paretocl_static", "er_fixed(0.5)", "mgda"]:
    runs[label] = run_experiment(LearnerKind.parse(label), stream, cfg)
    r = runs[label]
    print(f"{label:16s} AAA {100 * r.aaa:5.1f}  Acc {100 * r.acc:5.1f}")

# %% per-task accuracy after the last task: old tasks fade without replay weight
for label, r in runs.items():
    print(f"{label:16s}", " ".join(f"{a:.2f}" for a in r.stages[-1].task_acc))

# %% which preferences does entropy selection pick at test time?
import numpy as np

from paretocl.learner import paretocl_infer

x = np.concatenate([t.x_test for t in stream.tasks])
res = paretocl_infer(runs["paretocl"].model, x, cfg, np.random.default_rng(0))
print("chosen stability weight, quartiles:", np.percentile(res.alphas[:, 0], [25, 50, 75]).round(2))
