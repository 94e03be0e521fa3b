"""Preference-conditioned experience replay for class-incremental learning."""
from .learner import LearnerKind, TrainConfig, paretocl_infer, paretocl_train_step
from .experiment import RunResult, run_experiment, sweep_front
from .prefs import PreferencePrior, PreferenceVector, uniform_grid
from .stream import load_tabular, synth_stream

__version__ = "0.1.0"

__all__ = [
    "LearnerKind",
    "PreferencePrior",
    "PreferenceVector",
    "RunResult",
    "TrainConfig",
    "load_tabular",
    "paretocl_infer",
    "paretocl_train_step",
    "run_experiment",
    "sweep_front",
    "synth_stream",
    "uniform_grid",
]
