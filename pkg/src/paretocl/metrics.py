"""Stage accuracies and the anytime-accuracy summaries built from them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

InferFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StageRecord:
    """Accuracies (fractions) after training on task ``stage`` (1-based)."""

    stage: int
    task_acc: tuple[float, ...]

    @property
    def aa(self) -> float:
        return float(np.mean(self.task_acc))

    @property
    def a_new(self) -> float:
        return self.task_acc[-1]

    @property
    def a_old(self) -> float | None:
        if len(self.task_acc) < 2:
            return None
        return float(np.mean(self.task_acc[:-1]))


def accuracy(pred: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("accuracy of an empty test set is undefined")
    return float(np.mean(np.asarray(pred) == labels))


def evaluate_stage(infer_fn: InferFn, tasks_seen: Sequence, stage: int | None = None) -> StageRecord:
    """Test accuracy of ``infer_fn`` on every task seen so far.

    ``infer_fn`` maps a feature batch to predicted labels.
    """
    if not tasks_seen:
        raise ValueError("evaluate_stage needs at least one task")
    accs = []
    for t in tasks_seen:
        if t.y_test.size == 0:
            raise ValueError(f"task {t.task_id} has an empty test set")
        accs.append(accuracy(infer_fn(t.x_test), t.y_test))
    return StageRecord(stage if stage is not None else len(tasks_seen), tuple(accs))


def compute_aaa(records: Sequence[StageRecord] | Sequence[float]) -> tuple[float, float]:
    """``(AAA, Acc)``: mean of the per-stage average accuracies, and the last one."""
    if len(records) == 0:
        raise ValueError("compute_aaa needs at least one stage")
    aas = [r.aa if isinstance(r, StageRecord) else float(r) for r in records]
    return float(np.mean(aas)), aas[-1]


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0
