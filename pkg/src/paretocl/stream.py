"""Class-incremental task streams: synthetic rings of Gaussians and CSV ingestion.

Tabular format: a header line, then one row per example,
``feature_1,...,feature_d,label``. Features are parsed with ``float()``;
labels must be integers. Synthetic streams written by :func:`write_tabular`
use ``repr`` for features, which round-trips float64 exactly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .io import atomic_write_text
from .seeding import named_rng

ONLINE = "online"
OFFLINE = "offline"
TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class Task:
    task_id: int
    classes: tuple[int, ...]
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    # row ids into the source data, used for split-integrity checks
    train_ids: np.ndarray
    test_ids: np.ndarray


@dataclass(frozen=True)
class TaskStream:
    tasks: tuple[Task, ...]
    total_classes: int
    in_dim: int
    setting: str = ONLINE

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def with_setting(self, setting: str) -> "TaskStream":
        if setting not in (ONLINE, OFFLINE):
            raise ValueError(f"setting must be {ONLINE!r} or {OFFLINE!r}, got {setting!r}")
        return TaskStream(self.tasks, self.total_classes, self.in_dim, setting)


def _split_tasks(x, y, ids, num_tasks, rng, setting) -> TaskStream:
    classes = np.unique(y)
    if classes.size % num_tasks:
        raise ValueError(f"{classes.size} classes cannot be split evenly into {num_tasks} tasks")
    per = classes.size // num_tasks
    tasks = []
    for t in range(num_tasks):
        group = classes[t * per : (t + 1) * per]
        tr, te = [], []
        for c in group:
            rows = np.flatnonzero(y == c)
            rows = rows[rng.permutation(rows.size)]
            n_train = int(round(TRAIN_FRACTION * rows.size))
            tr.append(rows[:n_train])
            te.append(rows[n_train:])
        tr = np.sort(np.concatenate(tr))
        te = np.sort(np.concatenate(te))
        tasks.append(
            Task(t, tuple(int(c) for c in group), x[tr], y[tr], x[te], y[te], ids[tr], ids[te])
        )
    return TaskStream(tuple(tasks), int(classes.size), int(x.shape[1]), setting)


def synth_stream(
    num_tasks: int = 5,
    classes_per_task: int = 2,
    samples_per_class: int = 1000,
    in_dim: int = 8,
    spread: float = 0.8,
    seed: int = 0,
    *,
    radius: float = 3.0,
    setting: str = ONLINE,
) -> TaskStream:
    """Gaussian blobs whose centers sit on a ring in the first two dimensions.

    Each class gets a seed-shuffled, jittered slot on the ring; the remaining
    dimensions are isotropic noise with the same ``spread``.
    """
    n_classes = num_tasks * classes_per_task
    if num_tasks < 1 or classes_per_task < 1 or n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_tasks} tasks x {classes_per_task}")
    if samples_per_class < 2 or in_dim < 2:
        raise ValueError("samples_per_class and in_dim must both be at least 2")
    if not spread > 0:
        raise ValueError(f"spread must be positive, got {spread}")
    rng = named_rng(seed, "stream")
    centers = _ring(rng, n_classes, in_dim, radius)
    x = np.repeat(centers, samples_per_class, axis=0) + spread * rng.standard_normal((n_classes * samples_per_class, in_dim))
    y = np.repeat(np.arange(n_classes), samples_per_class)
    return _split_tasks(x, y, np.arange(y.size), num_tasks, rng, setting)


def ring_centers(num_classes: int, in_dim: int, seed: int, radius: float = 3.0) -> np.ndarray:
    """Class centers used by :func:`synth_stream` (same draws, same order)."""
    return _ring(named_rng(seed, "stream"), num_classes, in_dim, radius)


def _ring(rng, n_classes, in_dim, radius):
    slots = rng.permutation(n_classes)
    jitter = rng.uniform(-0.1, 0.1, size=n_classes)
    angles = 2 * np.pi * (slots + jitter) / n_classes
    centers = np.zeros((n_classes, in_dim))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def load_tabular(path, num_tasks: int, seed: int = 0, setting: str = ONLINE) -> TaskStream:
    """Read a labeled CSV and split its classes into contiguous ascending tasks."""
    path = Path(path)
    rows, labels = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        width = len(header)
        if width < 2:
            raise ValueError(f"{path}: header needs at least one feature column and a label")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ValueError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
            try:
                feats = [float(v) for v in row[:-1]]
            except ValueError as e:
                raise ValueError(f"{path}: line {lineno}: bad feature value ({e})") from None
            lab = row[-1].strip()
            try:
                label = int(lab)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: label {lab!r} is not an integer") from None
            if not all(math.isfinite(v) for v in feats):
                raise ValueError(f"{path}: line {lineno}: non-finite feature")
            rows.append(feats)
            labels.append(label)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    x = np.array(rows, dtype=np.float64)
    y_raw = np.array(labels, dtype=np.int64)
    # remap to contiguous ids 0..C-1 in ascending label order
    classes, y = np.unique(y_raw, return_inverse=True)
    if num_tasks < 1 or classes.size % num_tasks:
        raise ValueError(f"{path}: {classes.size} classes cannot be split evenly into {num_tasks} tasks")
    return _split_tasks(x, y.astype(np.int64), np.arange(y.size), num_tasks, named_rng(seed, "split"), setting)


def write_tabular(path, stream: TaskStream) -> None:
    """Write every train and test example of ``stream`` in source-row order."""
    ids, xs, ys = [], [], []
    for t in stream.tasks:
        ids += [t.train_ids, t.test_ids]
        xs += [t.x_train, t.x_test]
        ys += [t.y_train, t.y_test]
    order = np.argsort(np.concatenate(ids), kind="stable")
    x = np.concatenate(xs)[order]
    y = np.concatenate(ys)[order]
    header = ",".join([f"feature_{i + 1}" for i in range(stream.in_dim)] + ["label"])
    lines = [header]
    for xi, yi in zip(x, y):
        lines.append(",".join(repr(float(v)) for v in xi) + f",{int(yi)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def iterate(task: Task, batch_size: int, epochs: int, rng: np.random.Generator) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Shuffled minibatches over the task's training split, reshuffled every epoch."""
    if batch_size < 1:
        raise ValueError(f"batch size must be at least 1, got {batch_size}")
    n = task.y_train.size
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            yield task.x_train[idx], task.y_train[idx]


def epochs_for(setting: str) -> int:
    return 1 if setting == ONLINE else 5
