"""Reservoir replay memory."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import numpy as np

from .io import read_arrays, write_arrays


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray
    label: int
    task_id: int = 0


class BufferEmpty(LookupError):
    """Raised when sampling from a buffer that holds nothing."""


class ReplayBuffer:
    """Fixed-capacity reservoir over a stream of labeled examples.

    After ``n`` observations each one is held with probability ``min(1, M/n)``.
    Storage is preallocated on the first observation.
    """

    def __init__(self, capacity: int, rng: np.random.Generator | None = None):
        if capacity < 0:
            raise ValueError(f"capacity must be non-negative, got {capacity}")
        self.capacity = int(capacity)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.seen_count = 0
        self.size = 0
        self.features: np.ndarray | None = None
        self.labels = np.zeros(self.capacity, dtype=np.int64)
        self.task_ids = np.zeros(self.capacity, dtype=np.int64)

    def __len__(self) -> int:
        return self.size

    def _slot(self) -> int:
        n = self.seen_count  # examples seen before this one
        if n < self.capacity:
            return n
        j = int(self.rng.integers(0, n + 1))
        return j if j < self.capacity else -1

    def observe(self, example: LabeledExample) -> None:
        x = np.asarray(example.features, dtype=np.float64)
        if self.features is None:
            self.features = np.zeros((self.capacity, x.shape[0]))
        slot = self._slot()
        self.seen_count += 1
        if slot >= 0:
            self.features[slot] = x
            self.labels[slot] = example.label
            self.task_ids[slot] = example.task_id
            self.size = min(self.seen_count, self.capacity)

    def observe_batch(self, x: np.ndarray, y: np.ndarray, task_id: int = 0) -> None:
        for xi, yi in zip(x, y):
            self.observe(LabeledExample(xi, int(yi), task_id))

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise BufferEmpty("replay buffer is empty")
        return rng.integers(0, self.size, size=batch_size)

    def sample_arrays(self, batch_size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        idx = self.sample_indices(batch_size, rng)
        return self.features[idx], self.labels[idx]

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> list[LabeledExample]:
        """``batch_size`` uniform draws with replacement."""
        idx = self.sample_indices(batch_size, rng)
        return [LabeledExample(self.features[i].copy(), int(self.labels[i]), int(self.task_ids[i])) for i in idx]

    def clone(self) -> "ReplayBuffer":
        return copy.deepcopy(self)

    def save(self, path) -> None:
        in_dim = 0 if self.features is None else self.features.shape[1]
        feats = np.zeros((self.capacity, in_dim)) if self.features is None else self.features
        meta = {
            "kind": "replay_buffer",
            "capacity": self.capacity,
            "seen_count": self.seen_count,
            "size": self.size,
            "rng_state": json.dumps(self.rng.bit_generator.state, sort_keys=True),
        }
        write_arrays(path, {"features": feats, "labels": self.labels, "task_ids": self.task_ids}, meta)

    @classmethod
    def load(cls, path) -> "ReplayBuffer":
        arrays, meta = read_arrays(path)
        state = json.loads(meta["rng_state"])
        bitgen = getattr(np.random, state["bit_generator"])()
        bitgen.state = state
        buf = cls(meta["capacity"], np.random.Generator(bitgen))
        buf.seen_count = meta["seen_count"]
        buf.size = meta["size"]
        buf.features = arrays["features"] if meta["seen_count"] else None
        buf.labels = arrays["labels"]
        buf.task_ids = arrays["task_ids"]
        return buf
