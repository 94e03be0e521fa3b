"""Preference vectors on the 2-simplex and the scalarizations built on them.

The first weight scores stability (replay loss), the second plasticity
(new-data loss).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SIMPLEX_TOL = 1e-9


class PreferenceVector(NamedTuple):
    stability: float
    plasticity: float

    @classmethod
    def checked(cls, a1: float, a2: float, tol: float = SIMPLEX_TOL) -> "PreferenceVector":
        a1, a2 = float(a1), float(a2)
        if not (a1 >= -tol and a2 >= -tol and abs(a1 + a2 - 1.0) <= tol):
            raise ValueError(f"preference ({a1}, {a2}) is not on the 2-simplex")
        return cls(a1, a2)

    def as_array(self) -> np.ndarray:
        return np.array([self.stability, self.plasticity], dtype=np.float64)


def as_preference(alpha) -> PreferenceVector:
    if isinstance(alpha, PreferenceVector):
        return PreferenceVector.checked(*alpha)
    a = np.asarray(alpha, dtype=np.float64).reshape(-1)
    if a.shape != (2,):
        raise ValueError(f"preference must have two entries, got {a.shape[0]}")
    return PreferenceVector.checked(a[0], a[1])


@dataclass(frozen=True)
class PreferencePrior:
    """Dirichlet prior over the 2-simplex."""

    concentration: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        c1, c2 = self.concentration
        if not (c1 > 0 and c2 > 0):
            raise ValueError(f"Dirichlet concentration must be positive, got {self.concentration}")


def sample_preference(prior: PreferencePrior, rng: np.random.Generator) -> PreferenceVector:
    """One Dirichlet draw; on two components this is a Beta draw for the first."""
    a1 = float(rng.beta(*prior.concentration))
    return PreferenceVector(a1, 1.0 - a1)


def sample_preferences(prior: PreferencePrior, rng: np.random.Generator, k: int) -> list[PreferenceVector]:
    return [sample_preference(prior, rng) for _ in range(k)]


def uniform_grid(k: int) -> list[PreferenceVector]:
    """``k`` evenly spaced preferences from (0, 1) to (1, 0)."""
    if k < 2:
        raise ValueError(f"grid needs at least 2 points, got {k}")
    out = []
    for i in range(k):
        a1 = i / (k - 1)
        out.append(PreferenceVector(a1, 1.0 - a1))
    return out


def scalarize_linear(alpha, l_replay: float, l_new: float) -> float:
    a1, a2 = alpha
    return a1 * l_replay + a2 * l_new


def tchebycheff_terms(alpha, l_replay: float, l_new: float, ideal) -> tuple[float, float]:
    a1, a2 = alpha
    z1, z2 = ideal
    return a1 * (l_replay - z1), a2 * (l_new - z2)


def tchebycheff_active(alpha, l_replay: float, l_new: float, ideal) -> int:
    """Index of the active term: 0 for replay, 1 for new. Ties go to replay."""
    t1, t2 = tchebycheff_terms(alpha, l_replay, l_new, ideal)
    return 0 if t1 >= t2 else 1


def scalarize_tchebycheff(alpha, l_replay: float, l_new: float, ideal=(0.0, 0.0)) -> float:
    return max(tchebycheff_terms(alpha, l_replay, l_new, ideal))


class IdealPoint:
    """Running componentwise minimum of observed losses, less a fixed slack."""

    def __init__(self, slack: float = 1e-3):
        self.slack = slack
        self.best = np.array([np.inf, np.inf])

    def update(self, l_replay: float, l_new: float) -> tuple[float, float]:
        self.best = np.minimum(self.best, [l_replay, l_new])
        return self.value

    @property
    def value(self) -> tuple[float, float]:
        z = self.best - self.slack
        return float(z[0]), float(z[1])
