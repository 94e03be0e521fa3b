"""Pareto dominance, non-dominated filtering and the two-gradient MGDA step."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

MINIMIZE = "minimize"
MAXIMIZE = "maximize"


@dataclass(frozen=True)
class ObjectivePoint:
    v1: float
    v2: float
    tag: Any = None


def _sign(orientation: str) -> float:
    if orientation == MINIMIZE:
        return 1.0
    if orientation == MAXIMIZE:
        return -1.0
    raise ValueError(f"orientation must be {MINIMIZE!r} or {MAXIMIZE!r}, got {orientation!r}")


def dominates(p: ObjectivePoint, q: ObjectivePoint, orientation: str = MINIMIZE) -> bool:
    """True iff ``p`` is no worse than ``q`` everywhere and strictly better somewhere."""
    s = _sign(orientation)
    a1, a2, b1, b2 = s * p.v1, s * p.v2, s * q.v1, s * q.v2
    return a1 <= b1 and a2 <= b2 and (a1 < b1 or a2 < b2)


def non_dominated_mask(values: np.ndarray, orientation: str = MINIMIZE) -> np.ndarray:
    """Boolean mask of rows in an [n x 2] array that no other row dominates.

    Sort by first objective (then second) and sweep; O(n log n).
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1, 2) * _sign(orientation)
    n = v.shape[0]
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return mask
    order = np.lexsort((v[:, 1], v[:, 0]))
    best2 = np.inf
    i = 0
    while i < n:
        # group of rows sharing the same first objective
        j = i
        while j + 1 < n and v[order[j + 1], 0] == v[order[i], 0]:
            j += 1
        group = order[i : j + 1]
        gmin = v[group[0], 1]
        # only the group minimum can survive; a strictly smaller second value seen
        # earlier (with strictly smaller first value) dominates it
        if gmin < best2:
            mask[group[v[group, 1] == gmin]] = True
        best2 = min(best2, gmin)
        i = j + 1
    return mask


def pareto_filter(points: Sequence[ObjectivePoint], orientation: str = MINIMIZE) -> list[ObjectivePoint]:
    """Points not dominated by any other point, in input order."""
    if not points:
        return []
    mask = non_dominated_mask(np.array([[p.v1, p.v2] for p in points]), orientation)
    return [p for p, keep in zip(points, mask) if keep]


def mgda_combine(g1, g2) -> tuple[float, np.ndarray]:
    """Minimum-norm point ``gamma*g1 + (1-gamma)*g2`` of the segment [g1, g2]."""
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    if g1.shape != g2.shape:
        raise ValueError(f"gradient shapes differ: {g1.shape} vs {g2.shape}")
    diff = g1 - g2
    denom = float(diff @ diff)
    if denom == 0.0:
        gamma = 0.5
    else:
        gamma = float(np.clip((g2 - g1) @ g2 / denom, 0.0, 1.0))
    return gamma, gamma * g1 + (1.0 - gamma) * g2


def write_front_csv(path, points: Sequence[ObjectivePoint], orientation: str = MAXIMIZE) -> None:
    """CSV rows ``tag,v1,v2,dominated``."""
    from .io import atomic_write_text

    mask = non_dominated_mask(np.array([[p.v1, p.v2] for p in points]).reshape(-1, 2), orientation)
    lines = ["tag,v1,v2,dominated"]
    for p, keep in zip(points, mask):
        lines.append(f"{'' if p.tag is None else p.tag},{p.v1!r},{p.v2!r},{int(not keep)}")
    atomic_write_text(path, "\n".join(lines) + "\n")
