"""Small reverse-mode autodiff over dense float64 arrays.

A :class:`Tape` records every operation whose inputs are attached to it.
Tensors that are not attached to any tape are treated as constants, so the
same op functions double as a plain numpy forward pass.

Typical use::

    tape = Tape()
    w = tape.watch(param)
    loss = cross_entropy(matmul(x, w), labels)
    grads = backward(loss, tape)
    sgd_update([param], grads, lr=0.05)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "DimensionError",
    "matmul",
    "add",
    "sub",
    "mul",
    "relu",
    "scale",
    "elementwise",
    "add_bias",
    "transpose",
    "reshape",
    "take_flat",
    "sum_all",
    "cross_entropy",
    "backward",
    "sgd_update",
]

DTYPE = np.float64


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class Tensor:
    """A dense real array, optionally attached to a :class:`Tape`.

    ``data`` is a float64 ndarray (row-major). ``node_id`` is set when the
    tensor is recorded on a tape.
    """

    __slots__ = ("data", "node_id", "tape", "name")

    def __init__(self, data, name: str | None = None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.node_id: int | None = None
        self.tape: Tape | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, name=self.name)

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy(), name=self.name)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"


@dataclass
class _Node:
    kind: str
    inputs: tuple[int | None, ...]
    shape: tuple[int, ...]
    # maps upstream grad -> one grad (or None) per input
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None


@dataclass
class Tape:
    """Append-only record of operations; rebuilt for every training step."""

    nodes: list[_Node] = field(default_factory=list)
    leaves: list[Tensor] = field(default_factory=list)

    def watch(self, t: Tensor) -> Tensor:
        """Attach ``t`` as a leaf so gradients flow to it."""
        if t.tape is self and t.node_id is not None:
            return t
        t.node_id = len(self.nodes)
        t.tape = self
        self.nodes.append(_Node("leaf", (), t.data.shape, None))
        self.leaves.append(t)
        return t

    def watch_all(self, tensors: Iterable[Tensor]) -> None:
        for t in tensors:
            self.watch(t)

    def release(self) -> None:
        """Detach every watched leaf so later ops on it are not recorded."""
        for t in self.leaves:
            if t.tape is self:
                t.tape = None
                t.node_id = None
        self.leaves.clear()

    def _record(self, kind, inputs, value, backward_fn) -> Tensor:
        out = Tensor(value)
        out.node_id = len(self.nodes)
        out.tape = self
        ids = tuple(t.node_id if t.tape is self else None for t in inputs)
        self.nodes.append(_Node(kind, ids, out.data.shape, backward_fn))
        return out


def _tape_of(*tensors: Tensor) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tape is not None:
            if tape is not None and t.tape is not tape:
                raise ValueError("operands are attached to different tapes")
            tape = t.tape
    return tape


def _emit(kind, inputs, value, backward_fn) -> Tensor:
    tape = _tape_of(*inputs)
    if tape is None:
        return Tensor(value)
    return tape._record(kind, inputs, value, backward_fn)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    av, bv = a.data, b.data
    return _emit("matmul", (a, b), av @ bv, lambda g: (g @ bv.T, av.T @ g))


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return _emit("add", (a, b), a.data + b.data, lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    return _emit("sub", (a, b), a.data - b.data, lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    av, bv = a.data, b.data
    return _emit("mul", (a, b), av * bv, lambda g: (g * bv, g * av))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _emit("relu", (a,), np.where(mask, a.data, 0.0), lambda g: (g * mask,))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit("scale", (a,), a.data * c, lambda g: (g * c,))


def elementwise(a: Tensor, kind: str, b: Tensor | float | None = None) -> Tensor:
    """Dispatch on ``kind`` in {add, sub, mul, relu, scale}."""
    if kind == "relu":
        return relu(a)
    if kind == "scale":
        return scale(a, b)
    if not isinstance(b, Tensor):
        b = Tensor(np.broadcast_to(np.asarray(b, dtype=DTYPE), a.shape))
    ops = {"add": add, "sub": sub, "mul": mul}
    if kind not in ops:
        raise ValueError(f"unknown elementwise kind {kind!r}")
    return ops[kind](a, b)


def add_bias(a: Tensor, bias: Tensor) -> Tensor:
    """Add a length-C vector to every row of a [B x C] matrix."""
    if a.data.ndim != 2 or bias.shape != (a.shape[1],):
        raise DimensionError(f"add_bias: cannot add {bias.shape} to rows of {a.shape}")
    return _emit("add_bias", (a, bias), a.data + bias.data, lambda g: (g, g.sum(axis=0)))


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got {a.shape}")
    return _emit("transpose", (a,), a.data.T.copy(), lambda g: (g.T,))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if int(np.prod(shape)) != a.data.size:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    src = a.shape
    return _emit("reshape", (a,), a.data.reshape(shape), lambda g: (g.reshape(src),))


def take_flat(a: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice ``[start, stop)`` of the row-major flattening of ``a``."""
    n = a.data.size
    if not 0 <= start <= stop <= n:
        raise DimensionError(f"take_flat: range [{start}, {stop}) outside size {n}")
    src = a.shape

    def back(g):
        full = np.zeros(n, dtype=DTYPE)
        full[start:stop] = g
        return (full.reshape(src),)

    return _emit("take_flat", (a,), a.data.reshape(-1)[start:stop].copy(), back)


def sum_all(a: Tensor) -> Tensor:
    src = a.shape
    return _emit("sum", (a,), np.asarray(a.data.sum()), lambda g: (np.broadcast_to(g, src).copy(),))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean softmax cross-entropy of a [B x C] logit matrix."""
    labels = np.asarray(labels)
    if logits.data.ndim != 2:
        raise DimensionError(f"cross_entropy: logits must be [B x C], got {logits.shape}")
    batch, classes = logits.shape
    if batch < 1:
        raise ValueError("cross_entropy: empty batch")
    if labels.shape != (batch,):
        raise DimensionError(f"cross_entropy: {labels.shape[0] if labels.ndim else 0} labels for {batch} rows")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("cross_entropy: labels must be integers")
    bad = np.flatnonzero((labels < 0) | (labels >= classes))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"cross_entropy: label {int(labels[i])} at index {i} outside [0, {classes})")
    logp = _log_softmax(logits.data)
    rows = np.arange(batch)
    value = -logp[rows, labels].mean()

    def back(g):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        return (d * (g / batch),)

    return _emit("cross_entropy", (logits,), np.asarray(value), back)


def backward(loss: Tensor, tape: Tape | None = None) -> dict[int, np.ndarray]:
    """Reverse-accumulate gradients of a scalar ``loss``.

    Returns a map from node id to gradient array for every node reachable
    from ``loss``.
    """
    tape = tape or loss.tape
    if tape is None or loss.tape is not tape or loss.node_id is None:
        raise ValueError("backward: loss is not recorded on the given tape")
    if loss.data.size != 1:
        raise ValueError(f"backward: loss must be a scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {loss.node_id: np.ones(loss.shape, dtype=DTYPE)}
    for nid in range(loss.node_id, -1, -1):
        g = grads.get(nid)
        node = tape.nodes[nid]
        if g is None or node.backward is None:
            continue
        for src, dg in zip(node.inputs, node.backward(g)):
            if src is None:
                continue
            if src in grads:
                grads[src] = grads[src] + dg
            else:
                grads[src] = np.asarray(dg, dtype=DTYPE)
    return grads


def sgd_update(params: Sequence[Tensor], grads: dict[int, np.ndarray], lr: float) -> None:
    """In-place ``p <- p - lr * g`` for each parameter, in the given order."""
    if not lr > 0:
        raise ValueError(f"sgd_update: lr must be positive, got {lr}")
    for i, p in enumerate(params):
        g = grads.get(p.node_id) if p.node_id is not None else None
        if g is None:
            raise ValueError(f"sgd_update: no gradient for parameter {p.name or i}")
        if g.shape != p.shape:
            raise DimensionError(f"sgd_update: gradient {g.shape} for parameter {p.name or i} of shape {p.shape}")
        p.data -= lr * g
