"""Shared encoder plus a preference-conditioned final layer.

The hypernetwork maps a preference ``alpha`` to a flat vector that is split
into the classifier weight ``W(alpha)`` [C x d] and bias ``b(alpha)`` [C].
Baseline learners use :class:`LinearHead` instead, a plain learned layer.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .io import read_arrays, write_arrays
from .prefs import as_preference

CHECKPOINT_FORMAT = "paretocl-model/1"


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


@dataclass
class MLPParams:
    """Dense layers stored as (in, out) weights; every layer applies relu."""

    weights: list[Tensor]
    biases: list[Tensor]

    @classmethod
    def init(cls, sizes: Sequence[int], rng: np.random.Generator, prefix: str) -> "MLPParams":
        ws, bs = [], []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            ws.append(Tensor(_glorot(rng, a, b), name=f"{prefix}.W{i}"))
            bs.append(Tensor(np.zeros(b), name=f"{prefix}.b{i}"))
        return cls(ws, bs)

    def tensors(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]


EncoderParams = MLPParams


@dataclass
class HyperNetParams:
    """Two relu hidden layers, then a linear output of length C*d + C."""

    trunk: MLPParams
    out_w: Tensor
    out_b: Tensor
    num_classes: int
    feat_dim: int

    @classmethod
    def init(cls, num_classes: int, feat_dim: int, hidden: int, rng: np.random.Generator) -> "HyperNetParams":
        trunk = MLPParams.init([2, hidden, hidden], rng, "hyper")
        n_out = num_classes * feat_dim + num_classes
        out_w = Tensor(_glorot(rng, hidden, n_out), name="hyper.Wout")
        out_b = Tensor(np.zeros(n_out), name="hyper.bout")
        return cls(trunk, out_w, out_b, num_classes, feat_dim)

    def tensors(self) -> list[Tensor]:
        return self.trunk.tensors() + [self.out_w, self.out_b]

    @property
    def hidden_width(self) -> int:
        return self.trunk.out_dim


@dataclass
class LinearHead:
    W: Tensor  # [C x d]
    b: Tensor  # [C]

    @classmethod
    def init(cls, num_classes: int, feat_dim: int, rng: np.random.Generator) -> "LinearHead":
        return cls(
            Tensor(_glorot(rng, feat_dim, num_classes).T.copy(), name="head.W"),
            Tensor(np.zeros(num_classes), name="head.b"),
        )

    def tensors(self) -> list[Tensor]:
        return [self.W, self.b]


@dataclass
class ModelParams:
    encoder: MLPParams
    num_classes: int
    hyper: HyperNetParams | None = None
    head: LinearHead | None = None
    config: dict = field(default_factory=dict)

    @property
    def conditioned(self) -> bool:
        return self.hyper is not None

    @property
    def in_dim(self) -> int:
        return self.encoder.in_dim

    @property
    def feat_dim(self) -> int:
        return self.encoder.out_dim

    def parameters(self) -> list[Tensor]:
        params = self.encoder.tensors()
        if self.hyper is not None:
            params += self.hyper.tensors()
        if self.head is not None:
            params += self.head.tensors()
        return params

    def clone(self) -> "ModelParams":
        for p in self.parameters():
            if p.tape is not None:
                raise RuntimeError("cannot clone a model whose parameters are attached to a tape")
        return copy.deepcopy(self)


def init_model(
    in_dim: int,
    num_classes: int,
    rng: np.random.Generator,
    *,
    encoder_hidden: Sequence[int] = (128, 128),
    hyper_hidden: int = 64,
    conditioned: bool = True,
) -> ModelParams:
    """Fresh parameters: fan-based uniform weights, zero biases."""
    if in_dim < 1 or num_classes < 2:
        raise ValueError(f"need in_dim >= 1 and at least 2 classes, got {in_dim}, {num_classes}")
    encoder = MLPParams.init([in_dim, *encoder_hidden], rng, "encoder")
    d = encoder.out_dim
    config = {
        "in_dim": in_dim,
        "num_classes": num_classes,
        "encoder_hidden": list(encoder_hidden),
        "hyper_hidden": hyper_hidden if conditioned else None,
        "conditioned": conditioned,
    }
    if conditioned:
        return ModelParams(encoder, num_classes, hyper=HyperNetParams.init(num_classes, d, hyper_hidden, rng), config=config)
    return ModelParams(encoder, num_classes, head=LinearHead.init(num_classes, d, rng), config=config)


def _mlp_forward(mlp: MLPParams, x: Tensor) -> Tensor:
    h = x
    for w, b in zip(mlp.weights, mlp.biases):
        h = ad.relu(ad.add_bias(ad.matmul(h, w), b))
    return h


def encode(params: ModelParams, x) -> Tensor:
    """Penultimate features [B x d] of a [B x in_dim] batch."""
    if not isinstance(x, Tensor):
        x = Tensor(np.asarray(x, dtype=np.float64).reshape(-1, params.in_dim) if np.size(x) == 0 else x)
    if x.data.ndim != 2 or x.shape[1] != params.in_dim:
        raise ValueError(f"encode: expected [B x {params.in_dim}] input, got {x.shape}")
    return _mlp_forward(params.encoder, x)


def _hyper_forward(hyper: HyperNetParams, alphas: np.ndarray) -> Tensor:
    """[K x (C*d + C)] outputs for a [K x 2] preference matrix."""
    h = _mlp_forward(hyper.trunk, Tensor(alphas))
    return ad.add_bias(ad.matmul(h, hyper.out_w), hyper.out_b)


def _split(out: Tensor, row: int, C: int, d: int) -> tuple[Tensor, Tensor]:
    width = C * d + C
    base = row * width
    W = ad.reshape(ad.take_flat(out, base, base + C * d), (C, d))
    b = ad.take_flat(out, base + C * d, base + width)
    return W, b


def hyper_generate(params: ModelParams, alpha) -> tuple[Tensor, Tensor]:
    """Classifier weights ``(W [C x d], b [C])`` for preference ``alpha``."""
    (W, b), = hyper_generate_many(params, [alpha])
    return W, b


def hyper_generate_many(params: ModelParams, alphas) -> list[tuple[Tensor, Tensor]]:
    """:func:`hyper_generate` for several preferences in one hypernetwork pass."""
    if params.hyper is None:
        raise ValueError("model has no hypernetwork")
    A = np.array([as_preference(a).as_array() for a in alphas]).reshape(-1, 2)
    out = _hyper_forward(params.hyper, A)
    return [_split(out, k, params.num_classes, params.feat_dim) for k in range(A.shape[0])]


def hyper_weights_batch(params: ModelParams, alphas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Untracked ``(W [K x C x d], b [K x C])`` for a [K x 2] preference array."""
    hyper = params.hyper
    C, d = params.num_classes, params.feat_dim
    detached = HyperNetParams(
        MLPParams([w.detach() for w in hyper.trunk.weights], [b.detach() for b in hyper.trunk.biases]),
        hyper.out_w.detach(), hyper.out_b.detach(), C, d,
    )
    out = _hyper_forward(detached, np.asarray(alphas, dtype=np.float64).reshape(-1, 2)).data
    return out[:, : C * d].reshape(-1, C, d), out[:, C * d :]


def classify(features: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """Logits ``features @ W.T + b``."""
    if W.data.ndim != 2 or features.data.ndim != 2 or features.shape[1] != W.shape[1]:
        raise ValueError(f"classify: features {features.shape} incompatible with W {W.shape}")
    if b.shape != (W.shape[0],):
        raise ValueError(f"classify: bias {b.shape} incompatible with W {W.shape}")
    return ad.add_bias(ad.matmul(features, ad.transpose(W)), b)


def head_logits(params: ModelParams, features: Tensor) -> Tensor:
    return classify(features, params.head.W, params.head.b)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def entropy_rows(logits: np.ndarray) -> np.ndarray:
    """Natural-log entropy of softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    logZ = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - logZ
    p = np.exp(logp)
    return np.maximum(-(p * logp).sum(axis=-1), 0.0)


def prediction_entropy(logits) -> float:
    return float(entropy_rows(np.asarray(logits, dtype=np.float64).reshape(-1)))


def save_model(path, params: ModelParams, extra: dict | None = None) -> None:
    arrays = {p.name: p.data for p in params.parameters()}
    meta = {"format": CHECKPOINT_FORMAT, "model": params.config, "extra": extra or {}}
    write_arrays(path, arrays, meta)


def load_model(path) -> tuple[ModelParams, dict]:
    arrays, meta = read_arrays(path)
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: unexpected checkpoint format {meta.get('format')!r}")
    cfg = meta["model"]
    params = init_model(
        cfg["in_dim"], cfg["num_classes"], np.random.default_rng(0),
        encoder_hidden=cfg["encoder_hidden"], hyper_hidden=cfg["hyper_hidden"] or 1,
        conditioned=cfg["conditioned"],
    )
    params.config = cfg
    for p in params.parameters():
        if arrays[p.name].shape != p.shape:
            raise ValueError(f"{path}: {p.name} has shape {arrays[p.name].shape}, expected {p.shape}")
        p.data = arrays[p.name]
    return params, meta["extra"]
