"""Training steps and inference rules for ParetoCL and its comparison learners.

Every learner trains on a minibatch of new data plus a replay minibatch drawn
from the reservoir buffer, then pushes the new minibatch into the buffer.

- ``paretocl``: hypernetwork head, averaged linear scalarization over K
  sampled preferences; inference picks the lowest-entropy of K_infer outputs.
- ``paretocl_static``: same training, inference pinned at (0.5, 0.5).
- ``er_fixed``: plain head, ``lam * L_new + (1 - lam) * L_replay``.
- ``er_dps``: per task, trains one ``er_fixed`` clone per grid preference and
  keeps the clone with the best average test accuracy over seen tasks.
- ``mgda``: plain head, min-norm combination of the two loss gradients.
- ``tchebycheff``: plain head, weighted max around a running ideal point.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .metrics import StageRecord, evaluate_stage
from .moo import mgda_combine
from .nn import (
    ModelParams,
    classify,
    encode,
    entropy_rows,
    head_logits,
    hyper_generate_many,
    hyper_weights_batch,
    init_model,
)
from .prefs import (
    IdealPoint,
    PreferencePrior,
    PreferenceVector,
    as_preference,
    sample_preferences,
    tchebycheff_active,
)
from .replay import ReplayBuffer
from .seeding import named_rng
from .stream import OFFLINE, ONLINE, Task, TaskStream, epochs_for, iterate

BALANCED = PreferenceVector(0.5, 0.5)
LEARNER_NAMES = ("paretocl", "paretocl_static", "er_fixed", "er_dps", "mgda", "tchebycheff")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.05
    k_train: int = 5
    k_infer: int = 20
    buffer_capacity: int = 200
    replay_batch: int = 32
    stream_batch: int = 32
    setting: str = ONLINE
    epochs_per_task: int | None = None  # None: 1 online, 5 offline
    concentration: tuple[float, float] = (1.0, 1.0)
    seed: int = 0
    encoder_hidden: tuple[int, ...] = (128, 128)
    hyper_hidden: int = 64

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        for name in ("k_train", "k_infer", "replay_batch", "stream_batch", "hyper_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.buffer_capacity < 0:
            raise ValueError(f"buffer_capacity must be non-negative, got {self.buffer_capacity}")
        if self.setting not in (ONLINE, OFFLINE):
            raise ValueError(f"setting must be {ONLINE!r} or {OFFLINE!r}, got {self.setting!r}")
        if self.epochs_per_task is not None and self.epochs_per_task < 1:
            raise ValueError(f"epochs_per_task must be positive, got {self.epochs_per_task}")
        PreferencePrior(tuple(self.concentration))

    @property
    def epochs(self) -> int:
        return self.epochs_per_task if self.epochs_per_task is not None else epochs_for(self.setting)

    @property
    def prior(self) -> PreferencePrior:
        return PreferencePrior(tuple(self.concentration))

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "k_train": self.k_train,
            "k_infer": self.k_infer,
            "buffer_capacity": self.buffer_capacity,
            "replay_batch": self.replay_batch,
            "stream_batch": self.stream_batch,
            "setting": self.setting,
            "epochs_per_task": self.epochs,
            "concentration": list(self.concentration),
            "seed": self.seed,
            "encoder_hidden": list(self.encoder_hidden),
            "hyper_hidden": self.hyper_hidden,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["concentration"] = tuple(d.get("concentration", (1.0, 1.0)))
        d["encoder_hidden"] = tuple(d.get("encoder_hidden", (128, 128)))
        return cls(**d)


@dataclass(frozen=True)
class LearnerKind:
    name: str
    lam: float | None = None
    grid: tuple[PreferenceVector, ...] | None = None
    alpha: PreferenceVector | None = None

    def __post_init__(self):
        if self.name not in LEARNER_NAMES:
            raise ValueError(f"unknown learner {self.name!r}; choose from {', '.join(LEARNER_NAMES)}")
        if self.name == "er_fixed" and (self.lam is None or not 0.0 <= self.lam <= 1.0):
            raise ValueError(f"er_fixed needs lambda in [0, 1], got {self.lam}")
        if self.name == "er_dps" and (self.grid is None or len(self.grid) < 1):
            raise ValueError("er_dps needs a non-empty preference grid")

    @classmethod
    def er_fixed(cls, lam: float) -> "LearnerKind":
        return cls("er_fixed", lam=float(lam))

    @classmethod
    def er_dps(cls, lambdas: Sequence[float]) -> "LearnerKind":
        return cls("er_dps", grid=tuple(PreferenceVector(1.0 - float(l), float(l)) for l in lambdas))

    @classmethod
    def tchebycheff(cls, alpha=BALANCED) -> "LearnerKind":
        return cls("tchebycheff", alpha=as_preference(alpha))

    @property
    def conditioned(self) -> bool:
        return self.name in ("paretocl", "paretocl_static")

    @property
    def label(self) -> str:
        if self.name == "er_fixed":
            return f"er_fixed({self.lam:g})"
        if self.name == "er_dps":
            return "er_dps(" + ",".join(f"{a.plasticity:g}" for a in self.grid) + ")"
        if self.name == "tchebycheff" and self.alpha is not None:
            return f"tchebycheff({self.alpha.stability:g},{self.alpha.plasticity:g})"
        return self.name

    @classmethod
    def parse(cls, text: str) -> "LearnerKind":
        """Inverse of :attr:`label`, e.g. ``er_fixed(0.5)`` or ``er_dps(0.1,0.5,0.9)``."""
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\((.*)\))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse learner {text!r}")
        name, args = m.group(1), m.group(2)
        vals = [float(v) for v in args.split(",")] if args else []
        if name == "er":
            name = "er_fixed"
        if name == "er_fixed":
            if len(vals) != 1:
                raise ValueError(f"er_fixed takes one lambda, got {text!r}")
            return cls.er_fixed(vals[0])
        if name == "er_dps":
            return cls.er_dps(vals or [i / 10 for i in range(1, 10)])
        if name == "tchebycheff":
            return cls.tchebycheff(vals if vals else BALANCED)
        if vals:
            raise ValueError(f"{name} takes no arguments, got {text!r}")
        return cls(name)

    def to_dict(self) -> dict:
        return {"label": self.label}


@dataclass
class StepReport:
    task: int
    step: int
    l_new: float
    l_replay: float | None
    total: float
    extra: dict = field(default_factory=dict)


def _replay(buffer: ReplayBuffer, cfg: TrainConfig, rng) -> tuple[np.ndarray, np.ndarray] | None:
    if buffer.size == 0:
        return None
    return buffer.sample_arrays(cfg.replay_batch, rng)


def _check_batch(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if y.size == 0:
        raise ValueError("training step needs a non-empty batch")
    return x, y


# -- ParetoCL ---------------------------------------------------------------


def paretocl_loss(model: ModelParams, x_new, y_new, replay, alphas: Sequence[PreferenceVector]):
    """Recorded step loss and its per-preference components.

    Embeddings are computed once and shared by all K preference heads.
    Returns ``(total, l_new_values, l_replay_values)``.
    """
    h_new = encode(model, Tensor(x_new))
    h_rep = encode(model, Tensor(replay[0])) if replay is not None else None
    terms, l_news, l_reps = [], [], []
    for (W, b), a in zip(hyper_generate_many(model, alphas), alphas):
        l_new = ad.cross_entropy(classify(h_new, W, b), y_new)
        l_news.append(l_new.item())
        term = ad.scale(l_new, a.plasticity)
        if h_rep is not None:
            l_rep = ad.cross_entropy(classify(h_rep, W, b), replay[1])
            l_reps.append(l_rep.item())
            term = ad.add(ad.scale(l_rep, a.stability), term)
        terms.append(term)
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    return ad.scale(total, 1.0 / len(terms)), l_news, l_reps


def paretocl_train_step(
    model: ModelParams,
    batch_new,
    buffer: ReplayBuffer,
    cfg: TrainConfig,
    rng: np.random.Generator,
    *,
    pref_rng: np.random.Generator | None = None,
    alphas: Sequence | None = None,
    task_id: int = 0,
    step: int = 0,
) -> StepReport:
    """One SGD step on the Monte-Carlo preference-expectation loss.

    ``rng`` draws the replay minibatch; ``pref_rng`` (default ``rng``) draws
    the K preferences unless ``alphas`` pins them.
    """
    x_new, y_new = _check_batch(*batch_new)
    replay = _replay(buffer, cfg, rng)
    if alphas is None:
        alphas = sample_preferences(cfg.prior, pref_rng or rng, cfg.k_train)
    else:
        alphas = [as_preference(a) for a in alphas]
    params = model.parameters()
    tape = Tape()
    tape.watch_all(params)
    try:
        total, l_news, l_reps = paretocl_loss(model, x_new, y_new, replay, alphas)
        ad.sgd_update(params, ad.backward(total, tape), cfg.lr)
    finally:
        tape.release()
    buffer.observe_batch(x_new, y_new, task_id)
    return StepReport(
        task_id, step, float(np.mean(l_news)), float(np.mean(l_reps)) if l_reps else None, total.item()
    )


@dataclass(frozen=True)
class InferenceResult:
    labels: np.ndarray  # [B]
    alphas: np.ndarray  # [B x 2] chosen preference per row
    entropy: np.ndarray  # [B] entropy of the chosen output
    candidate_entropy: np.ndarray  # [K x B]
    candidates: np.ndarray  # [K x 2] sampled preferences


def _batch_logits(model: ModelParams, x, alphas: np.ndarray) -> np.ndarray:
    """[K x B x C] logits for every (preference, row) pair."""
    h = encode(model, Tensor(np.asarray(x, dtype=np.float64))).data
    W, b = hyper_weights_batch(model, alphas)
    return np.einsum("bd,kcd->kbc", h, W) + b[:, None, :]


def paretocl_infer(
    model: ModelParams,
    x,
    cfg: TrainConfig,
    rng: np.random.Generator,
    *,
    alphas: Sequence | None = None,
) -> InferenceResult:
    """Lowest-entropy prediction over K_infer sampled preferences.

    One preference set is drawn per call and shared by the rows of ``x``.
    Entropy ties go to the earliest sample.
    """
    if alphas is None:
        alphas = sample_preferences(cfg.prior, rng, cfg.k_infer)
    A = np.array([as_preference(a).as_array() for a in alphas])
    logits = _batch_logits(model, x, A)
    ent = entropy_rows(logits)  # [K x B]
    best = np.argmin(ent, axis=0)
    rows = np.arange(ent.shape[1])
    chosen = logits[best, rows]
    return InferenceResult(np.argmax(chosen, axis=1), A[best], ent[best, rows], ent, A)


def predict_pinned(model: ModelParams, x, alpha) -> np.ndarray:
    """Argmax labels under a single fixed preference."""
    logits = _batch_logits(model, x, as_preference(alpha).as_array()[None, :])[0]
    return np.argmax(logits, axis=1)


def paretocl_static_infer(model: ModelParams, x) -> np.ndarray:
    return predict_pinned(model, x, BALANCED)


# -- plain-head baselines -----------------------------------------------------


def plain_predict(model: ModelParams, x) -> np.ndarray:
    return np.argmax(head_logits(model, encode(model, Tensor(np.asarray(x, dtype=np.float64)))).data, axis=1)


def _plain_losses(model, x_new, y_new, replay):
    l_new = ad.cross_entropy(head_logits(model, encode(model, Tensor(x_new))), y_new)
    if replay is None:
        return l_new, None
    l_rep = ad.cross_entropy(head_logits(model, encode(model, Tensor(replay[0]))), replay[1])
    return l_new, l_rep


def er_train_step(
    model: ModelParams, batch_new, buffer: ReplayBuffer, lam: float, cfg: TrainConfig,
    rng: np.random.Generator, *, task_id: int = 0, step: int = 0,
) -> StepReport:
    """SGD on ``lam * L_new + (1 - lam) * L_replay``; pure ``L_new`` while the buffer is empty."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    x_new, y_new = _check_batch(*batch_new)
    replay = _replay(buffer, cfg, rng)
    params = model.parameters()
    tape = Tape()
    tape.watch_all(params)
    try:
        l_new, l_rep = _plain_losses(model, x_new, y_new, replay)
        if l_rep is None:
            total = l_new
        else:
            total = ad.add(ad.scale(l_new, lam), ad.scale(l_rep, 1.0 - lam))
        ad.sgd_update(params, ad.backward(total, tape), cfg.lr)
    finally:
        tape.release()
    buffer.observe_batch(x_new, y_new, task_id)
    return StepReport(task_id, step, l_new.item(), None if l_rep is None else l_rep.item(), total.item())


def _flat_grad(params, grads) -> np.ndarray:
    return np.concatenate([grads[p.node_id].reshape(-1) if p.node_id in grads else np.zeros(p.data.size) for p in params])


def mgda_train_step(
    model: ModelParams, batch_new, buffer: ReplayBuffer, cfg: TrainConfig,
    rng: np.random.Generator, *, task_id: int = 0, step: int = 0,
) -> StepReport:
    """Step along the min-norm convex combination of the replay and new-data gradients."""
    x_new, y_new = _check_batch(*batch_new)
    replay = _replay(buffer, cfg, rng)
    params = model.parameters()
    tape = Tape()
    tape.watch_all(params)
    try:
        l_new, l_rep = _plain_losses(model, x_new, y_new, replay)
        g_new = _flat_grad(params, ad.backward(l_new, tape))
        if l_rep is None:
            gamma, d, total = 0.0, g_new, l_new.item()
        else:
            g_rep = _flat_grad(params, ad.backward(l_rep, tape))
            gamma, d = mgda_combine(g_rep, g_new)
            total = gamma * l_rep.item() + (1.0 - gamma) * l_new.item()
    finally:
        tape.release()
    offset = 0
    for p in params:
        n = p.data.size
        p.data -= cfg.lr * d[offset : offset + n].reshape(p.shape)
        offset += n
    buffer.observe_batch(x_new, y_new, task_id)
    return StepReport(
        task_id, step, l_new.item(), None if l_rep is None else l_rep.item(), total,
        {"gamma": gamma, "direction_norm": float(np.linalg.norm(d))},
    )


def tchebycheff_train_step(
    model: ModelParams, batch_new, buffer: ReplayBuffer, alpha, ideal: IdealPoint,
    cfg: TrainConfig, rng: np.random.Generator, *, task_id: int = 0, step: int = 0,
) -> StepReport:
    """SGD through the active term of ``max(a1 (L_replay - z1), a2 (L_new - z2))``.

    ``ideal`` is updated with this step's losses before the max is taken.
    Ties go to the replay term.
    """
    alpha = as_preference(alpha)
    x_new, y_new = _check_batch(*batch_new)
    replay = _replay(buffer, cfg, rng)
    params = model.parameters()
    tape = Tape()
    tape.watch_all(params)
    try:
        l_new, l_rep = _plain_losses(model, x_new, y_new, replay)
        if l_rep is None:
            total, active = l_new, 1
        else:
            z = ideal.update(l_rep.item(), l_new.item())
            active = tchebycheff_active(alpha, l_rep.item(), l_new.item(), z)
            if active == 0:
                total = ad.scale(ad.sub(l_rep, Tensor(z[0])), alpha.stability)
            else:
                total = ad.scale(ad.sub(l_new, Tensor(z[1])), alpha.plasticity)
        ad.sgd_update(params, ad.backward(total, tape), cfg.lr)
    finally:
        tape.release()
    buffer.observe_batch(x_new, y_new, task_id)
    return StepReport(
        task_id, step, l_new.item(), None if l_rep is None else l_rep.item(), total.item(),
        {"active": active},
    )


# -- task-level driving ---------------------------------------------------------


@dataclass
class LearnerState:
    kind: LearnerKind
    model: ModelParams
    buffer: ReplayBuffer
    ideal: IdealPoint | None = None
    steps: int = 0

    def clone(self) -> "LearnerState":
        return LearnerState(self.kind, self.model.clone(), self.buffer.clone(),
                            None if self.ideal is None else _copy_ideal(self.ideal), self.steps)


def _copy_ideal(ideal: IdealPoint) -> IdealPoint:
    out = IdealPoint(ideal.slack)
    out.best = ideal.best.copy()
    return out


def new_state(kind: LearnerKind, stream: TaskStream, cfg: TrainConfig) -> LearnerState:
    model = init_model(
        stream.in_dim, stream.total_classes, named_rng(cfg.seed, "init"),
        encoder_hidden=cfg.encoder_hidden, hyper_hidden=cfg.hyper_hidden, conditioned=kind.conditioned,
    )
    buffer = ReplayBuffer(cfg.buffer_capacity, named_rng(cfg.seed, "buffer"))
    ideal = IdealPoint() if kind.name == "tchebycheff" else None
    return LearnerState(kind, model, buffer, ideal)


def train_task(state: LearnerState, task: Task, cfg: TrainConfig, *, lam: float | None = None,
               log: list | None = None) -> None:
    """Run every minibatch of ``task`` through the learner's step rule.

    Random draws come from per-task sub-streams of ``cfg.seed``, so two
    learners that see the same task draw the same minibatch order and replay
    indices. ``lam`` overrides the trade-off for ``er_fixed``/``er_dps``.
    """
    kind = state.kind
    shuffle_rng = named_rng(cfg.seed, "shuffle", task.task_id)
    replay_rng = named_rng(cfg.seed, "replay", task.task_id)
    pref_rng = named_rng(cfg.seed, "prefs", task.task_id)
    for batch in iterate(task, cfg.stream_batch, cfg.epochs, shuffle_rng):
        common = dict(task_id=task.task_id, step=state.steps)
        if kind.conditioned:
            rep = paretocl_train_step(state.model, batch, state.buffer, cfg, replay_rng, pref_rng=pref_rng, **common)
        elif kind.name in ("er_fixed", "er_dps"):
            rep = er_train_step(state.model, batch, state.buffer, kind.lam if lam is None else lam, cfg, replay_rng, **common)
        elif kind.name == "mgda":
            rep = mgda_train_step(state.model, batch, state.buffer, cfg, replay_rng, **common)
        else:
            rep = tchebycheff_train_step(state.model, batch, state.buffer, kind.alpha, state.ideal, cfg, replay_rng, **common)
        state.steps += 1
        if log is not None:
            log.append(rep)


def infer_fn_for(state: LearnerState, cfg: TrainConfig, stage: int):
    """Label predictor used when evaluating ``state`` after ``stage``."""
    model = state.model
    if state.kind.name == "paretocl":
        rng = named_rng(cfg.seed, "infer", stage)
        return lambda x: paretocl_infer(model, x, cfg, rng).labels
    if state.kind.name == "paretocl_static":
        return lambda x: paretocl_static_infer(model, x)
    return lambda x: plain_predict(model, x)


@dataclass
class DPSStage:
    stage: int
    candidates: list[tuple[PreferenceVector, StageRecord]]
    selected: int


def er_dps_run(stream: TaskStream, grid: Sequence, cfg: TrainConfig, *, log: list | None = None):
    """Greedy per-task preference selection over a grid of fixed trade-offs.

    Each grid preference ``alpha`` trains a clone of the previous stage's
    selection with ``lam = alpha.plasticity``. The clone with the highest
    average test accuracy over seen tasks (first on ties) is kept.

    Returns ``(final_state, records, dps_stages)``.
    """
    grid = [as_preference(a) for a in grid]
    if not grid:
        raise ValueError("er_dps needs at least one grid preference")
    kind = LearnerKind("er_dps", grid=tuple(grid))
    state = new_state(kind, stream, cfg)
    records, stages = [], []
    for j, task in enumerate(stream.tasks, start=1):
        seen = stream.tasks[:j]
        best = None
        cands = []
        for a in grid:
            cand = state.clone()
            steps: list = []
            train_task(cand, task, cfg, lam=a.plasticity, log=steps)
            rec = evaluate_stage(infer_fn_for(cand, cfg, j), seen, j)
            cands.append((a, rec))
            if best is None or rec.aa > best[1].aa:
                best = (len(cands) - 1, rec, cand, steps)
        idx, rec, state, steps = best
        if log is not None:
            log.extend(steps)
        records.append(rec)
        stages.append(DPSStage(j, cands, idx))
    return state, records, stages
