"""Drive learners over task streams and write result directories.

Result directory layout (format ``paretocl-results/1``)::

    config.json      learner label, training config, stream description
    stages.csv       stage,acc_task_1..acc_task_N,aa,a_old,a_new   (fractions)
    summary.json     format, learner, seed, aaa, acc               (fractions)
    steps.csv        step,task,l_new,l_replay,total               (empty l_replay before the buffer fills)
    model.ckpt       final parameters (see ``paretocl.io``)
    dps.csv          er_dps only: stage,alpha1,alpha2,a_old,a_new,aa,selected
    fronts/stage_J.csv  sweeps only: alpha1,alpha2,a_old,a_new,on_front

Floats are written with ``repr`` so every value round-trips exactly. Wall
time is kept on the in-memory result only, so reruns are byte-identical.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .io import atomic_write_text, dump_json
from .learner import (
    DPSStage,
    LearnerKind,
    StepReport,
    TrainConfig,
    er_dps_run,
    infer_fn_for,
    new_state,
    predict_pinned,
    train_task,
)
from .metrics import StageRecord, accuracy, compute_aaa, evaluate_stage, mean_std
from .moo import MAXIMIZE, ObjectivePoint, non_dominated_mask
from .nn import ModelParams, save_model
from .prefs import PreferenceVector, as_preference, uniform_grid
from .stream import TaskStream

RESULTS_FORMAT = "paretocl-results/1"


@dataclass
class FrontSweep:
    stage: int
    points: list[ObjectivePoint]  # tag is the PreferenceVector
    front: list[ObjectivePoint]


@dataclass
class RunResult:
    kind: LearnerKind
    config: TrainConfig
    stages: list[StageRecord]
    steps: list[StepReport]
    model: ModelParams
    wall_time: float = 0.0
    stream_info: dict = field(default_factory=dict)
    dps: list[DPSStage] | None = None
    fronts: list[FrontSweep] | None = None

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def aaa(self) -> float:
        return compute_aaa(self.stages)[0]

    @property
    def acc(self) -> float:
        return compute_aaa(self.stages)[1]


def sweep_front(model: ModelParams, grid: Sequence, tasks_seen: Sequence, stage: int | None = None) -> FrontSweep:
    """``(A_old, A_new)`` for each pinned preference, plus its non-dominated subset."""
    if len(tasks_seen) < 2:
        raise ValueError("sweep_front needs at least two seen tasks (A_old is undefined at stage 1)")
    *old, new = tasks_seen
    points = []
    for a in grid:
        a = as_preference(a)
        a_old = float(np.mean([accuracy(predict_pinned(model, t.x_test, a), t.y_test) for t in old]))
        a_new = accuracy(predict_pinned(model, new.x_test, a), new.y_test)
        points.append(ObjectivePoint(a_old, a_new, a))
    mask = non_dominated_mask(np.array([[p.v1, p.v2] for p in points]), MAXIMIZE)
    front = [p for p, keep in zip(points, mask) if keep]
    return FrontSweep(stage if stage is not None else len(tasks_seen), points, front)


def run_experiment(
    kind: LearnerKind,
    stream: TaskStream,
    cfg: TrainConfig,
    *,
    sweep_grid: Sequence | None = None,
    stream_info: dict | None = None,
) -> RunResult:
    """Train task by task, evaluating on every seen task after each one.

    With ``sweep_grid`` (conditioned learners only) a pinned-preference front
    is recorded after every stage from 2 on.
    """
    if stream.setting != cfg.setting:
        stream = stream.with_setting(cfg.setting)
    t0 = time.perf_counter()
    steps: list[StepReport] = []
    fronts = [] if sweep_grid is not None else None
    if sweep_grid is not None and not kind.conditioned:
        raise ValueError(f"front sweeps need a preference-conditioned learner, not {kind.label}")
    try:
        if kind.name == "er_dps":
            state, records, dps = er_dps_run(stream, kind.grid, cfg, log=steps)
        else:
            dps = None
            state = new_state(kind, stream, cfg)
            records = []
            for j, task in enumerate(stream.tasks, start=1):
                train_task(state, task, cfg, log=steps)
                records.append(evaluate_stage(infer_fn_for(state, cfg, j), stream.tasks[:j], j))
                if fronts is not None and j >= 2:
                    fronts.append(sweep_front(state.model, sweep_grid, stream.tasks[:j], j))
    except Exception as e:
        raise RuntimeError(f"{kind.label} (seed {cfg.seed}): {e}") from e
    return RunResult(
        kind, cfg, records, steps, state.model, time.perf_counter() - t0,
        dict(stream_info or {}), dps, fronts,
    )


def run_seeds(kind: LearnerKind, make_stream: Callable[[int], TaskStream], cfg: TrainConfig,
              seeds: Sequence[int], **kw) -> list[RunResult]:
    """One run per seed; the stream may depend on the seed."""
    out = []
    for s in seeds:
        out.append(run_experiment(kind, make_stream(s), replace(cfg, seed=s), **kw))
    return out


def summarize(results: Sequence[RunResult]) -> dict:
    """Mean and sample std of AAA and Acc over runs."""
    aaa_m, aaa_s = mean_std([r.aaa for r in results])
    acc_m, acc_s = mean_std([r.acc for r in results])
    return {"aaa_mean": aaa_m, "aaa_std": aaa_s, "acc_mean": acc_m, "acc_std": acc_s, "runs": len(results)}


# -- result files ---------------------------------------------------------------


def _f(v) -> str:
    return "" if v is None else repr(float(v))


def stages_csv(records: Sequence[StageRecord]) -> str:
    n = len(records[-1].task_acc) if records else 0
    lines = [",".join(["stage"] + [f"acc_task_{i + 1}" for i in range(n)] + ["aa", "a_old", "a_new"])]
    for r in records:
        accs = [_f(a) for a in r.task_acc] + [""] * (n - len(r.task_acc))
        lines.append(",".join([str(r.stage)] + accs + [_f(r.aa), _f(r.a_old), _f(r.a_new)]))
    return "\n".join(lines) + "\n"


def read_stages_csv(path) -> list[StageRecord]:
    rows = Path(path).read_text().splitlines()
    header = rows[0].split(",")
    n = sum(h.startswith("acc_task_") for h in header)
    out = []
    for line in rows[1:]:
        cells = line.split(",")
        accs = tuple(float(c) for c in cells[1 : 1 + n] if c != "")
        out.append(StageRecord(int(cells[0]), accs))
    return out


def steps_csv(steps: Sequence[StepReport]) -> str:
    lines = ["step,task,l_new,l_replay,total"]
    for s in steps:
        lines.append(f"{s.step},{s.task},{_f(s.l_new)},{_f(s.l_replay)},{_f(s.total)}")
    return "\n".join(lines) + "\n"


def front_csv(sweep: FrontSweep) -> str:
    on = {id(p) for p in sweep.front}
    lines = ["alpha1,alpha2,a_old,a_new,on_front"]
    for p in sweep.points:
        a = p.tag
        lines.append(f"{_f(a.stability)},{_f(a.plasticity)},{_f(p.v1)},{_f(p.v2)},{int(id(p) in on)}")
    return "\n".join(lines) + "\n"


def read_front_csv(path) -> list[tuple[PreferenceVector, ObjectivePoint, bool]]:
    out = []
    for line in Path(path).read_text().splitlines()[1:]:
        a1, a2, ao, an, on = line.split(",")
        a = PreferenceVector(float(a1), float(a2))
        out.append((a, ObjectivePoint(float(ao), float(an), a), on == "1"))
    return out


def dps_csv(stages: Sequence[DPSStage]) -> str:
    lines = ["stage,alpha1,alpha2,a_old,a_new,aa,selected"]
    for st in stages:
        for i, (a, rec) in enumerate(st.candidates):
            lines.append(
                f"{st.stage},{_f(a.stability)},{_f(a.plasticity)},{_f(rec.a_old)},{_f(rec.a_new)},{_f(rec.aa)},{int(i == st.selected)}"
            )
    return "\n".join(lines) + "\n"


def summary_dict(result: RunResult) -> dict:
    return {
        "format": RESULTS_FORMAT,
        "learner": result.kind.label,
        "seed": result.seed,
        "aaa": result.aaa,
        "acc": result.acc,
    }


def read_summary(path) -> dict:
    d = json.loads(Path(path).read_text())
    if d.get("format") != RESULTS_FORMAT:
        raise ValueError(f"{path}: unexpected results format {d.get('format')!r}")
    return d


def write_summary(path, learner: str, seed: int, aaa: float, acc: float) -> None:
    atomic_write_text(path, dump_json({"format": RESULTS_FORMAT, "learner": learner, "seed": seed, "aaa": aaa, "acc": acc}))


def write_run(result: RunResult, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    config = {
        "format": RESULTS_FORMAT,
        "learner": result.kind.label,
        "train": result.config.to_dict(),
        "stream": result.stream_info,
    }
    atomic_write_text(outdir / "config.json", dump_json(config))
    atomic_write_text(outdir / "stages.csv", stages_csv(result.stages))
    atomic_write_text(outdir / "steps.csv", steps_csv(result.steps))
    atomic_write_text(outdir / "summary.json", dump_json(summary_dict(result)))
    save_model(outdir / "model.ckpt", result.model, {"learner": result.kind.label, "seed": result.seed})
    if result.dps is not None:
        atomic_write_text(outdir / "dps.csv", dps_csv(result.dps))
    if result.fronts is not None:
        for sw in result.fronts:
            atomic_write_text(outdir / "fronts" / f"stage_{sw.stage}.csv", front_csv(sw))
    return outdir


def percent(x: float) -> str:
    return f"{100.0 * x:.2f}"


def default_grid(k: int = 10) -> list[PreferenceVector]:
    return uniform_grid(k)
