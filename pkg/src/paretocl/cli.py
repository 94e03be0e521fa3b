"""Command-line entry point: ``paretocl {gen-data,run,sweep,compare}``.

Every command that trains writes ``spec.json`` to its output directory;
``--config spec.json`` replays it and reproduces every file byte for byte.
The default output root comes from ``$PARETOCL_OUT`` (else ``./results``).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .experiment import run_experiment, summarize, write_run
from .io import atomic_write_text, dump_json
from .learner import LEARNER_NAMES, LearnerKind, TrainConfig
from .prefs import uniform_grid
from .stream import ONLINE, OFFLINE, TaskStream, load_tabular, synth_stream, write_tabular

SPEC_FORMAT = "paretocl-spec/1"
EXIT_USAGE = 2
EXIT_RUNTIME = 1
OUT_ENV = "PARETOCL_OUT"

DEFAULT_STREAM = {
    "data": None,
    "tasks": 5,
    "classes_per_task": 2,
    "samples_per_class": 1000,
    "in_dim": 8,
    "spread": 0.8,
    "radius": 3.0,
    "stream_seed": None,
}


@dataclass
class ExperimentSpec:
    command: str
    learners: list[str]
    train: dict
    stream: dict
    seeds: list[int]
    grid: int = 10
    out: str = ""
    format: str = SPEC_FORMAT

    def to_json(self) -> str:
        return dump_json(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        d = json.loads(text)
        if d.get("format") != SPEC_FORMAT:
            raise ValueError(f"unexpected spec format {d.get('format')!r}")
        return cls(**d)

    def digest(self) -> str:
        """Hash of everything that affects results (the output path excluded)."""
        d = asdict(self)
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def kinds(self) -> list[LearnerKind]:
        return [LearnerKind.parse(s) for s in self.learners]

    def config(self, seed: int) -> TrainConfig:
        return TrainConfig.from_dict({**self.train, "seed": seed})


class UsageError(Exception):
    pass


def _floats(text: str, n: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_stream_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("stream")
    g.add_argument("--data", help="labeled CSV (header line; feature columns then an integer label); default: synthetic stream")
    g.add_argument("--tasks", type=int, default=5, help="number of tasks (default 5)")
    g.add_argument("--classes-per-task", type=int, default=2, help="synthetic classes per task (default 2)")
    g.add_argument("--samples-per-class", type=int, default=1000, help="synthetic examples per class, 80%% train (default 1000)")
    g.add_argument("--in-dim", type=int, default=8, help="synthetic feature count (default 8)")
    g.add_argument("--spread", type=float, default=0.8, help="synthetic blob standard deviation (default 0.8)")
    g.add_argument("--radius", type=float, default=3.0, help="radius of the ring of class centers (default 3.0)")
    g.add_argument("--stream-seed", type=int, help="seed for data generation and splits (default: the run seed)")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--setting", choices=(ONLINE, OFFLINE), default=ONLINE,
                   help="online: one pass per task; offline: 5 epochs per task (default online)")
    g.add_argument("--epochs", type=int, help="override epochs per task")
    g.add_argument("--lr", type=float, default=0.05, help="SGD learning rate (default 0.05)")
    g.add_argument("--k-train", type=int, default=5, help="preferences sampled per training step (default 5)")
    g.add_argument("--k-infer", type=int, default=20, help="preferences sampled per inference call (default 20)")
    g.add_argument("--buffer-size", type=int, default=200, help="replay buffer capacity M (default 200)")
    g.add_argument("--replay-batch", type=int, default=32, help="replay examples per step (default 32)")
    g.add_argument("--batch-size", type=int, default=32, help="new-data examples per step (default 32)")
    g.add_argument("--concentration", type=lambda s: _floats(s, 2), default=(1.0, 1.0),
                   help="Dirichlet concentration c1,c2 of the preference prior (default 1,1)")
    g.add_argument("--encoder-hidden", type=_ints, default=(128, 128), help="encoder hidden widths (default 128,128)")
    g.add_argument("--hyper-hidden", type=int, default=64, help="hypernetwork hidden width (default 64)")
    g.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    g.add_argument("--seeds", type=_ints, help="comma-separated seeds; overrides --seed")
    g.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results, plus the command name)")
    g.add_argument("--config", help="re-run a spec.json written by an earlier run")


def _add_learner_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("learner")
    g.add_argument("--learner", default="paretocl", choices=LEARNER_NAMES + ("er",),
                   help="learner kind (default paretocl)")
    g.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="er_fixed weight on the new-data loss, in [0, 1] (default 0.5)")
    g.add_argument("--dps-grid", type=_floats, default=tuple(i / 10 for i in range(1, 10)),
                   help="er_dps new-data weights to select from (default 0.1,...,0.9)")
    g.add_argument("--alpha", type=lambda s: _floats(s, 2), default=(0.5, 0.5),
                   help="tchebycheff preference (stability,plasticity) (default 0.5,0.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paretocl", description="Preference-conditioned continual learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="write a synthetic stream as CSV")
    _add_stream_args(gen)
    gen.add_argument("--seed", type=int, default=0, help="generation seed (default 0)")
    gen.add_argument("--out", required=True, help="CSV path to write")

    run = sub.add_parser("run", help="train and evaluate one learner")
    _add_learner_args(run)
    _add_stream_args(run)
    _add_train_args(run)

    sweep = sub.add_parser("sweep", help="train paretocl and write a pinned-preference front per stage")
    _add_stream_args(sweep)
    _add_train_args(sweep)
    sweep.add_argument("--grid", type=int, default=10, help="evenly spaced preferences per front (default 10)")

    cmp_ = sub.add_parser("compare", help="run several learners on identical streams and seeds")
    cmp_.add_argument("--learners", nargs="+", required=True,
                      help="learner labels, e.g. paretocl paretocl_static 'er_fixed(0.5)' mgda 'tchebycheff(0.5,0.5)'")
    _add_stream_args(cmp_)
    _add_train_args(cmp_)
    return parser


def _learner_label(ns) -> str:
    name = ns.learner
    if name in ("er", "er_fixed"):
        if not 0.0 <= ns.lam <= 1.0:
            raise UsageError(f"--lambda must lie in [0, 1], got {ns.lam}")
        return LearnerKind.er_fixed(ns.lam).label
    if name == "er_dps":
        if any(not 0.0 <= v <= 1.0 for v in ns.dps_grid):
            raise UsageError("--dps-grid values must lie in [0, 1]")
        return LearnerKind.er_dps(ns.dps_grid).label
    if name == "tchebycheff":
        return LearnerKind.tchebycheff(ns.alpha).label
    return name


def parse_args(argv: Sequence[str] | None = None) -> ExperimentSpec:
    """Validated spec for a training command; raises ``UsageError`` on bad values."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "gen-data":
        raise UsageError("gen-data does not produce an experiment spec")
    if ns.config:
        spec = ExperimentSpec.from_json(Path(ns.config).read_text())
        if ns.out:
            spec.out = ns.out
        return spec
    try:
        if ns.command == "run":
            learners = [_learner_label(ns)]
        elif ns.command == "sweep":
            learners = ["paretocl"]
            if ns.grid < 2:
                raise UsageError(f"--grid must be at least 2, got {ns.grid}")
        else:
            learners = [LearnerKind.parse(s).label for s in ns.learners]
            if len(learners) < 2:
                raise UsageError("compare needs at least two learners")
        train = TrainConfig(
            lr=ns.lr, k_train=ns.k_train, k_infer=ns.k_infer, buffer_capacity=ns.buffer_size,
            replay_batch=ns.replay_batch, stream_batch=ns.batch_size, setting=ns.setting,
            epochs_per_task=ns.epochs, concentration=tuple(ns.concentration), seed=ns.seed,
            encoder_hidden=tuple(ns.encoder_hidden), hyper_hidden=ns.hyper_hidden,
        ).to_dict()
    except ValueError as e:
        raise UsageError(str(e)) from None
    del train["seed"]
    stream = _stream_dict(ns)
    seeds = list(ns.seeds) if ns.seeds else [ns.seed]
    out = ns.out or str(Path(os.environ.get(OUT_ENV, "results")) / ns.command)
    return ExperimentSpec(ns.command, learners, train, stream, seeds, getattr(ns, "grid", 10), out)


def _stream_dict(ns) -> dict:
    if ns.tasks < 1:
        raise UsageError(f"--tasks must be positive, got {ns.tasks}")
    d = {
        "data": str(Path(ns.data)) if ns.data else None,
        "tasks": ns.tasks,
        "classes_per_task": ns.classes_per_task,
        "samples_per_class": ns.samples_per_class,
        "in_dim": ns.in_dim,
        "spread": ns.spread,
        "radius": ns.radius,
        "stream_seed": ns.stream_seed,
    }
    if d["data"] is None and not ns.spread > 0:
        raise UsageError(f"--spread must be positive, got {ns.spread}")
    return d


def make_stream(stream: dict, seed: int, setting: str) -> TaskStream:
    s = {**DEFAULT_STREAM, **stream}
    sseed = seed if s["stream_seed"] is None else s["stream_seed"]
    if s["data"]:
        return load_tabular(s["data"], s["tasks"], sseed, setting)
    return synth_stream(
        s["tasks"], s["classes_per_task"], s["samples_per_class"], s["in_dim"], s["spread"], sseed,
        radius=s["radius"], setting=setting,
    )


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("_")


def _run_learner(spec: ExperimentSpec, kind: LearnerKind, outdir: Path, sweep_grid=None) -> list:
    results = []
    for seed in spec.seeds:
        cfg = spec.config(seed)
        stream = make_stream(spec.stream, seed, cfg.setting)
        info = {**DEFAULT_STREAM, **spec.stream, "total_classes": stream.total_classes, "num_tasks": stream.num_tasks}
        r = run_experiment(kind, stream, cfg, sweep_grid=sweep_grid, stream_info=info)
        write_run(r, outdir / f"seed_{seed}")
        results.append(r)
        print(f"{kind.label} seed {seed}: AAA {100 * r.aaa:.2f}  Acc {100 * r.acc:.2f}  ({r.wall_time:.1f}s)", file=sys.stderr)
    agg = summarize(results)
    atomic_write_text(outdir / "aggregate.json", dump_json({"learner": kind.label, "seeds": spec.seeds, **agg}))
    return results


def cmd_run(spec: ExperimentSpec) -> Path:
    out = Path(spec.out)
    atomic_write_text(out / "spec.json", spec.to_json())
    _run_learner(spec, spec.kinds()[0], out)
    return out


def cmd_sweep(spec: ExperimentSpec) -> Path:
    kind = spec.kinds()[0]
    if kind.name != "paretocl":
        raise UsageError("sweep only supports the paretocl learner")
    out = Path(spec.out)
    atomic_write_text(out / "spec.json", spec.to_json())
    _run_learner(spec, kind, out, sweep_grid=uniform_grid(spec.grid))
    return out


def comparison_csv(rows: list[tuple[str, dict]]) -> str:
    lines = ["learner,runs,aaa_mean,aaa_std,acc_mean,acc_std"]
    for label, s in rows:
        lines.append(f"{label},{s['runs']},{s['aaa_mean']!r},{s['aaa_std']!r},{s['acc_mean']!r},{s['acc_std']!r}")
    return "\n".join(lines) + "\n"


def cmd_compare(spec: ExperimentSpec) -> Path:
    kinds = spec.kinds()
    if len(kinds) < 2:
        raise UsageError("compare needs at least two learners")
    out = Path(spec.out)
    atomic_write_text(out / "spec.json", spec.to_json())
    rows = []
    for kind in kinds:
        results = _run_learner(spec, kind, out / _slug(kind.label))
        rows.append((kind.label, summarize(results)))
    atomic_write_text(out / "comparison.csv", comparison_csv(rows))
    for label, s in rows:
        print(f"{label:28s} AAA {100 * s['aaa_mean']:6.2f} ± {100 * s['aaa_std']:.2f}   "
              f"Acc {100 * s['acc_mean']:6.2f} ± {100 * s['acc_std']:.2f}")
    return out


def cmd_gen_data(argv: Sequence[str]) -> Path:
    ns = build_parser().parse_args(argv)
    stream = synth_stream(ns.tasks, ns.classes_per_task, ns.samples_per_class, ns.in_dim, ns.spread,
                          ns.seed if ns.stream_seed is None else ns.stream_seed, radius=ns.radius)
    write_tabular(ns.out, stream)
    return Path(ns.out)


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and EXIT_USAGE
    try:
        if ns.command == "gen-data":
            if not ns.spread > 0:
                raise UsageError(f"--spread must be positive, got {ns.spread}")
            print(cmd_gen_data(argv))
            return 0
        spec = parse_args(argv)
        print(COMMANDS[spec.command](spec))
        return 0
    except UsageError as e:
        print(f"paretocl: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - reported as a runtime failure
        print(f"paretocl: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
