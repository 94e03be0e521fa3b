import json
import math
from dataclasses import replace

import numpy as np
import pytest

from paretocl.experiment import (
    percent,
    read_front_csv,
    read_stages_csv,
    read_summary,
    run_experiment,
    run_seeds,
    summarize,
    sweep_front,
    write_run,
    write_summary,
)
from paretocl.learner import LearnerKind, TrainConfig
from paretocl.metrics import StageRecord, compute_aaa, evaluate_stage, mean_std
from paretocl.moo import MAXIMIZE, dominates
from paretocl.nn import init_model
from paretocl.prefs import uniform_grid
from paretocl.stream import synth_stream

CFG = TrainConfig(encoder_hidden=(16,), hyper_hidden=8, buffer_capacity=30, k_infer=5)


def test_stage_record_arithmetic():
    r = StageRecord(3, (0.7, 0.6, 0.5))
    assert r.aa == pytest.approx(0.6, abs=1e-12)
    assert r.a_old == pytest.approx(0.65, abs=1e-12)
    assert r.a_new == 0.5
    assert StageRecord(1, (0.9,)).a_old is None


def test_compute_aaa_examples():
    assert compute_aaa([70.0, 60.0, 50.0]) == (60.0, 50.0)
    assert compute_aaa([StageRecord(1, (0.8,))]) == (0.8, 0.8)
    recs = [StageRecord(1, (1.0,)), StageRecord(2, (0.5, 1.0))]
    assert compute_aaa(recs) == (np.mean([1.0, 0.75]), 0.75)
    with pytest.raises(ValueError):
        compute_aaa([])


def test_evaluate_stage_perfect_and_random(small_stream):
    tasks = small_stream.tasks
    lookup = {}
    for t in tasks:
        lookup.update({x.tobytes(): y for x, y in zip(t.x_test, t.y_test)})
    rec = evaluate_stage(lambda x: np.array([lookup[r.tobytes()] for r in x]), tasks)
    assert rec.aa == 1.0 and rec.stage == len(tasks)

    big = synth_stream(2, 4, 1000, 3, 1.0, seed=0)
    rng = np.random.default_rng(0)
    rec = evaluate_stage(lambda x: rng.integers(0, 8, size=len(x)), big.tasks)
    n = big.tasks[0].y_test.size
    sigma = math.sqrt((1 / 8) * (7 / 8) / n)
    assert all(abs(a - 1 / 8) <= 3 * sigma for a in rec.task_acc)


def test_evaluate_stage_errors(small_stream):
    with pytest.raises(ValueError):
        evaluate_stage(lambda x: x, [])


def test_reference_values_round_trip(tmp_path):
    write_summary(tmp_path / "summary.json", "paretocl", 0, 0.7089, 0.5995)
    back = read_summary(tmp_path / "summary.json")
    assert (back["aaa"], back["acc"]) == (0.7089, 0.5995)
    assert (percent(back["aaa"]), percent(back["acc"])) == ("70.89", "59.95")


def test_mean_std_uses_sample_deviation():
    assert mean_std([1.0, 2.0, 3.0]) == (2.0, 1.0)
    assert mean_std([4.0]) == (4.0, 0.0)


def test_sweep_front_contracts(small_stream):
    model = init_model(small_stream.in_dim, small_stream.total_classes, np.random.default_rng(0), encoder_hidden=(6,), hyper_hidden=4)
    seen = small_stream.tasks[:2]
    assert len(sweep_front(model, [(0.5, 0.5)], seen).points) == 1
    with pytest.raises(ValueError):
        sweep_front(model, uniform_grid(3), seen[:1])

    sw = sweep_front(model, uniform_grid(10), seen)
    assert sw.points == sweep_front(model, uniform_grid(10), seen).points
    assert not any(dominates(p, q, MAXIMIZE) for p in sw.front for q in sw.front)

    for p in model.hyper.tensors():
        p.data[...] = 0.0
    flat = sweep_front(model, uniform_grid(10), seen)
    assert len({(p.v1, p.v2) for p in flat.points}) == 1
    assert len(flat.front) == 10


def test_plain_sgd_forgets_earlier_tasks():
    stream = synth_stream(5, 2, 100, 4, 0.3, seed=0)
    cfg = TrainConfig(encoder_hidden=(16,), buffer_capacity=0, setting="offline")
    r = run_experiment(LearnerKind.er_fixed(1.0), stream, cfg)
    final = r.stages[-1].task_acc
    assert final[-1] >= max(final[:-1])
    assert final[-1] > 0.9 and np.mean(final[:-1]) < 0.5


def test_single_task_stream():
    stream = synth_stream(1, 3, 40, 4, 0.5, seed=1)
    r = run_experiment(LearnerKind("paretocl"), stream, CFG)
    assert r.aaa == r.acc == r.stages[0].task_acc[0]


def test_accuracies_in_range_and_identities(small_stream):
    r = run_experiment(LearnerKind("paretocl"), small_stream, CFG, sweep_grid=uniform_grid(4))
    for j, rec in enumerate(r.stages, start=1):
        assert rec.stage == j and len(rec.task_acc) == j
        assert all(0.0 <= a <= 1.0 for a in rec.task_acc)
    assert r.aaa == np.mean([s.aa for s in r.stages]) and r.acc == r.stages[-1].aa
    assert [f.stage for f in r.fronts] == [2, 3]


def test_rerun_writes_identical_files(tmp_path, small_stream):
    for name in ("a", "b"):
        r = run_experiment(LearnerKind("paretocl"), small_stream, CFG, sweep_grid=uniform_grid(3))
        write_run(r, tmp_path / name)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert {str(f) for f in files} >= {"config.json", "stages.csv", "steps.csv", "summary.json", "model.ckpt",
                                       "fronts/stage_2.csv", "fronts/stage_3.csv"}
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_written_files_reproduce_the_in_memory_result(tmp_path, small_stream):
    r = run_experiment(LearnerKind("paretocl"), small_stream, CFG, sweep_grid=uniform_grid(3))
    write_run(r, tmp_path)
    assert read_stages_csv(tmp_path / "stages.csv") == r.stages
    rows = read_front_csv(tmp_path / "fronts" / "stage_3.csv")
    assert [p for _, p, _ in rows] == r.fronts[-1].points
    assert [p for _, p, on in rows if on] == r.fronts[-1].front
    assert len((tmp_path / "steps.csv").read_text().splitlines()) == len(r.steps) + 1
    cfg = json.loads((tmp_path / "config.json").read_text())
    assert cfg["train"]["k_train"] == 5


def test_er_dps_writes_candidate_table(tmp_path, small_stream):
    r = run_experiment(LearnerKind.er_dps([0.2, 0.8]), small_stream, CFG)
    write_run(r, tmp_path)
    lines = (tmp_path / "dps.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * small_stream.num_tasks
    assert sum(l.endswith(",1") for l in lines[1:]) == small_stream.num_tasks


def test_multi_seed_summary_matches_files(tmp_path):
    results = run_seeds(LearnerKind("paretocl_static"), lambda s: synth_stream(2, 2, 40, 4, 0.6, s), CFG, [0, 1, 2])
    for r in results:
        write_run(r, tmp_path / f"seed_{r.seed}")
    aaa, acc = [], []
    for s in (0, 1, 2):
        recs = read_stages_csv(tmp_path / f"seed_{s}" / "stages.csv")
        a, c = compute_aaa(recs)
        summ = read_summary(tmp_path / f"seed_{s}" / "summary.json")
        assert (summ["aaa"], summ["acc"]) == (a, c)
        aaa.append(a)
        acc.append(c)
    agg = summarize(results)
    assert (agg["aaa_mean"], agg["aaa_std"]) == mean_std(aaa)
    assert (agg["acc_mean"], agg["acc_std"]) == mean_std(acc)


def test_run_errors_carry_context(small_stream):
    t = small_stream.tasks[1]
    bad = replace(t, x_test=t.x_test[:0], y_test=t.y_test[:0], test_ids=t.test_ids[:0])
    stream = replace(small_stream, tasks=(small_stream.tasks[0], bad))
    with pytest.raises(RuntimeError, match=r"er_fixed\(0.5\) \(seed 0\).*empty test set"):
        run_experiment(LearnerKind.er_fixed(0.5), stream, CFG)
