import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paretocl.stream import iterate, load_tabular, ring_centers, synth_stream, write_tabular


def _assert_well_formed(stream):
    classes = [set(t.classes) for t in stream.tasks]
    assert set().union(*classes) == set(range(stream.total_classes))
    assert sum(len(c) for c in classes) == stream.total_classes
    for t in stream.tasks:
        assert set(np.unique(t.y_train)) <= set(t.classes)
        assert set(np.unique(t.y_test)) <= set(t.classes)
        assert not set(t.train_ids) & set(t.test_ids)


def test_default_structure():
    s = synth_stream(samples_per_class=50)
    assert s.num_tasks == 5 and s.total_classes == 10 and s.in_dim == 8
    assert [t.classes for t in s.tasks] == [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]
    _assert_well_formed(s)
    t = s.tasks[0]
    assert t.y_train.size == 80 and t.y_test.size == 20


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(2, 12), st.integers(0, 100))
def test_generated_streams_are_disjoint_and_split_cleanly(T, c, n, seed):
    if T * c < 2:
        return
    _assert_well_formed(synth_stream(T, c, n, 3, 0.5, seed))


def test_same_seed_gives_identical_streams():
    a, b = synth_stream(samples_per_class=30, seed=5), synth_stream(samples_per_class=30, seed=5)
    for ta, tb in zip(a.tasks, b.tasks):
        assert ta.x_train.tobytes() == tb.x_train.tobytes()
        assert ta.x_test.tobytes() == tb.x_test.tobytes()
    c = synth_stream(samples_per_class=30, seed=6)
    assert c.tasks[0].x_train.tobytes() != a.tasks[0].x_train.tobytes()


def test_tiny_spread_is_separable_by_nearest_center():
    s = synth_stream(samples_per_class=40, spread=1e-4, seed=2)
    centers = ring_centers(s.total_classes, s.in_dim, 2)
    for t in s.tasks:
        d = ((t.x_test[:, None, :] - centers[None]) ** 2).sum(-1)
        assert np.all(np.argmin(d, axis=1) == t.y_test)


def test_synth_validation():
    with pytest.raises(ValueError):
        synth_stream(1, 1)
    with pytest.raises(ValueError):
        synth_stream(spread=0.0)
    with pytest.raises(ValueError):
        synth_stream(samples_per_class=1)


def _write(path, rows, header="f1,f2,label"):
    path.write_text("\n".join([header] + rows) + "\n")
    return path


def test_load_tabular_contiguous_tasks(tmp_path):
    rows = [f"{i}.0,{i * 0.5},{lab}" for i, lab in enumerate([30, 10, 20, 40] * 5)]
    s = load_tabular(_write(tmp_path / "d.csv", rows), 2, seed=1)
    assert [t.classes for t in s.tasks] == [(0, 1), (2, 3)]
    assert s.total_classes == 4 and s.in_dim == 2
    _assert_well_formed(s)
    # label 10 -> class 0: rows 1, 5, 9, ...
    x0 = np.concatenate([s.tasks[0].x_train[s.tasks[0].y_train == 0], s.tasks[0].x_test[s.tasks[0].y_test == 0]])
    assert sorted(x0[:, 0]) == [1.0, 5.0, 9.0, 13.0, 17.0]


def test_load_tabular_errors(tmp_path):
    with pytest.raises(ValueError, match="line 3"):
        load_tabular(_write(tmp_path / "a.csv", ["1,2,0", "1,0"]), 1)
    with pytest.raises(ValueError, match="not an integer"):
        load_tabular(_write(tmp_path / "b.csv", ["1,2,0", "1,2,x"]), 1)
    rows = [f"{i},{i},{i % 10}" for i in range(30)]
    with pytest.raises(ValueError, match="10 classes"):
        load_tabular(_write(tmp_path / "c.csv", rows), 3)


def test_tabular_round_trip_is_exact(tmp_path):
    s = synth_stream(2, 2, 20, 3, 0.7, seed=4)
    write_tabular(tmp_path / "s.csv", s)
    back = load_tabular(tmp_path / "s.csv", 2, seed=4)
    xa = np.concatenate([np.concatenate([t.x_train, t.x_test]) for t in s.tasks])
    xb = np.concatenate([np.concatenate([t.x_train, t.x_test]) for t in back.tasks])
    assert sorted(map(tuple, xa)) == sorted(map(tuple, xb))


def test_iterate_batches():
    s = synth_stream(1, 2, 7, 2, 0.5, seed=0)  # 2 x round(5.6) = 12 training rows
    t = s.tasks[0]
    sizes = [len(y) for _, y in iterate(t, 5, 1, np.random.default_rng(0))]
    assert sizes == [5, 5, 2]
    assert len(list(iterate(t, 5, 5, np.random.default_rng(0)))) == 5 * 3
    a = [y.tolist() for _, y in iterate(t, 5, 2, np.random.default_rng(1))]
    b = [y.tolist() for _, y in iterate(t, 5, 2, np.random.default_rng(1))]
    assert a == b
    with pytest.raises(ValueError):
        list(iterate(t, 0, 1, np.random.default_rng(0)))


def test_iterate_ten_examples_batch_three():
    s = synth_stream(1, 2, 6, 2, 0.5, seed=0)  # 2 x round(4.8) = 10 training rows
    sizes = [len(y) for _, y in iterate(s.tasks[0], 3, 1, np.random.default_rng(0))]
    assert sizes == [3, 3, 3, 1]


def test_training_batches_never_contain_test_rows():
    s = synth_stream(3, 2, 25, 4, 0.5, seed=1)
    for t in s.tasks:
        test_rows = {tuple(r) for r in t.x_test}
        for x, _ in iterate(t, 7, 2, np.random.default_rng(0)):
            assert not {tuple(r) for r in x} & test_rows
