import numpy as np
import pytest

from paretocl.replay import BufferEmpty, LabeledExample, ReplayBuffer


def ex(i, d=2):
    return LabeledExample(np.full(d, float(i)), i % 3, 0)


def retention(capacity, n, trials, seed=0):
    """Fraction of trials in which each stream item ends up stored."""
    rng = np.random.default_rng(seed)
    counts = np.zeros(n)
    for _ in range(trials):
        buf = ReplayBuffer(capacity, rng)
        for i in range(n):
            buf.observe(ex(i, 1))
        counts[buf.features[: buf.size, 0].astype(int)] += 1
    return counts / trials


def test_underfull_buffer_stores_everything():
    buf = ReplayBuffer(3, np.random.default_rng(0))
    for i in range(3):
        buf.observe(ex(i))
    assert buf.size == 3 and buf.seen_count == 3
    assert sorted(buf.features[:, 0]) == [0.0, 1.0, 2.0]


@pytest.mark.parametrize("capacity,n", [(1, 5), (2, 5)])
def test_reservoir_retention_probability(capacity, n):
    trials = 100_000
    p = capacity / n
    freq = retention(capacity, n, trials)
    sigma = np.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(freq - p) <= 3 * sigma)


def test_size_invariant_and_zero_capacity():
    buf = ReplayBuffer(4, np.random.default_rng(1))
    for i in range(10):
        buf.observe(ex(i))
        assert buf.size == min(buf.seen_count, buf.capacity)
    empty = ReplayBuffer(0, np.random.default_rng(1))
    for i in range(5):
        empty.observe(ex(i))
    assert len(empty) == 0 and empty.seen_count == 5


def test_sample_batch_examples():
    buf = ReplayBuffer(5, np.random.default_rng(0))
    buf.observe(ex(7))
    batch = buf.sample_batch(4, np.random.default_rng(0))
    assert len(batch) == 4 and all(b.label == 7 % 3 and b.features[0] == 7.0 for b in batch)
    with pytest.raises(BufferEmpty):
        ReplayBuffer(5).sample_batch(1, np.random.default_rng(0))


def test_sample_batch_deterministic_given_seed():
    buf = ReplayBuffer(10, np.random.default_rng(0))
    for i in range(10):
        buf.observe(ex(i))
    a = buf.sample_arrays(16, np.random.default_rng(9))
    b = buf.sample_arrays(16, np.random.default_rng(9))
    np.testing.assert_array_equal(a[0], b[0])


def test_sample_batch_uniform_frequency():
    buf = ReplayBuffer(10, np.random.default_rng(0))
    for i in range(10):
        buf.observe(ex(i))
    n = 100_000
    idx = buf.sample_indices(n, np.random.default_rng(3))
    freq = np.bincount(idx, minlength=10) / n
    sigma = np.sqrt(0.1 * 0.9 / n)
    assert np.all(np.abs(freq - 0.1) <= 3 * sigma)


def test_buffer_round_trips_bit_exactly(tmp_path):
    buf = ReplayBuffer(6, np.random.default_rng(5))
    for i in range(20):
        buf.observe(LabeledExample(np.random.default_rng(i).normal(size=3), i % 4, i // 5))
    buf.save(tmp_path / "b.bin")
    back = ReplayBuffer.load(tmp_path / "b.bin")
    np.testing.assert_array_equal(back.features, buf.features)
    np.testing.assert_array_equal(back.labels, buf.labels)
    np.testing.assert_array_equal(back.task_ids, buf.task_ids)
    assert (back.seen_count, back.size) == (buf.seen_count, buf.size)
    # identical generator state: future behaviour matches
    for i in range(20, 40):
        buf.observe(ex(i, 3))
        back.observe(ex(i, 3))
    np.testing.assert_array_equal(back.features, buf.features)
    back.save(tmp_path / "c.bin")
    buf.save(tmp_path / "d.bin")
    assert (tmp_path / "c.bin").read_bytes() == (tmp_path / "d.bin").read_bytes()
