import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from paretocl.moo import MAXIMIZE, MINIMIZE, ObjectivePoint as P, dominates, mgda_combine, pareto_filter, write_front_csv


def brute_force_front(points, orientation):
    return [p for p in points if not any(dominates(q, p, orientation) for q in points)]


def grid_min_norm(g1, g2, n=10**6):
    gam = np.linspace(0, 1, n)
    # ||gam g1 + (1-gam) g2||^2 expanded to avoid an n x dim array
    a, b, c = g1 @ g1, g1 @ g2, g2 @ g2
    vals = gam**2 * a + 2 * gam * (1 - gam) * b + (1 - gam) ** 2 * c
    i = int(np.argmin(vals))
    return gam[i], vals[i]


def test_dominates_examples():
    assert dominates(P(1, 1), P(2, 2), MINIMIZE)
    assert not dominates(P(1, 2), P(2, 1)) and not dominates(P(2, 1), P(1, 2))
    assert not dominates(P(1, 1), P(1, 1))
    assert dominates(P(2, 2), P(1, 1), MAXIMIZE)
    with pytest.raises(ValueError):
        dominates(P(0, 0), P(1, 1), "sideways")


def test_pareto_filter_examples():
    pts = [P(1, 3), P(2, 2), P(3, 1), P(2, 3)]
    assert pareto_filter(pts) == [P(1, 3), P(2, 2), P(3, 1)]
    assert pareto_filter(pts) == brute_force_front(pts, MINIMIZE)
    assert pareto_filter([P(5, 5)]) == [P(5, 5)]
    same = [P(1, 1, "a"), P(1, 1, "b"), P(1, 1, "c")]
    assert pareto_filter(same) == same
    assert pareto_filter([]) == []


coords = st.integers(0, 6).map(float)


@given(st.lists(st.tuples(coords, coords), max_size=40), st.sampled_from([MINIMIZE, MAXIMIZE]))
def test_pareto_filter_matches_brute_force_with_ties(raw, orientation):
    pts = [P(a, b, i) for i, (a, b) in enumerate(raw)]
    front = pareto_filter(pts, orientation)
    assert front == brute_force_front(pts, orientation)
    assert not any(dominates(p, q, orientation) for p in front for q in front)


def test_mgda_examples():
    g = np.array([0.3, -1.2, 2.0])
    gamma, d = mgda_combine(g, g)
    assert gamma == 0.5
    np.testing.assert_array_equal(d, g)
    gamma, d = mgda_combine([1.0, 0.0], [0.0, 1.0])
    assert gamma == pytest.approx(0.5)
    np.testing.assert_allclose(d, [0.5, 0.5])
    assert grid_min_norm(np.array([1.0, 0.0]), np.array([0.0, 1.0]))[1] == pytest.approx(0.5, abs=1e-6)
    gamma, d = mgda_combine([1.0, 0.0], [2.0, 0.0])
    assert gamma == 1.0
    np.testing.assert_array_equal(d, [1.0, 0.0])
    gamma, d = mgda_combine([1.0, -2.0], [-1.0, 2.0])
    assert gamma == 0.5 and not d.any()


@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6))
def test_mgda_min_norm_properties(v):
    g1, g2 = np.array(v[:3]), np.array(v[3:])
    gamma, d = mgda_combine(g1, g2)
    assert 0 <= gamma <= 1
    assert np.linalg.norm(d) <= min(np.linalg.norm(g1), np.linalg.norm(g2)) + 1e-12
    if np.linalg.norm(d) > 1e-12:
        assert d @ g1 >= -1e-10 * max(1.0, np.linalg.norm(g1) ** 2)
        assert d @ g2 >= -1e-10 * max(1.0, np.linalg.norm(g2) ** 2)


def test_front_csv_flags_dominated_rows(tmp_path):
    write_front_csv(tmp_path / "f.csv", [P(0.9, 0.2, "a"), P(0.5, 0.1, "b"), P(0.3, 0.8, "c")])
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "tag,v1,v2,dominated"
    assert [l.split(",")[-1] for l in lines[1:]] == ["0", "1", "0"]
