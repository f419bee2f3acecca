import numpy as np
import pytest
from hypothesis import given, strategies as st

from rslab.grid import GridError, TimeGrid, default_grid


def test_uniform_from_h_and_n():
    a = TimeGrid.uniform(2.0, 0.25)
    b = TimeGrid.uniform(2.0, n=8)
    assert a.size == 9
    assert a.same_as(b)
    assert a.h == 0.25


def test_uniform_rejects_non_multiple():
    with pytest.raises(GridError):
        TimeGrid.uniform(1.0, 0.3)


def test_graded_includes_checkpoints():
    g = TimeGrid.graded(10.0, 200, 3.0, include=[0.01, 0.1, 1.0])
    for c in (0.01, 0.1, 1.0, 10.0):
        assert g.nodes[g.index_of(c)] == pytest.approx(c, rel=1e-12)
    assert not g.is_uniform
    with pytest.raises(GridError):
        g.h


def test_graded_rejects_bad_exponent():
    with pytest.raises(GridError):
        TimeGrid.graded(1.0, 10, 0.5)


def test_refine_halves_uniform_step():
    g = TimeGrid.uniform(1.0, 0.1)
    f = g.refine()
    assert f.size == 2 * g.size - 1
    assert f.h == pytest.approx(0.05)
    np.testing.assert_array_equal(f.nodes[::2], g.nodes)


def test_index_of_rejects_off_grid():
    with pytest.raises(GridError):
        TimeGrid.uniform(1.0, 0.1).index_of(0.15)


def test_default_grid_is_graded():
    g = default_grid(5.0, n=100)
    assert g.T == pytest.approx(5.0)
    assert np.all(np.diff(g.nodes) > 0)


@given(st.floats(0.1, 50.0), st.integers(1, 400), st.floats(1.0, 4.0))
def test_graded_nodes_increase(T, n, p):
    g = TimeGrid.graded(T, n, p)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == pytest.approx(T)
    assert np.all(np.diff(g.nodes) > 0)
    # grading puts the smallest steps first
    d = np.diff(g.nodes)
    assert d[0] <= d[-1] * (1 + 1e-12)


def test_nodes_are_read_only():
    g = TimeGrid.uniform(1.0, 0.5)
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0
