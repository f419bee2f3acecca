import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rslab.grid import GridError, TimeGrid
from rslab.relaxation import FracParams, relaxation_samples, scalar_inhomogeneous
from rslab.spectral import (BasisMismatch, Domain, Field, ResolventTable, apply_resolvent, build_basis,
                            build_resolvent, cauchy_convolution, mesh, project, series_norms, synthesize,
                            truncation_report)

P = FracParams(0.5, 1.0)


@pytest.fixture(scope="module")
def table():
    basis = build_basis(Domain.interval(), 6)
    return build_resolvent(P, basis, TimeGrid.uniform(4.0, 0.05))


def test_interval_eigenvalues():
    b = build_basis(Domain.interval(math.pi), 3)
    np.testing.assert_allclose(b.lambdas, [1.0, 4.0, 9.0], rtol=1e-14)
    assert build_basis(Domain.interval(), 1).lambda1 == pytest.approx(1.0)


def test_rectangle_eigenvalues_with_tie():
    b = build_basis(Domain.rectangle(), 4)
    np.testing.assert_allclose(b.lambdas, [2.0, 5.0, 5.0, 8.0], rtol=1e-14)
    assert b.modes.tolist() == [[1, 1], [1, 2], [2, 1], [2, 2]]
    np.testing.assert_allclose(b.analytic_lambdas(), b.lambdas)


def test_basis_rejects_empty():
    with pytest.raises(ValueError):
        build_basis(Domain.interval(), 0)


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain("disk", 1.0)
    with pytest.raises(ValueError):
        Domain.rectangle(1.0, -1.0)


def test_project_single_mode():
    b = build_basis(Domain.interval(), 8)
    x = mesh(b.domain, 401)
    vals = math.sqrt(2 / math.pi) * np.sin(2 * x)
    c = project(vals, b).coeffs
    expect = np.zeros(8)
    expect[1] = 1.0
    np.testing.assert_allclose(c, expect, atol=1e-8)


def test_project_zero():
    b = build_basis(Domain.rectangle(), 5)
    assert np.all(project(np.zeros(33 * 33), b).coeffs == 0)


@given(arrays(float, 10, elements=st.floats(-1, 1)))
def test_round_trip_interval(c):
    b = build_basis(Domain.interval(2.0), 10)
    fld = Field(b, c)
    pts = mesh(b.domain, 64)
    back = project(synthesize(fld, pts), b)
    np.testing.assert_allclose(back.coeffs, c, atol=1e-8)


def test_round_trip_rectangle(rng):
    b = build_basis(Domain.rectangle(1.0, 2.0), 12)
    c = rng.uniform(-1, 1, 12)
    pts = mesh(b.domain, 48)
    back = project(synthesize(Field(b, c), pts), b, M=48)
    np.testing.assert_allclose(back.coeffs, c, atol=1e-8)


def test_under_resolved_mesh_warns():
    b = build_basis(Domain.interval(), 20)
    with pytest.warns(RuntimeWarning, match="alias"):
        project(np.zeros(15), b)


def test_synthesize_first_mode():
    b = build_basis(Domain.interval(), 3)
    val = synthesize(Field.mode(b, 1), [math.pi / 2])
    assert val[0] == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    assert np.all(synthesize(Field.zeros(b), [0.3, 1.0]) == 0)


def test_synthesize_outside_domain():
    b = build_basis(Domain.interval(), 3)
    with pytest.raises(ValueError):
        synthesize(Field.zeros(b), [4.0])


def test_parseval(rng):
    b = build_basis(Domain.interval(), 10)
    c = rng.standard_normal(10)
    M = 2001
    x = mesh(b.domain, M)
    w = np.full(M, math.pi / (M - 1))
    w[[0, -1]] /= 2
    u = synthesize(Field(b, c), x)
    assert np.sum(w * u * u) == pytest.approx(np.sum(c * c), rel=1e-6)


def test_field_shape_checked():
    b = build_basis(Domain.interval(), 3)
    with pytest.raises(BasisMismatch):
        Field(b, np.zeros(4))


def test_field_csv(tmp_path):
    b = build_basis(Domain.interval(), 3)
    path = tmp_path / "u.csv"
    Field.mode(b, 2).to_csv(path, mesh(b.domain, 5))
    rows = path.read_text().splitlines()
    assert rows[0] == "x,u" and len(rows) == 6


# ------------------------------------------------------------ resolvent

def test_resolvent_identity_at_zero(table, rng):
    v = Field(table.basis, rng.standard_normal(table.N))
    np.testing.assert_array_equal(apply_resolvent(table, 0, v).coeffs, v.coeffs)


def test_resolvent_norm_bound(table, rng):
    for _ in range(100):
        v = Field(table.basis, rng.standard_normal(table.N))
        i = int(rng.integers(table.grid.size))
        out = apply_resolvent(table, i, v).norm()
        assert out <= table.table[0, i] * v.norm() * (1 + 1e-14)
        assert out <= v.norm() * (1 + 1e-14)


def test_single_mode_matches_relaxation(table):
    s = relaxation_samples(P, 9.0, table.grid)
    for i in (1, 10, 80):
        out = apply_resolvent(table, i, Field.mode(table.basis, 3))
        assert out.coeffs[2] == s.values[i]


def test_resolvent_index_range(table):
    with pytest.raises(IndexError):
        apply_resolvent(table, table.grid.size, Field.zeros(table.basis))


def test_resolvent_basis_mismatch(table):
    other = build_basis(Domain.interval(2.0), 6)
    with pytest.raises(BasisMismatch):
        apply_resolvent(table, 0, Field.zeros(other))


def test_resolvent_needs_uniform_grid():
    with pytest.raises(GridError):
        build_resolvent(P, build_basis(Domain.interval(), 2), TimeGrid.graded(1.0, 10, 2.0))


def test_cauchy_zero(table):
    out = cauchy_convolution(table, np.zeros((table.grid.size, table.N)))
    assert np.all(out == 0)


def test_cauchy_grid_mismatch(table):
    with pytest.raises(GridError):
        cauchy_convolution(table, np.zeros((3, table.N)))


def test_cauchy_constant_bound(table):
    g = np.zeros((table.grid.size, table.N))
    n = 2
    g[:, n - 1] = 0.7
    q = cauchy_convolution(table, g)[:, n - 1]
    lam = table.basis.lambdas[n - 1]
    om = table.row(n)
    assert np.all(q <= 0.7 / lam * (1 - om) + 1e-12)


def test_cauchy_hat_matches_scalar(table):
    j = 17
    hat = np.zeros(table.grid.size)
    hat[j] = 1.0
    for n in (1, 4):
        g = np.zeros((table.grid.size, table.N))
        g[:, n - 1] = hat
        q = cauchy_convolution(table, g)[:, n - 1]
        lam = float(table.basis.lambdas[n - 1])
        ref = scalar_inhomogeneous(P, lam, 0.0, hat, table.grid)
        np.testing.assert_allclose(q, ref, rtol=0, atol=1e-10)


def test_cauchy_fft_matches_direct(table, rng):
    g = rng.standard_normal((table.grid.size, table.N))
    a = cauchy_convolution(table, g)
    b = cauchy_convolution(table, g, method="fft")
    np.testing.assert_allclose(a, b, atol=1e-12)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=6, unique=True))
def test_mode_decoupling(keep):
    basis = build_basis(Domain.interval(), 6)
    tab = _table6()
    rng = np.random.default_rng(len(keep))
    g = rng.standard_normal((tab.grid.size, 6))
    mask = np.zeros(6, bool)
    mask[keep] = True
    full = cauchy_convolution(tab, g)
    restricted = cauchy_convolution(tab, g * mask)
    np.testing.assert_array_equal(restricted[:, mask], full[:, mask])
    assert np.all(restricted[:, ~mask] == 0)
    v = Field(basis, g[3])
    np.testing.assert_array_equal(apply_resolvent(tab, 5, Field(basis, v.coeffs * mask)).coeffs,
                                  apply_resolvent(tab, 5, v).coeffs * mask)


_CACHE = {}


def _table6():
    if "t" not in _CACHE:
        _CACHE["t"] = build_resolvent(P, build_basis(Domain.interval(), 6), TimeGrid.uniform(2.0, 0.05))
    return _CACHE["t"]


def test_spectral_tail_independent_of_N(rng):
    grid = TimeGrid.uniform(2.0, 0.05)
    small = build_resolvent(P, build_basis(Domain.interval(), 4), grid)
    big = build_resolvent(P, build_basis(Domain.interval(), 9), grid)
    g = np.zeros((grid.size, 9))
    g[:, :3] = rng.standard_normal((grid.size, 3))
    a = cauchy_convolution(small, g[:, :4])
    b = cauchy_convolution(big, g)
    np.testing.assert_array_equal(a, b[:, :4])
    assert np.all(b[:, 4:] == 0)


def test_table_csv_round_trip(table, tmp_path):
    path = tmp_path / "table.csv"
    table.to_csv(path)
    assert path.read_text().startswith("# {")
    back = ResolventTable.from_csv(path)
    np.testing.assert_array_equal(back.table, table.table)
    assert back.basis.same_as(table.basis)
    assert back.grid.same_as(table.grid)


def test_truncation_report(table):
    r = truncation_report(table, 40)
    assert r.passed


def test_series_norms():
    s = np.array([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_array_equal(series_norms(s), [5.0, 0.0])
