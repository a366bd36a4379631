import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from levy_pide import CapacityError, GridError
from levy_pide.grid import BandedMatrix, build_grid, build_stencil, fd_weights, interior_rows
from levy_pide.splitting import TABLE_WIDTH

TABLE_ROWS = [(0.2763100, 51), (0.1381550, 101), (0.0690776, 201), (0.0345388, 401),
              (0.0172694, 801), (0.0086347, 1601)]


@pytest.mark.parametrize("h, n", TABLE_ROWS)
def test_table_ladder_node_counts(h, n):
    assert build_grid(h, TABLE_WIDTH).size == n
    # the tabulated pairs all satisfy h (N - 1) = width to the printed digits
    assert h * (n - 1) == pytest.approx(TABLE_WIDTH, abs=5e-4)


def test_two_node_grid_rejected():
    with pytest.raises(GridError):
        build_grid(1.0, 1.0)


def test_zero_extension_gives_plain_uniform_grid():
    g = build_grid(0.1, 2.0, jump_extension=0.0)
    assert g.uniform and g.i_lo == 0 and g.i_hi == g.size - 1
    np.testing.assert_allclose(np.diff(g.nodes), 0.1, atol=1e-14)


def test_wings_extend_geometrically():
    g = build_grid(0.1, 2.0, jump_extension=3.0)
    assert not g.uniform
    assert g.nodes[0] == pytest.approx(-4.0) and g.nodes[-1] == pytest.approx(4.0)
    np.testing.assert_allclose(g.inner_nodes, np.linspace(-1, 1, 21), atol=1e-14)
    steps = np.diff(g.nodes[g.i_hi:])
    assert np.all(steps[:-2] < steps[1:-1])


def test_capacity_cap_from_environment(monkeypatch):
    monkeypatch.setenv("LEVY_PIDE_MAX_N", "50")
    with pytest.raises(CapacityError):
        build_grid(0.01, 1.0)


def test_central_first_difference_exact_on_linears():
    g = build_grid(1.0, 10.0)
    out = build_stencil("C", g) @ g.nodes
    rows = interior_rows("C", g.size)
    np.testing.assert_array_equal(out[rows], 1.0)


@pytest.mark.parametrize("h", [0.5, 0.13, 0.01])
def test_second_difference_exact_on_quadratics(h):
    g = build_grid(h, 4.0)
    f = g.nodes ** 2
    rows = interior_rows("C2", g.size)
    np.testing.assert_allclose((build_stencil("C2", g) @ f)[rows], 2.0, rtol=1e-9)
    np.testing.assert_allclose(build_stencil("C2", g, boundary="shift") @ f, 2.0, rtol=1e-9)


def test_b2_coefficients_and_second_order_accuracy():
    g = build_grid(0.5, 6.0)
    m = build_stencil("B2", g).to_dense()
    i = 6
    np.testing.assert_array_equal(m[i, i - 2:i + 1], np.array([1.0, -4.0, 3.0]) / (2 * 0.5))
    # oracle: f = exp, f' = exp; error ratio under halving h -> 4
    errs = []
    for h in (0.1, 0.05, 0.025):
        gg = build_grid(h, 2.0)
        rows = interior_rows("B2", gg.size)
        d = build_stencil("B2", gg) @ np.exp(gg.nodes)
        errs.append(np.max(np.abs(d[rows] - np.exp(gg.nodes[rows]))))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)
    assert np.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.1)


def test_one_sided_stencil_bandwidths():
    g = build_grid(0.1, 2.0)
    assert (build_stencil("B2", g).kl, build_stencil("B2", g).ku) == (2, 0)
    assert (build_stencil("F2", g).kl, build_stencil("F2", g).ku) == (0, 2)
    assert (build_stencil("C2", g).kl, build_stencil("C2", g).ku) == (1, 1)


def test_forward_times_backward_is_second_difference_inside():
    g = build_grid(0.25, 4.0)  # dyadic step keeps the products exact
    fb = build_stencil("F", g).matmul(build_stencil("B", g)).to_dense()
    c2 = build_stencil("C2", g).to_dense()
    np.testing.assert_array_equal(fb[1:-1], c2[1:-1])


def test_one_sided_second_order_needs_uniform_grid():
    g = build_grid(0.1, 2.0, jump_extension=1.0)
    with pytest.raises(GridError):
        build_stencil("F2", g)


def test_nonuniform_central_difference_exact_on_quadratics():
    g = build_grid(0.1, 2.0, jump_extension=1.0)
    rows = interior_rows("C", g.size)
    np.testing.assert_allclose((build_stencil("C", g) @ g.nodes ** 2)[rows], 2 * g.nodes[rows],
                               atol=1e-10)


def test_fd_weights_known_values():
    np.testing.assert_allclose(fd_weights(0.0, [-1.0, 0.0, 1.0], 2), [1.0, -2.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(fd_weights(0.0, [-2.0, -1.0, 0.0], 1), [0.5, -2.0, 1.5], atol=1e-14)


def _banded(n, kl, ku, rng):
    a = rng.standard_normal((n, n))
    i, j = np.indices((n, n))
    a[(i - j > kl) | (j - i > ku)] = 0.0
    return a


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 12), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3),
       st.integers(0, 3), st.integers(0, 2 ** 31))
def test_banded_algebra_matches_dense(n, kl1, ku1, kl2, ku2, seed):
    rng = np.random.default_rng(seed)
    a, b = _banded(n, kl1, ku1, rng), _banded(n, kl2, ku2, rng)
    ba = BandedMatrix.from_dense(a, kl1, ku1)
    bb = BandedMatrix.from_dense(b, kl2, ku2)
    v = rng.standard_normal(n)
    np.testing.assert_allclose(ba @ v, a @ v, atol=1e-12)
    np.testing.assert_allclose(ba.matmul(bb).to_dense(), a @ b, atol=1e-12)
    np.testing.assert_allclose(ba.transpose().to_dense(), a.T)
    np.testing.assert_allclose(ba.plus(bb, -2.0).to_dense(), a - 2.0 * b, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(0, 3), st.integers(0, 3),
       arrays(np.float64, 20, elements=st.floats(-1, 1)))
def test_banded_lu_solves(n, kl, ku, rhs):
    rng = np.random.default_rng(n * 16 + kl * 4 + ku)
    a = _banded(n, kl, ku, rng) + 10.0 * np.eye(n)
    x = BandedMatrix.from_dense(a, kl, ku).lu().solve(rhs[:n])
    np.testing.assert_allclose(a @ x, rhs[:n], atol=1e-12)


def test_from_dense_rejects_entries_outside_band():
    with pytest.raises(GridError):
        BandedMatrix.from_dense(np.ones((3, 3)), 0, 0)
