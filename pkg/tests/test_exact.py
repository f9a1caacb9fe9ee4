import csv
import io
import math

import numpy as np
import pytest

from rbmwalk import exact
from rbmwalk.geometry import make_geometry
from rbmwalk.kernel import build_kernel

PI = math.pi
THREE = [(PI / 3, PI / 3), (PI / 3, 5 * PI / 12), (2 * PI / 3, PI / 6)]
MORE = THREE + [(PI / 2, PI / 4), (PI / 8, PI / 10), (5 * PI / 6, PI / 12)]


def dense_fundamental(kernel):
    """(I - Q)^{-1} of the full vertex chain, transient vertices only."""
    P = exact.transition_matrix(kernel).toarray()
    n_transient = P.shape[0] - kernel.N(kernel.M)
    Q = P[:n_transient, :n_transient]
    return np.linalg.inv(np.eye(n_transient) - Q), P, n_transient


def row_slices(geom, M):
    off = np.concatenate([[0], np.cumsum([geom.N(k) for k in range(M + 1)])])
    return [slice(off[k], off[k + 1]) for k in range(M + 1)]


@pytest.mark.parametrize("ab", MORE)
def test_uniform_on_rows(ab):
    g = make_geometry(*ab)
    kern = build_kernel(g, g.k0 + 12)
    for d in exact.propagate(kern, 150):
        assert exact.uniformity_deviation(d) <= 1e-12


def test_exit_law_uniform_small_M():
    # M = 2, equilateral: absorbed mass is 1/3 on each base vertex
    g = make_geometry(PI / 3, PI / 3)
    d = exact.propagate(build_kernel(g, 2), 400)[-1]
    absorbed = d.mass[2]
    assert absorbed.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(absorbed, 1 / 3, atol=1e-12)


@pytest.mark.parametrize("ab", MORE)
@pytest.mark.parametrize("M", [2, 6, 15])
def test_green_against_dense_inverse(ab, M):
    g = make_geometry(*ab)
    if M <= g.k0:
        pytest.skip("M must exceed k0")
    kern = build_kernel(g, M)
    Ninv, _, _ = dense_fundamental(kern)
    rows = row_slices(g, M)
    visits = np.array([Ninv[0, rows[k]].sum() for k in range(M)])
    closed = np.array([exact.green_closed(k, M, g) for k in range(M)])
    solved = exact.green_solve(exact.chain1d(g, M)).g
    assert np.allclose(closed, visits, rtol=1e-10, atol=1e-10)
    assert np.allclose(solved, visits, rtol=1e-10, atol=1e-10)
    # each vertex of a row gets the same share, below 1/(a+c)
    ac = g.probs.a + g.probs.c
    for k in range(1, M):
        per = Ninv[0, rows[k]]
        assert np.allclose(per, per.mean(), rtol=1e-9)
        assert per.max() * ac < 1.0


@pytest.mark.parametrize("ab", THREE)
def test_intertwining(ab):
    g = make_geometry(*ab)
    assert exact.intertwining_residual(build_kernel(g, 25), exact.chain1d(g, 25), 80) <= 1e-12


def test_hitting_closed_form():
    # h(k) = (A + B k)/N(k) is harmonic for the row chain; with h(m) = 1 and
    # h(M) = 0 this gives N(m) (M - k) / ((M - m) N(k))
    g = make_geometry(PI / 3, PI / 3)
    chain = exact.chain1d(g, 4000)
    expected = g.N(10) * (4000 - 20) / ((4000 - 10) * g.N(20))
    assert expected == pytest.approx(11 / 21 * 3980 / 3990, abs=1e-15)
    assert exact.hitting_probability_1d(chain, 20, 10) == pytest.approx(expected, abs=1e-10)


def test_hitting_large_horizon():
    g = make_geometry(PI / 3, PI / 3)
    chain = exact.chain1d(g, 400_000)
    assert exact.hitting_probability_1d(chain, 20, 10) == pytest.approx(11 / 21, abs=1e-4)


@pytest.mark.parametrize("ab", [(PI / 3, 5 * PI / 12), (2 * PI / 3, PI / 6)])
def test_hitting_against_dense_walk(ab):
    # row hitting probabilities of the 2-D walk by a dense linear solve; the
    # row chain describes the walk started uniformly on a row, so it matches
    # the row average, not each vertex
    g = make_geometry(*ab)
    M, m = g.k0 + 9, g.k0 + 2
    kern = build_kernel(g, M)
    P = exact.transition_matrix(kern).toarray()
    rows = row_slices(g, M)
    # unknowns: vertices on rows m+1..M-1; killed on row m (value 1) and M (0)
    idx = np.arange(rows[m + 1].start, rows[M - 1].stop)
    A = np.eye(len(idx)) - P[np.ix_(idx, idx)]
    b = P[idx][:, rows[m]].sum(axis=1)
    h = np.linalg.solve(A, b)
    chain = exact.chain1d(g, M)
    for k in range(m + 1, M):
        hk = h[rows[k].start - idx[0]:rows[k].stop - idx[0]]
        assert hk.mean() == pytest.approx(exact.hitting_probability_1d(chain, k, m), abs=1e-11)


def test_bessel_quadratic():
    g = make_geometry(PI / 3, PI / 3)
    f, df, d2f = (lambda x: x * x), (lambda x: 2 * x), (lambda x: 2.0)
    r100 = exact.bessel_generator_residual(g, 100, f, 1.0, df, d2f)
    r200 = exact.bessel_generator_residual(g, 200, f, 1.0, df, d2f)
    assert r100 <= 0.1
    assert r100 / r200 == pytest.approx(2.0, rel=0.2)


def test_bessel_linear():
    # generator of the 3-d Bessel process on f(x) = x is 1/x; at x = 2 this is 1/2
    g = make_geometry(PI / 3, PI / 3)
    vals = [exact.discrete_bessel_generator(g, n, lambda x: x, 2.0) for n in (50, 100, 200)]
    errs = [abs(v - 0.5) for v in vals]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 2e-3


def test_reversal_decreases():
    g = make_geometry(PI / 3, PI / 3)
    res = [exact.reversal_residual(build_kernel(g, M)) for M in (50, 100, 200)]
    assert res[0] > res[1] > res[2]
    assert res[1] < 0.05


def test_reversed_law_is_stochastic():
    g = make_geometry(PI / 3, 5 * PI / 12)
    kern = build_kernel(g, 40)
    k = 20
    for j in range(g.N(k)):
        total = sum(q for _, _, q, _ in exact.reversed_transitions(kern, j, k))
        # the reversed chain leaks only through the apex row, not at row 20
        assert total == pytest.approx(1.0, abs=1e-12)


def test_csv_outputs():
    g = make_geometry(PI / 3, PI / 3)
    rows = list(csv.reader(io.StringIO(exact.green_csv(g, 10))))
    assert rows[0] == ["k", "closed", "solved", "diff"]
    assert len(rows) == 11
    assert all(abs(float(r[3])) < 1e-10 for r in rows[1:])
    u = list(csv.reader(io.StringIO(exact.uniformity_csv(build_kernel(g, 5), 10))))
    assert u[0] == ["n", "k", "deviation"]
    assert max(float(r[2]) for r in u[1:]) < 1e-12
