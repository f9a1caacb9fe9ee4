"""Exact finite-state computations for the uniform walk and its row chain.

Includes forward propagation of the vertex distribution, the one-dimensional
row chain it is intertwined with, Green functions of the killed chain,
Nagasawa time reversal, a discrete Bessel-generator check and hitting
probabilities of the row chain.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .geometry import WedgeGeometry
from .kernel import WalkKernel, displacement, transitions_at

__all__ = [
    "RowDistribution",
    "Chain1D",
    "GreenTable",
    "transition_matrix",
    "propagate",
    "uniformity_deviation",
    "chain1d",
    "chain_propagate",
    "intertwining_residual",
    "green_solve",
    "green_closed",
    "reversed_transitions",
    "reversal_residual",
    "discrete_bessel_generator",
    "bessel_generator_residual",
    "hitting_probability_1d",
    "uniformity_csv",
    "green_csv",
]


@dataclass
class RowDistribution:
    """Probability of each vertex, ``mass[k][j]`` for rows ``0..M``.

    Row ``M`` holds the mass absorbed so far.
    """

    mass: list[np.ndarray]

    @property
    def row_mass(self) -> np.ndarray:
        return np.array([m.sum() for m in self.mass])

    @property
    def total(self) -> float:
        return float(sum(m.sum() for m in self.mass))


def _offsets(geom: WedgeGeometry, M: int) -> np.ndarray:
    sizes = np.array([geom.N(k) for k in range(M + 1)])
    return np.concatenate([[0], np.cumsum(sizes)])


def transition_matrix(kernel: WalkKernel) -> sp.csr_matrix:
    """Sparse row-stochastic matrix over all vertices, row ``M`` absorbing."""
    cached = kernel._cache.get("matrix")
    if cached is not None:
        return cached
    g, M = kernel.geometry, kernel.M
    off = _offsets(g, M)
    rows, cols, vals = [], [], []
    for k in range(M):
        for j in range(g.N(k)):
            src = off[k] + j
            for t in transitions_at(j, k, kernel):
                rows.append(src)
                cols.append(off[k + t.dk] + j + t.dj)
                vals.append(t.p)
    for j in range(g.N(M)):
        rows.append(off[M] + j)
        cols.append(off[M] + j)
        vals.append(1.0)
    n = off[-1]
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    kernel._cache["matrix"] = P
    return P


def _split(vec: np.ndarray, off: np.ndarray) -> list[np.ndarray]:
    return [vec[off[k]:off[k + 1]].copy() for k in range(len(off) - 1)]


def propagate(kernel: WalkKernel, n_steps: int) -> list[RowDistribution]:
    """Distributions at times ``0..n_steps`` of the walk started at the apex."""
    off = _offsets(kernel.geometry, kernel.M)
    PT = transition_matrix(kernel).T.tocsr()
    pi = np.zeros(off[-1])
    pi[0] = 1.0
    out = [RowDistribution(_split(pi, off))]
    for _ in range(n_steps):
        pi = PT @ pi
        out.append(RowDistribution(_split(pi, off)))
    return out


def uniformity_deviation(dist: RowDistribution, min_mass: float = 1e-12) -> float:
    """Largest deviation of a row-conditional law from uniform."""
    worst = 0.0
    for m in dist.mass:
        s = m.sum()
        if s > min_mass:
            worst = max(worst, float(np.max(np.abs(m / s - 1.0 / m.size))))
    return worst


@dataclass(frozen=True)
class Chain1D:
    """Row-projection chain on ``0..M`` with ``M`` absorbing."""

    M: int
    stay: np.ndarray  # p(k, k)
    up: np.ndarray  # p(k, k - 1)
    down: np.ndarray  # p(k, k + 1)
    sizes: np.ndarray  # N(k), k = 0..M


def chain1d(geom: WedgeGeometry, M: int) -> Chain1D:
    p = geom.probs
    ac = p.a + p.c
    N = np.array([geom.N(k) for k in range(M + 2)], dtype=float)
    stay = np.full(M + 1, 2 * p.b)
    up = np.zeros(M + 1)
    down = np.zeros(M + 1)
    up[1:] = ac * N[:M] / N[1:M + 1]
    down[1:] = ac * N[2:M + 2] / N[1:M + 1]
    stay[0], down[0] = 0.0, 1.0
    stay[M], up[M], down[M] = 1.0, 0.0, 0.0
    return Chain1D(M, stay, up, down, N[:M + 1])


def chain_propagate(chain: Chain1D, n_steps: int) -> list[np.ndarray]:
    q = np.zeros(chain.M + 1)
    q[0] = 1.0
    out = [q.copy()]
    for _ in range(n_steps):
        nxt = q * chain.stay
        nxt[:-1] += q[1:] * chain.up[1:]
        nxt[1:] += q[:-1] * chain.down[:-1]
        q = nxt
        out.append(q.copy())
    return out


def intertwining_residual(kernel: WalkKernel, chain: Chain1D, n: int) -> float:
    """Max gap between walk row masses and the row chain, over times ``<= n``."""
    walk = propagate(kernel, n)
    rows = chain_propagate(chain, n)
    return max(float(np.max(np.abs(d.row_mass - q))) for d, q in zip(walk, rows))


@dataclass(frozen=True)
class GreenTable:
    g: np.ndarray  # expected visits to row k from row 0 before absorption
    residual: float


def green_solve(chain: Chain1D) -> GreenTable:
    """First row of ``(I - Q)^{-1}`` by a tridiagonal solve."""
    M = chain.M
    if M < 2:
        raise ValueError("green_solve needs M >= 2")
    # g (I - Q) = e0, i.e. (I - Q)^T g = e0; Q is the chain on 0..M-1
    ab = np.zeros((3, M))
    ab[1] = 1.0 - chain.stay[:M]
    ab[0, 1:] = -chain.up[1:M]  # (I-Q)^T[k-1, k] = -Q[k, k-1]
    ab[2, :-1] = -chain.down[:M - 1]  # (I-Q)^T[k+1, k] = -Q[k, k+1]
    rhs = np.zeros(M)
    rhs[0] = 1.0
    g = solve_banded((1, 1), ab, rhs)
    # residual of g (I - Q) - e0
    r = g * (1.0 - chain.stay[:M]) - rhs
    r[:-1] -= g[1:] * chain.up[1:M]
    r[1:] -= g[:-1] * chain.down[:M - 1]
    res = float(np.max(np.abs(r)))
    if res > 1e-8:
        raise ArithmeticError(f"Green function solve residual {res:g}")
    return GreenTable(g, res)


def green_closed(k: int, M: int, geom: WedgeGeometry) -> float:
    """Closed-form expected number of visits of row ``k`` before row ``M``."""
    if not (0 <= k < M):
        raise ValueError(f"row {k} outside 0..{M - 1}")
    ac = geom.probs.a + geom.probs.c
    if k == 0:
        return 1.0 + ac / geom.N(1) * green_closed(1, M, geom)
    Nk = geom.N(k)
    return Nk * (1.0 - Nk / geom.N(M)) / ((geom.N(1) - 1) * ac)


def reversed_transitions(kernel: WalkKernel, j: int, k: int
                         ) -> list[tuple[int, int, float, float]]:
    """Nagasawa reversal at ``(j, k)`` for ``0 < k < M``.

    Returns ``(l, m, q_M, p_reversed)`` for every vertex ``(l, m)`` with a
    transition into ``(j, k)``; ``q_M`` uses the vertex Green function
    ``G'_M[0, m] / N(m)`` and ``p_reversed = p[(l, m), (j, k)]``.
    """
    g, M = kernel.geometry, kernel.M
    if not (0 < k < M):
        raise ValueError(f"row {k} must lie in 1..{M - 1}")

    def G(m):
        return green_closed(m, M, g) / g.N(m)

    out = []
    for m in (k - 1, k, k + 1):
        if m < 0 or m >= M:
            continue
        for l in range(g.N(m)):
            for t in transitions_at(l, m, kernel):
                if m + t.dk == k and l + t.dj == j:
                    out.append((l, m, G(m) * t.p / G(k), t.p))
    return out


def reversal_residual(kernel: WalkKernel, rows: tuple[float, float] = (0.25, 0.5)) -> float:
    """Finite-``M`` distance of the reversed walk from its large-``M`` limit.

    Sum of the largest ``|q_M - p_reversed|`` over interior vertices and the
    largest ``|Im E[step]|`` of the reversed walk over boundary vertices,
    both on rows ``M*rows[0] .. M*rows[1]``.
    """
    g, M = kernel.geometry, kernel.M
    k_lo, k_hi = int(round(M * rows[0])), int(round(M * rows[1]))
    k_lo = max(k_lo, kernel.regular_start + 1)
    worst_q = worst_im = 0.0
    for k in range(k_lo, k_hi + 1):
        nk = g.N(k)
        # interior: translation invariant, one representative suffices
        j_int = g.NL + (nk - g.NL - g.NR) // 2
        boundary = list(range(g.NL)) + list(range(nk - g.NR, nk))
        for j in [j_int] + boundary:
            rev = reversed_transitions(kernel, j, k)
            if j == j_int:
                worst_q = max(worst_q, max(abs(q - p) for _, _, q, p in rev))
            else:
                here = complex(k * g.x_left + j * g.e1)
                step = sum(q * (complex(m * g.x_left + l * g.e1) - here)
                           for l, m, q, _ in rev)
                worst_im = max(worst_im, abs(step.imag))
    return worst_q + worst_im


def discrete_bessel_generator(geom: WedgeGeometry, n: int,
                              f: Callable[[float], float], x: float) -> float:
    """``n^2 (P' f~ - f~)(k)`` at ``k = floor(n sigma x / h)``, ``f~(k) = f(h k / (n sigma))``."""
    p = geom.probs
    h = geom.dims.h
    sigma = np.sqrt(p.sigma2)
    eps = h / (n * sigma)
    k = int(np.floor(n * sigma * x / h))
    if k < 1:
        raise ValueError("n too small: row index must be >= 1")
    ac = p.a + p.c
    Nk, Nu, Nd = geom.N(k), geom.N(k - 1), geom.N(k + 1)
    fk = f(eps * k)
    Pf = ac * (Nd * f(eps * (k + 1)) + Nu * f(eps * (k - 1))) / Nk + 2 * p.b * fk
    return n * n * (Pf - fk)


def bessel_generator_residual(geom: WedgeGeometry, n: int, f, x: float,
                              df, d2f) -> float:
    """Distance of the discrete row-chain generator from ``f'/x + f''/2``."""
    target = df(x) / x + 0.5 * d2f(x)
    return abs(discrete_bessel_generator(geom, n, f, x) - target)


def hitting_probability_1d(chain: Chain1D, k: int, m: int) -> float:
    """Probability that the row chain from ``k`` reaches ``m`` before ``chain.M``."""
    M = chain.M
    if k == m:
        return 1.0
    if not (m < k < M):
        raise ValueError(f"need m < k < M, got m={m}, k={k}, M={M}")
    # unknowns h(m+1..M-1); h(m) = 1, h(M) = 0
    idx = np.arange(m + 1, M)
    n = idx.size
    ab = np.zeros((3, n))
    ab[1] = 1.0 - chain.stay[idx]
    ab[0, 1:] = -chain.down[idx[:-1]]  # coefficient of h(i+1) in row i
    ab[2, :-1] = -chain.up[idx[1:]]  # coefficient of h(i-1) in row i
    rhs = np.zeros(n)
    rhs[0] = chain.up[m + 1]
    h = solve_banded((1, 1), ab, rhs)
    return float(h[k - m - 1])


def _fmt(x) -> str:
    return format(float(x), ".17g")


def uniformity_csv(kernel: WalkKernel, n_steps: int) -> str:
    """CSV with columns n,k,deviation over all times and carrying rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "k", "deviation"])
    for n, d in enumerate(propagate(kernel, n_steps)):
        for k, m in enumerate(d.mass):
            s = m.sum()
            if s > 1e-12:
                w.writerow([n, k, _fmt(np.max(np.abs(m / s - 1.0 / m.size)))])
    return buf.getvalue()


def green_csv(geom: WedgeGeometry, M: int) -> str:
    """CSV with columns k,closed,solved,diff."""
    solved = green_solve(chain1d(geom, M)).g
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "closed", "solved", "diff"])
    for k in range(M):
        c = green_closed(k, M, geom)
        w.writerow([k, _fmt(c), _fmt(solved[k]), _fmt(c - solved[k])])
    return buf.getvalue()
