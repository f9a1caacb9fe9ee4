"""Transition law of the uniform walk on the truncated wedge graph.

Every transition is stored as a row/position offset ``(dk, dj)`` from the
source vertex.  Rows at or below ``max(k0, 1)`` are translation invariant
once positions are counted from the side a band belongs to, so the kernel
keeps one table per vertex class: apex, one per top-block vertex, one per
left and right band index, and one for the interior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import WedgeGeometry

__all__ = [
    "Transition",
    "VertexClass",
    "WalkKernel",
    "KernelError",
    "interior_transitions",
    "apex_transitions",
    "top_block_transitions",
    "left_boundary_transitions",
    "right_boundary_transitions",
    "negative_side_transitions",
    "build_kernel",
    "classify",
    "transitions_at",
    "displacement",
    "expected_step",
    "expected_boundary_step",
    "reflection_angles",
    "audit_kernel",
    "kernel_to_json",
]


class KernelError(ValueError):
    """Raised for inconsistent kernel requests or failed construction."""


@dataclass(frozen=True)
class Transition:
    dk: int
    dj: int
    p: float


@dataclass(frozen=True)
class VertexClass:
    kind: str  # apex | top | left | right | interior | absorbing
    index: int = 0  # band index (counted from its side) or position in a top row
    row: int = 0  # only meaningful for apex/top classes


def _merge(entries):
    # collapse duplicate targets, drop zero-probability entries
    acc: dict[tuple[int, int], float] = {}
    for dk, dj, p in entries:
        acc[(dk, dj)] = acc.get((dk, dj), 0.0) + p
    return tuple(Transition(dk, dj, p) for (dk, dj), p in acc.items() if p != 0.0)


def interior_transitions(geom: WedgeGeometry) -> tuple[Transition, ...]:
    """Six-neighbour step law away from the boundary."""
    a, b, c = geom.probs.a, geom.probs.b, geom.probs.c
    n = geom.nL
    return _merge([
        (-1, -n, a),  # +(u + ih)
        (-1, -n - 1, c),  # -(v - ih)
        (0, 1, b),
        (0, -1, b),
        (1, n, a),  # -(u + ih)
        (1, n + 1, c),  # +(v - ih)
    ])


def apex_transitions(geom: WedgeGeometry) -> tuple[Transition, ...]:
    n1 = geom.N(1)
    return _merge([(1, l, 1.0 / n1) for l in range(n1)])


def top_block_transitions(k: int, geom: WedgeGeometry) -> list[tuple[Transition, ...]]:
    """Per-vertex tables for a row strictly between the apex and row ``k0``."""
    if not (1 <= k < geom.k0):
        raise KernelError(f"row {k} is not in the top block 1..{geom.k0 - 1}")
    a, b, c = geom.probs.a, geom.probs.b, geom.probs.c
    nk, up, down = geom.N(k), geom.N(k - 1), geom.N(k + 1)
    out = []
    for j in range(nk):
        entries = [(-1, l - j, (a + c) / nk) for l in range(up)]
        entries += [(1, l - j, (a + c) / nk) for l in range(down)]
        if j == 0 or j == nk - 1:
            entries.append((0, 0, b))
        if j > 0:
            entries.append((0, -1, b))
        if j < nk - 1:
            entries.append((0, 1, b))
        out.append(_merge(entries))
    return out


def _side_table(n: int, a: float, b: float, c: float, j: int) -> list[tuple[int, int, float]]:
    """Left-band rule for ``n >= 0`` as ``(dk, target index, p)``.

    Target indices count from the same side as ``j`` on the target row.
    """
    if not (0 <= j <= n):
        raise KernelError(f"band index {j} outside 0..{n}")
    if n == 0:
        return [(-1, 0, a), (0, 0, b), (0, 1, b), (1, 0, a + c), (1, 1, c)]
    w = n + 1
    t = [
        (-1, 0, a / w),
        (0, j + 1, (j + 1) * b / w),
        (0, j - 1, j * b / w),
        (0, j, (2 * (n - j) + 1) * b / w),
        (1, 2 * n + 1, c / w),
    ]
    if j == 0:
        t += [(1, n, (a + c) * n / w), (1, 0, a + c)]
    elif j < n:
        t += [(1, j, (a + c) * n / w), (1, n + j, (a + c) * n / w), (1, 2 * j, (a + c) / w)]
    else:
        t.append((1, 2 * n, a + c))
        t += [(1, 2 * (n - m) - 1, (a + c) / w) for m in range(n)]
    return [e for e in t if e[2] != 0.0]


def _from_left(entries, j):
    return _merge((dk, l - j, p) for dk, l, p in entries)


def _from_right(entries, j, slope):
    # source j and target l count from the right end of their rows
    return _merge((dk, dk * slope - (l - j), p) for dk, l, p in entries)


def left_boundary_transitions(j: int, geom: WedgeGeometry) -> tuple[Transition, ...]:
    """Rule at the ``j``-th left band vertex for ``nL >= 0``."""
    if geom.nL < 0:
        raise KernelError("nL < 0: use negative_side_transitions('left', ...)")
    p = geom.probs
    return _from_left(_side_table(geom.nL, p.a, p.b, p.c, j), j)


def right_boundary_transitions(j: int, geom: WedgeGeometry) -> tuple[Transition, ...]:
    """Mirror image of the left rule, ``j`` counted from the right end."""
    if geom.nR < 0:
        raise KernelError("nR < 0: use negative_side_transitions('right', ...)")
    p = geom.probs
    return _from_right(_side_table(geom.nR, p.c, p.b, p.a, j), j, geom.lattice.slope)


def negative_side_transitions(side: str, j: int, geom: WedgeGeometry) -> tuple[Transition, ...]:
    """Band rule on a side with negative ``n``.

    The left side for ``nL < 0`` is the right side of the wedge with
    ``nR' = -nL - 1`` on the same lattice; each step ``S`` there becomes
    ``-S`` here, with band positions matched from the respective sides.
    """
    p = geom.probs
    if side == "left":
        if geom.nL >= 0:
            raise KernelError("negative_side_transitions('left') needs nL < 0")
        table = _side_table(-geom.nL - 1, p.c, p.b, p.a, j)
        return _from_left([(-dk, l, q) for dk, l, q in table], j)
    if side == "right":
        if geom.nR >= 0:
            raise KernelError("negative_side_transitions('right') needs nR < 0")
        table = _side_table(-geom.nR - 1, p.a, p.b, p.c, j)
        return _from_right([(-dk, l, q) for dk, l, q in table], j, geom.lattice.slope)
    raise KernelError(f"unknown side {side!r}")


def _left_rule(j, geom):
    if geom.nL >= 0:
        return left_boundary_transitions(j, geom)
    return negative_side_transitions("left", j, geom)


def _right_rule(j, geom):
    if geom.nR >= 0:
        return right_boundary_transitions(j, geom)
    return negative_side_transitions("right", j, geom)


@dataclass(frozen=True)
class WalkKernel:
    geometry: WedgeGeometry
    M: int
    apex: tuple[Transition, ...]
    top: tuple[tuple[tuple[Transition, ...], ...], ...]  # top[k - 1][j]
    left: tuple[tuple[Transition, ...], ...]
    right: tuple[tuple[Transition, ...], ...]
    interior: tuple[Transition, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def regular_start(self) -> int:
        """First row governed by the band/interior rules."""
        return max(self.geometry.k0, 1)

    def N(self, k: int) -> int:
        return self.geometry.N(k)


def build_kernel(geom: WedgeGeometry, M: int) -> WalkKernel:
    """Assemble the full transition law, absorbing at row ``M``."""
    if M < 2 or M <= geom.k0:
        raise KernelError(f"absorbing row M={M} must be >= 2 and > k0={geom.k0}")
    top = tuple(tuple(top_block_transitions(k, geom)) for k in range(1, geom.k0))
    kern = WalkKernel(
        geometry=geom,
        M=M,
        apex=apex_transitions(geom),
        top=top,
        left=tuple(_left_rule(j, geom) for j in range(geom.NL)),
        right=tuple(_right_rule(j, geom) for j in range(geom.NR)),
        interior=interior_transitions(geom),
    )
    _check_targets(kern)
    return kern


def classify(j: int, k: int, kernel: WalkKernel) -> VertexClass:
    g = kernel.geometry
    nk = g.N(k)
    if k < 0 or k > kernel.M or not (0 <= j < nk):
        raise IndexError(f"vertex ({j}, {k}) outside the truncated graph")
    if k == kernel.M:
        return VertexClass("absorbing", j, k)
    if k == 0:
        return VertexClass("apex", 0, 0)
    if k < g.k0:
        return VertexClass("top", j, k)
    if j < g.NL:
        return VertexClass("left", j, k)
    if j >= nk - g.NR:
        return VertexClass("right", nk - 1 - j, k)
    return VertexClass("interior", j, k)


def transitions_at(j: int, k: int, kernel: WalkKernel) -> tuple[Transition, ...]:
    """Transition list of vertex ``(j, k)``; empty at the absorbing row."""
    cls = classify(j, k, kernel)
    if cls.kind == "absorbing":
        return ()
    if cls.kind == "apex":
        return kernel.apex
    if cls.kind == "top":
        return kernel.top[k - 1][j]
    if cls.kind == "left":
        return kernel.left[cls.index]
    if cls.kind == "right":
        return kernel.right[cls.index]
    return kernel.interior


def _check_targets(kernel: WalkKernel) -> None:
    # every rule has to land on existing vertices; rows are translation
    # invariant from regular_start on, so two regular rows suffice
    g = kernel.geometry
    last = min(kernel.M - 1, kernel.regular_start + 1)
    for k in range(0, last + 1):
        for j in range(g.N(k)):
            for t in transitions_at(j, k, kernel):
                kk, jj = k + t.dk, j + t.dj
                if kk < 0 or not (0 <= jj < g.N(kk)):
                    raise KernelError(f"rule at ({j}, {k}) targets missing vertex ({jj}, {kk})")


def displacement(t: Transition, geom: WedgeGeometry) -> complex:
    """Planar step vector of a transition."""
    return t.dk * geom.x_left + t.dj * geom.e1


def expected_step(entries, geom: WedgeGeometry) -> complex:
    return sum((t.p * displacement(t, geom) for t in entries), 0j)


def expected_boundary_step(kernel: WalkKernel, side: str, tol: float = 1e-13) -> complex:
    """Common expected first step over a boundary band (rows >= k0)."""
    bands = {"left": kernel.left, "right": kernel.right}
    if side not in bands:
        raise KernelError(f"unknown side {side!r}")
    steps = [expected_step(t, kernel.geometry) for t in bands[side]]
    ref = steps[0]
    for i, s in enumerate(steps):
        if abs(s - ref) > tol:
            raise KernelError(f"{side} band index {i} has expected step {s} != {ref}")
    if ref == 0:
        raise KernelError(f"{side} band has zero expected step")
    return ref


def reflection_angles(kernel: WalkKernel) -> tuple[float, float]:
    """Reflection angles (theta_L, theta_R) read off the band expected steps."""
    g = kernel.geometry
    el = expected_boundary_step(kernel, "left")
    er = expected_boundary_step(kernel, "right")
    tl = np.angle(-el) - g.angles.alpha
    tr = -np.angle(er) - g.angles.beta
    return float(np.mod(tl, np.pi)), float(np.mod(tr, np.pi))


def audit_kernel(kernel: WalkKernel, tol: float = 1e-13) -> dict[str, float]:
    """Largest violation of each structural identity of the uniform walk.

    Keys: ``stochastic`` (row sums), ``condition-1`` (incoming mass from the
    rows above and below), ``condition-2`` (incoming mass within the row),
    ``condition-3`` (spread of expected steps over each band).  Row 1 gets
    its mass from the apex, ``1/N(1)`` per vertex, and is checked for that.
    """
    g = kernel.geometry
    M = kernel.M
    a, b, c = g.probs.a, g.probs.b, g.probs.c
    stoch = 0.0
    # incoming[k][delta] arrays: delta = -1 from row above, 0 same, +1 below
    inc = {k: np.zeros((3, g.N(k))) for k in range(M + 1)}
    for k in range(M + 1):
        for j in range(g.N(k)):
            entries = _rule_ignoring_absorption(j, k, kernel)
            stoch = max(stoch, abs(sum(t.p for t in entries) - 1.0))
            for t in entries:
                stoch = max(stoch, -t.p)
                kk = k + t.dk
                if 0 <= kk <= M:
                    inc[kk][t.dk + 1][j + t.dj] += t.p
    cond1 = cond2 = 0.0
    for k in range(1, M):
        from_above = 1.0 / g.N(1) if k == 1 else a + c
        cond1 = max(cond1, np.max(np.abs(inc[k][2] - from_above)))
        cond1 = max(cond1, np.max(np.abs(inc[k][0] - (a + c))))
        cond2 = max(cond2, np.max(np.abs(inc[k][1] - 2 * b)))
    cond3 = 0.0
    for band in (kernel.left, kernel.right):
        steps = [expected_step(t, g) for t in band]
        cond3 = max(cond3, max(abs(s - steps[0]) for s in steps))
    return {"stochastic": stoch, "condition-1": cond1, "condition-2": cond2, "condition-3": cond3}


def _rule_ignoring_absorption(j, k, kernel):
    # the row-M rule is the one row M would use without killing
    if k < kernel.M:
        return transitions_at(j, k, kernel)
    g = kernel.geometry
    nk = g.N(k)
    if j < g.NL:
        return kernel.left[j]
    if j >= nk - g.NR:
        return kernel.right[nk - 1 - j]
    return kernel.interior


def kernel_to_json(kernel: WalkKernel) -> str:
    """Golden-file dump of the per-class transition tables."""

    def entries(ts):
        return [{"dk": t.dk, "dj": t.dj, "p": t.p} for t in ts]

    classes = [{"class": "apex", "row": 0, "entries": entries(kernel.apex)}]
    for k, row in enumerate(kernel.top, start=1):
        for j, ts in enumerate(row):
            classes.append({"class": "top", "row": k, "index": j, "entries": entries(ts)})
    for j, ts in enumerate(kernel.left):
        classes.append({"class": "left", "index": j, "entries": entries(ts)})
    for j, ts in enumerate(kernel.right):
        classes.append({"class": "right", "index": j, "entries": entries(ts)})
    classes.append({"class": "interior", "entries": entries(kernel.interior)})
    doc = {"geometry": kernel.geometry.to_dict(), "M": kernel.M, "classes": classes}
    return json.dumps(doc, indent=1, sort_keys=True)
