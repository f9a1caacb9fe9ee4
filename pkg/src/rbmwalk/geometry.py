"""Fitting a triangular lattice to a wedge and basic lattice bookkeeping.

The wedge ``W(alpha, beta)`` opens downward from the origin, with its left
side along ``arg z = alpha - pi`` and its right side along ``arg z = -beta``.
It is covered by the distorted triangular lattice spanned by ``u + v`` and
``-(u + i h)``; row ``k`` of the covering graph starts on the left ray at
``k * x_left`` and holds ``N(k) = (nL + nR + 1) k + 1`` vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "AnglePair",
    "LatticeSolution",
    "LatticeDims",
    "StepProbabilities",
    "WedgeGeometry",
    "GeometryError",
    "cot",
    "solve_lattice",
    "lattice_params",
    "row_size",
    "first_full_row",
    "band_widths",
    "vertex_coordinate",
    "make_geometry",
]

# Tolerance used to snap cotangents and ceil() arguments that sit on an
# integer (or on zero) up to rounding noise.
_SNAP = 1e-12


class GeometryError(ValueError):
    """Raised for angles outside the domain of the lattice construction."""


def cot(x: float) -> float:
    """Cotangent as cos/sin; exact zero is returned at a right angle."""
    c = math.cos(x) / math.sin(x)
    if abs(c) < 1e-15:
        return 0.0
    return c


def _ceil(x: float) -> int:
    # ceil() that ignores rounding noise just above an integer
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


@dataclass(frozen=True)
class AnglePair:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            x = getattr(self, name)
            if not (0.0 < x < math.pi):
                raise GeometryError(f"{name}={x!r} must lie in (0, pi)")

    @property
    def is_wedge(self) -> bool:
        return self.alpha + self.beta < math.pi


@dataclass(frozen=True)
class LatticeSolution:
    nL: int
    nR: int
    phi: float
    psi: float

    @property
    def slope(self) -> int:
        """Growth ``nL + nR + 1`` of the row size from one row to the next."""
        return self.nL + self.nR + 1


@dataclass(frozen=True)
class LatticeDims:
    u: float
    v: float
    h: float


@dataclass(frozen=True)
class StepProbabilities:
    a: float
    b: float
    c: float
    lam: float
    sigma2: float


@dataclass(frozen=True)
class WedgeGeometry:
    angles: AnglePair
    lattice: LatticeSolution
    dims: LatticeDims
    probs: StepProbabilities
    NL: int
    NR: int
    k0: int

    @property
    def nL(self) -> int:
        return self.lattice.nL

    @property
    def nR(self) -> int:
        return self.lattice.nR

    def N(self, k: int) -> int:
        return row_size(k, self.lattice)

    @property
    def x_left(self) -> complex:
        """First-row vertex on the left ray; row k starts at ``k * x_left``."""
        d = self.dims
        return complex(-d.u - self.nL * (d.u + d.v), -d.h)

    @property
    def e1(self) -> float:
        """Horizontal lattice spacing ``u + v``."""
        return self.dims.u + self.dims.v

    def to_dict(self) -> dict:
        d, p, s = self.dims, self.probs, self.lattice
        return {
            "alpha": self.angles.alpha,
            "beta": self.angles.beta,
            "n_l": s.nL,
            "n_r": s.nR,
            "phi": s.phi,
            "psi": s.psi,
            "u": d.u,
            "v": d.v,
            "h": d.h,
            "a": p.a,
            "b": p.b,
            "c": p.c,
            "lambda": p.lam,
            "sigma2": p.sigma2,
            "band_left": self.NL,
            "band_right": self.NR,
            "k0": self.k0,
            "n1": self.N(1),
        }


def _from_integers(ca: float, cb: float, nL: int, nR: int) -> tuple[float, float]:
    """Lattice angles solving the two cotangent equations for given (nL, nR)."""
    n = nL + nR + 1
    cphi = (nR + 1) / n * ca - nL / n * cb
    cpsi = (nL + 1) / n * cb - nR / n * ca
    return _acot(cphi), _acot(cpsi)


def _acot(c: float) -> float:
    if abs(c) < 1e-15:
        return math.pi / 2
    return math.atan2(1.0, c)


def _solve_obtuse(alpha: float, beta: float) -> LatticeSolution:
    # alpha >= pi/2, hence beta < pi/2 and cot(beta) > 0
    ca, cb = cot(alpha), cot(beta)
    k = _ceil(ca + cb)
    ratio = -ca / cb
    l = 1
    while l / (k + l) <= ratio + _SNAP:
        l += 1
    nL, nR = -l, k + l - 1
    phi, psi = _from_integers(ca, cb, nL, nR)
    return LatticeSolution(nL, nR, phi, psi)


def solve_lattice(angles: AnglePair) -> LatticeSolution:
    """Integers (nL, nR) and lattice angles (phi, psi) covering the wedge.

    Follows the constructive proof: both angles acute uses
    ``n = ceil(cot) - 1``; an obtuse or right left angle uses the
    ``k, l`` construction; an obtuse right angle is handled by mirroring.
    A right angle on the right side with an acute left angle takes
    ``nR = 0, psi = pi/2``.
    """
    alpha, beta = angles.alpha, angles.beta
    if not angles.is_wedge:
        raise GeometryError(f"alpha + beta = {alpha + beta!r} must be < pi")
    half = math.pi / 2
    if alpha >= half:
        return _solve_obtuse(alpha, beta)
    if beta > half:
        m = _solve_obtuse(beta, alpha)
        return LatticeSolution(m.nR, m.nL, m.psi, m.phi)
    ca, cb = cot(alpha), cot(beta)
    nL = max(_ceil(ca) - 1, 0)
    nR = max(_ceil(cb) - 1, 0)
    phi, psi = _from_integers(ca, cb, nL, nR)
    return LatticeSolution(nL, nR, phi, psi)


def lattice_params(sol: LatticeSolution) -> tuple[LatticeDims, StepProbabilities]:
    """Lattice dimensions and the isotropic interior step probabilities."""
    phi, psi = sol.phi, sol.psi
    cp, cs = cot(phi), cot(psi)
    dims = LatticeDims(
        u=math.cos(phi) * math.sin(psi),
        v=math.sin(phi) * math.cos(psi),
        h=math.sin(phi) * math.sin(psi),
    )
    if abs(dims.u) < 1e-16:
        dims = LatticeDims(0.0, dims.v, dims.h)
    if abs(dims.v) < 1e-16:
        dims = LatticeDims(dims.u, 0.0, dims.h)
    lam = 0.5 / (cp * (cp + cs) + 1.0 / math.sin(psi) ** 2)
    a = lam * cs * (cp + cs)
    b = lam * (1.0 - cp * cs)
    c = lam * cp * (cp + cs)
    if abs(b) < 1e-16:
        b = 0.0
    return dims, StepProbabilities(a, b, c, lam, 2.0 * (a + c) * dims.h**2)


def row_size(k: int, sol: LatticeSolution) -> int:
    """Number of graph vertices on row ``k``."""
    return sol.slope * k + 1


def band_widths(sol: LatticeSolution) -> tuple[int, int]:
    """Number of left and right boundary vertices carried by every full row."""
    NL = abs(sol.nL) + (1 if sol.nL >= 0 else 0)
    NR = abs(sol.nR) + (1 if sol.nR >= 0 else 0)
    return NL, NR


def first_full_row(sol: LatticeSolution) -> int:
    """First row holding all boundary vertices (0 when nL, nR >= 0)."""
    if sol.nL >= 0 and sol.nR >= 0:
        return 0
    n = sol.slope
    return -(-abs(sol.nL - sol.nR) // n)


def make_geometry(alpha: float, beta: float) -> WedgeGeometry:
    angles = AnglePair(alpha, beta)
    sol = solve_lattice(angles)
    dims, probs = lattice_params(sol)
    NL, NR = band_widths(sol)
    return WedgeGeometry(angles, sol, dims, probs, NL, NR, first_full_row(sol))


def vertex_coordinate(j: int, k: int, geom: WedgeGeometry) -> complex:
    """Planar position of vertex ``j`` (from the left) on row ``k``."""
    if k < 0 or not (0 <= j < geom.N(k)):
        raise IndexError(f"vertex ({j}, {k}) outside the wedge graph")
    return k * geom.x_left + j * geom.e1
