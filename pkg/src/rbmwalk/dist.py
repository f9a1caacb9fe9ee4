"""Triangle maps and the closed-form laws of the hull and exit statistics.

``F(gamma, delta)`` is the Schwarz-Christoffel map of the upper half-plane
onto the triangle with angles ``gamma`` at 0 and ``delta`` at 1, restricted
to the real segment [0, 1]; it equals the regularized incomplete beta
function with parameters ``gamma/pi, delta/pi``.  All angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import betainc, betainc_inv, betainc_inv_pair

__all__ = [
    "TriangleMapParams",
    "HullLawSpec",
    "DomainError",
    "triangle_map",
    "triangle_map_inverse",
    "compose",
    "cdf_X",
    "cdf_Y",
    "cdf_Z",
    "joint_cdf_xz",
    "joint_cdf_xy",
    "joint_cdf_yz",
    "joint_cdf_xyz",
    "last_visit_probability",
    "last_visit_integral",
    "corner_process_cdf",
    "map_hull_between_triangles",
    "reach_probability",
]


class DomainError(ValueError):
    """Raised for arguments or angles outside a formula's domain."""


@dataclass(frozen=True)
class TriangleMapParams:
    gamma_p: float
    delta_p: float

    def __post_init__(self):
        if not (0 < self.gamma_p < 1 and 0 < self.delta_p < 1):
            raise DomainError(f"triangle map exponents {self.gamma_p}, {self.delta_p} not in (0, 1)")

    @classmethod
    def from_angles(cls, gamma: float, delta: float) -> "TriangleMapParams":
        return cls(gamma / math.pi, delta / math.pi)


@dataclass(frozen=True)
class HullLawSpec:
    """Reflection angles (alpha, beta) of the motion in triangle (lam, mu)."""

    alpha: float
    beta: float
    lam: float
    mu: float

    def __post_init__(self):
        for name in ("alpha", "beta", "lam", "mu"):
            x = getattr(self, name)
            if not (0 < x < math.pi):
                raise DomainError(f"{name}={x!r} must lie in (0, pi)")
        if self.lam + self.mu >= math.pi:
            raise DomainError("triangle angles must satisfy lam + mu < pi")

    @property
    def nu(self) -> float:
        return math.pi - self.lam - self.mu

    @classmethod
    def native(cls, alpha: float, beta: float) -> "HullLawSpec":
        """The motion in its own triangle, ``lam = alpha``, ``mu = beta``."""
        return cls(alpha, beta, alpha, beta)


def _unit(x, name="argument"):
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)) or np.any(np.isnan(xa)):
        raise DomainError(f"{name} outside [0, 1]")
    return xa


def triangle_map(z, gamma: float, delta: float):
    """``F_{gamma,delta}(z)`` for ``z`` in [0, 1]."""
    m = TriangleMapParams.from_angles(gamma, delta)
    return betainc(m.gamma_p, m.delta_p, _unit(z))


def triangle_map_inverse(x, gamma: float, delta: float):
    """Inverse of ``triangle_map`` on [0, 1]."""
    m = TriangleMapParams.from_angles(gamma, delta)
    return betainc_inv(m.gamma_p, m.delta_p, _unit(x))


F = triangle_map
Finv = triangle_map_inverse


# Points of [0, 1] are carried as pairs (t, 1 - t).  Near 1 a double cannot
# resolve t, while the complement still can; each step below forms the
# complement algebraically instead of by subtraction.

def _pair(x):
    xa = _unit(x)
    return xa, 1.0 - xa


def _inv_pair(x, xb, gamma, delta):
    """``F^{-1}`` of the point ``(x, xb)`` as a pair, solved from the smaller side."""
    m = TriangleMapParams.from_angles(gamma, delta)
    x, xb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xb, dtype=float))
    use = x <= xb
    z1, w1 = betainc_inv_pair(m.gamma_p, m.delta_p, np.where(use, x, 0.5))
    w2, z2 = betainc_inv_pair(m.delta_p, m.gamma_p, np.where(use, 0.5, xb))
    return np.where(use, z1, z2), np.where(use, w1, w2)


def _map_pair(z, w, gamma, delta):
    """``(F(z), 1 - F(z))``, each evaluated from the smaller of ``z`` and ``w``."""
    m = TriangleMapParams.from_angles(gamma, delta)
    z, w = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(w, dtype=float))
    use_w = w < z
    f = betainc(m.gamma_p, m.delta_p, np.where(use_w, 0.0, z))
    fb = betainc(m.delta_p, m.gamma_p, np.where(use_w, w, 0.0))
    return np.where(use_w, 1.0 - fb, f), np.where(use_w, fb, 1.0 - f)


def _out(v):
    v = np.clip(v, 0.0, 1.0)
    return float(v) if np.ndim(v) == 0 else v


def _diff(hi, lo):
    # F(s_hi) - F(s_lo) from whichever form avoids cancellation near 1
    (f1, g1), (f0, g0) = hi, lo
    return np.where(f0 > 0.5, g0 - g1, f1 - f0)


def compose(x, inner: tuple[float, float], outer: tuple[float, float]):
    """``F_outer(F^{-1}_inner(x))`` without rounding the middle point to 1."""
    z, w = _inv_pair(*_pair(x), *inner)
    return _out(_map_pair(z, w, *outer)[0])


def cdf_X(x, spec: HullLawSpec):
    """P[X <= x]: exit point on the base."""
    return compose(x, (spec.lam, spec.mu), (spec.alpha, spec.beta))


def cdf_Y(y, spec: HullLawSpec):
    """P[Y <= y]: lowest hull point on the left side, relative to its length."""
    return compose(y, (spec.nu, spec.lam), (spec.beta, spec.alpha))


def cdf_Z(z, spec: HullLawSpec):
    """P[Z <= z]: lowest hull point on the right side, relative to its length."""
    return compose(z, (spec.nu, spec.mu), (spec.alpha, spec.beta))


def joint_cdf_xz(x, z, spec: HullLawSpec):
    a, ab = _inv_pair(*_pair(x), spec.lam, spec.mu)
    c, cb = _inv_pair(*_pair(z), spec.nu, spec.mu)
    # s = a c, 1 - s = (1 - a) + a (1 - c)
    return _out(_map_pair(a * c, ab + a * cb, spec.alpha, spec.beta)[0])


def joint_cdf_xy(x, y, spec: HullLawSpec):
    a, ab = _inv_pair(*_pair(y), spec.nu, spec.lam)
    # F^{-1}_{mu,lam}(1 - x) = 1 - F^{-1}_{lam,mu}(x)
    bb, b = _inv_pair(*_pair(x), spec.lam, spec.mu)
    p_hi = _map_pair(a, ab, spec.beta, spec.alpha)
    p_lo = _map_pair(a * b, ab + a * bb, spec.beta, spec.alpha)
    return _out(_diff(p_hi, p_lo))


def joint_cdf_yz(y, z, spec: HullLawSpec):
    a, ab = _inv_pair(*_pair(y), spec.nu, spec.lam)
    c, cb = _inv_pair(*_pair(z), spec.nu, spec.mu)
    a, ab, c, cb = np.broadcast_arrays(a, ab, c, cb)
    den = a + c * ab  # = a + c - a c
    # den = 0 only when y = z = 0; the probability is then 0
    ok = den > 0
    d = np.where(ok, den, 1.0)
    sz, szb = np.where(ok, c / d, 0.0), np.where(ok, a * cb / d, 1.0)
    sy, syb = np.where(ok, a / d, 0.0), np.where(ok, c * ab / d, 1.0)
    # F_{a,b}(sz) + F_{b,a}(sy) - 1 = F_{a,b}(sz) - F_{a,b}(1 - sy)
    v = _diff(_map_pair(sz, szb, spec.alpha, spec.beta), _map_pair(syb, sy, spec.alpha, spec.beta))
    return _out(np.where(ok, v, 0.0))


def joint_cdf_xyz(x, y, z, spec: HullLawSpec):
    """P[X <= x, Y <= y, Z <= z].

    With ``ta = F^{-1}_{nu,lam}(y)`` and ``tb = F^{-1}_{nu,mu}(z)`` the side
    points sit at ``a = 1 - 1/ta`` and ``b = 1/tb`` in half-plane
    coordinates.  Both ratios are rewritten with ``ta * tb`` cleared, which
    keeps them finite at ``y = 0`` or ``z = 0``, where the law vanishes.
    """
    xh, xhb = _inv_pair(*_pair(x), spec.lam, spec.mu)
    ta, tab = _inv_pair(*_pair(y), spec.nu, spec.lam)
    tb, tbb = _inv_pair(*_pair(z), spec.nu, spec.mu)
    xh, xhb, ta, tab, tb, tbb = np.broadcast_arrays(xh, xhb, ta, tab, tb, tbb)
    # (xh - a)/(b - a) = tb (1 - ta + ta xh) / den and -a/(b - a) = tb (1 - ta) / den,
    # den = ta + tb (1 - ta); complements ta (1 - tb + tb (1 - xh)) / den and ta / den
    ok = (ta > 0) & (tb > 0)
    d = np.where(ok, ta + tb * tab, 1.0)
    s1 = np.where(ok, tb * (tab + ta * xh) / d, 0.0)
    s1b = np.where(ok, ta * (tbb + tb * xhb) / d, 1.0)
    s0 = np.where(ok, tb * tab / d, 0.0)
    s0b = np.where(ok, ta / d, 1.0)
    v = _diff(_map_pair(s1, s1b, spec.alpha, spec.beta), _map_pair(s0, s0b, spec.alpha, spec.beta))
    return _out(np.where(ok, v, 0.0))


def last_visit_probability(x, spec: HullLawSpec):
    """P[last side touched before exit is the right side | X = x]."""
    xa = _unit(x)
    if np.any((xa <= 0) | (xa >= 1)):
        raise DomainError("last-visit law needs x in (0, 1)")
    return compose(xa, (spec.lam, spec.mu), (math.pi - spec.alpha, math.pi - spec.beta))


def last_visit_integral(x: float, spec: HullLawSpec) -> float:
    """Same law from its one-dimensional integral representation.

    ``sin(beta)/pi * s^(1-a')(1-s)^(1-b') * int_0^1 t^(1-a'-b') (1-t)^(b'-1) / (1-s t) dt``
    with ``s = F^{-1}_{lam,mu}(x)`` and primes denoting division by pi.
    Independent of the incomplete beta route; used as a test oracle.
    """
    from scipy.integrate import quad

    s = float(Finv(x, spec.lam, spec.mu))
    ap, bp = spec.alpha / math.pi, spec.beta / math.pi
    val, _ = quad(lambda t: 1.0 / (1.0 - s * t), 0.0, 1.0, weight="alg",
                  wvar=(1.0 - ap - bp, bp - 1.0), epsabs=1e-14, epsrel=1e-13, limit=500)
    return math.sin(spec.beta) / math.pi * s ** (1 - ap) * (1 - s) ** (1 - bp) * val


def corner_process_cdf(z, spec: HullLawSpec):
    """Law of ``Z'`` for the motion started from the corner at 1.

    That motion is reflected at (beta, alpha) in the relabelled triangle
    with angles (nu, lam, mu); ``Z'`` is measured from the far corner.
    """
    za = _unit(z)
    w, wb = _inv_pair(1.0 - za, za, spec.mu, spec.lam)
    return _out(_map_pair(w, wb, spec.beta, spec.alpha)[1])


def map_hull_between_triangles(xyz, src: tuple[float, float], dst: tuple[float, float]):
    """Carry hull variables from ``T(src)`` to ``T(dst)`` by the corner-fixing map.

    ``xyz`` is an ``(X, Y, Z)`` triple of scalars or arrays.  The base point
    moves by ``F_dst o F_src^{-1}``; the side points keep their half-plane
    coordinates ``1 - 1/F^{-1}_{nu,left}(y)`` and ``1/F^{-1}_{nu,right}(z)``.
    """
    (a, b), (l, m) = src, dst
    if a + b >= math.pi or l + m >= math.pi:
        raise DomainError("both triangles need angle sums below pi")
    nu1, nu2 = math.pi - a - b, math.pi - l - m
    x, y, z = xyz
    x2 = compose(x, (a, b), (l, m))
    y2 = compose(y, (nu1, a), (nu2, l))
    z2 = compose(z, (nu1, b), (nu2, m))
    return x2, y2, z2


def reach_probability(y, alpha: float, beta: float):
    """Chance that the motion from altitude ``y`` ever reaches the base, for ``alpha + beta > pi``."""
    if alpha + beta <= math.pi:
        raise DomainError("reach probability needs alpha + beta > pi (at alpha + beta = pi it is 1)")
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0):
        raise DomainError("altitude must be >= 0")
    zz = -math.sin(alpha) * math.sin(beta) / math.sin(alpha + beta)
    v = zz / (zz + ya)
    return float(v) if v.ndim == 0 else v
