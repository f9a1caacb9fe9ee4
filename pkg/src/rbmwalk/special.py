"""Regularized incomplete beta function and its inverse.

Vectorized over numpy arrays.  The forward map uses the modified Lentz
evaluation of the standard continued fraction, applied directly below
``x = (p + 1) / (p + q + 2)`` and through ``I_x(p, q) = 1 - I_{1-x}(q, p)``
above it.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["log_beta", "betainc", "betainc_inv", "betainc_inv_pair", "betainc_pair", "beta_density"]

_TINY = 1e-300
_EPS = 1e-16
_MAX_ITER = 5000
_SMALLEST = 2.2250738585072014e-308  # smallest normal double


def log_beta(p: float, q: float) -> float:
    return math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)


def _cf(p, q, x):
    # modified Lentz for the incomplete beta continued fraction
    qab, qap, qam = p + q, p + 1.0, p - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (q - m) * x / ((qam + m2) * (p + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def _direct(p, q, x, lbeta):
    # I_x(p, q) for x below the switch point, x > 0
    front = np.exp(p * np.log(x) + q * np.log1p(-x) - lbeta) / p
    return front * _cf(p, q, x)


def betainc(p: float, q: float, x):
    """Regularized incomplete beta ``I_x(p, q)`` for ``p, q > 0``, ``x`` in [0, 1]."""
    if p <= 0 or q <= 0:
        raise ValueError("betainc needs p, q > 0")
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)) or np.any(np.isnan(xa)):
        raise ValueError("betainc argument outside [0, 1]")
    flat = np.atleast_1d(xa).ravel()
    out = np.empty_like(flat)
    lb = log_beta(p, q)
    lo = flat <= 0.0
    hi = flat >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    switch = (p + 1.0) / (p + q + 2.0)
    below = mid & (flat < switch)
    above = mid & ~below
    if below.any():
        out[below] = _direct(p, q, flat[below], lb)
    if above.any():
        out[above] = 1.0 - _direct(q, p, 1.0 - flat[above], lb)
    np.clip(out, 0.0, 1.0, out=out)
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def beta_density(p: float, q: float, x):
    """Derivative of ``I_x(p, q)`` in ``x``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.exp((p - 1.0) * np.log(x) + (q - 1.0) * np.log1p(-x) - log_beta(p, q))


def betainc_inv_pair(p: float, q: float, y, tol: float = 1e-12):
    """Solve ``I_z(p, q) = y``; returns ``(z, 1 - z)``.

    The root is found in whichever of ``z`` and ``1 - z`` lies in [0, 1/2],
    so the smaller of the two is accurate to full relative precision even
    when the other rounds to 1.  A root below the smallest normal double,
    where no representable point meets the residual target, is returned as 0
    (or 1 on the complementary side).
    """
    ya = np.asarray(y, dtype=float)
    if np.any((ya < 0) | (ya > 1)) or np.any(np.isnan(ya)):
        raise ValueError("betainc_inv argument outside [0, 1]")
    flat = np.atleast_1d(ya).ravel().copy()
    z = np.where(flat >= 1.0, 1.0, 0.0)
    w = 1.0 - z
    todo = (flat > 0.0) & (flat < 1.0)
    low = todo & (flat <= betainc(p, q, 0.5))
    high = todo & ~low
    low &= flat > betainc(p, q, _SMALLEST)  # otherwise z underflows to 0
    high &= 1.0 - flat > betainc(q, p, _SMALLEST)
    under = todo & ~low & ~high
    z[under] = np.where(flat[under] <= 0.5, 0.0, 1.0)
    w[under] = 1.0 - z[under]
    if low.any():
        z[low] = _newton(p, q, flat[low], tol)
        w[low] = 1.0 - z[low]
    if high.any():
        w[high] = _newton(q, p, 1.0 - flat[high], tol)
        z[high] = 1.0 - w[high]
    if ya.ndim == 0:
        return float(z[0]), float(w[0])
    return z.reshape(ya.shape), w.reshape(ya.shape)


def betainc_inv(p: float, q: float, y, tol: float = 1e-12):
    """Solve ``I_z(p, q) = y`` for ``z`` by bracketed Newton with bisection fallback."""
    return betainc_inv_pair(p, q, y, tol)[0]


def betainc_pair(p: float, q: float, z, w):
    """``I_z(p, q)`` given both ``z`` and ``w = 1 - z``, using the smaller one."""
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    use_w = w < z
    out = np.where(use_w, 1.0 - betainc(q, p, np.where(use_w, w, 0.0)),
                   betainc(p, q, np.where(use_w, 0.0, z)))
    return float(out) if out.ndim == 0 else out


def _newton(p, q, y, tol):
    lb = log_beta(p, q)
    # asymptotic starting points near either end, clipped into (0, 1)
    z_lo = np.exp((np.log(y) + math.log(p) + lb) / p)
    z_hi = 1.0 - np.exp((np.log1p(-y) + math.log(q) + lb) / q)
    z = np.where(y < betainc(p, q, p / (p + q)), z_lo, z_hi)
    z = np.clip(z, 1e-300, 1.0 - 1e-16)
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    for _ in range(200):
        f = betainc(p, q, z) - y
        lo = np.where(f < 0, z, lo)
        hi = np.where(f > 0, z, hi)
        dens = beta_density(p, q, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dens > 0, f / dens, np.inf)
        cand = z - step
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        moved = np.abs(cand - z)
        z = np.where(f == 0, z, cand)
        if np.all((moved <= 4e-16 * np.maximum(z, 1e-300)) | (f == 0)
                  | ((np.abs(f) <= 0.01 * tol) & (moved <= 1e-15))):
            break
    f = np.abs(betainc(p, q, z) - y)
    if np.any(f > tol):
        raise ArithmeticError(f"inverse incomplete beta residual {f.max():g} > {tol:g}")
    return z
