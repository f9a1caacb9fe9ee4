"""Monte Carlo paths of the uniform walk and the hull statistics they carry.

Each path starts at the apex and runs until it lands on row ``M``.  Along
the way it records contacts with the two wedge rays (position 0 and the
last position of a row), which define the discrete hull variables.

Per-path randomness is SplitMix64.  Path ``i`` of an ensemble is seeded
with ``mix64(master_seed ^ mix64(i + GOLDEN))``, where ``mix64`` is the
SplitMix64 finalizer and ``GOLDEN = 0x9E3779B97F4A7C15``.  Results are
written by path index, so they do not depend on the number of threads.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .dist import HullLawSpec, cdf_Y, cdf_Z
from .kernel import WalkKernel, build_kernel
from .geometry import WedgeGeometry

__all__ = [
    "GOLDEN",
    "PathConfig",
    "HullSample",
    "HullVariables",
    "EnsembleResult",
    "SamplerError",
    "mix64",
    "path_seed",
    "compile_tables",
    "run_path",
    "run_ensemble",
    "hull_variables",
    "empirical_cdf",
    "ks_distance",
    "lattice_ks_distance",
    "last_visit_conditional",
    "ensemble_csv",
    "summary_json",
]

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
SIDE_NONE, SIDE_LEFT, SIDE_RIGHT = 0, 1, 2
_SIDE_NAMES = {SIDE_NONE: None, SIDE_LEFT: "Left", SIDE_RIGHT: "Right"}
INCOMPLETE_LIMIT = 1e-3

# numba falls back to another threading layer on its own; the notice is noise
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)


class SamplerError(ValueError):
    """Raised for invalid configurations or too many incomplete paths."""


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def path_seed(master_seed: int, i: int) -> int:
    """Initial SplitMix64 state of path ``i``."""
    return mix64((master_seed & _MASK) ^ mix64((i + GOLDEN) & _MASK))


@dataclass(frozen=True)
class PathConfig:
    geometry: WedgeGeometry
    M: int
    master_seed: int = 0
    max_steps: int | None = None

    def __post_init__(self):
        if self.M <= self.geometry.k0 + 1:
            raise SamplerError(f"M={self.M} must exceed k0 + 1 = {self.geometry.k0 + 1}")
        if self.max_steps is None:
            object.__setattr__(self, "max_steps", 100 * self.M**2)
        if self.max_steps < self.M**2:
            raise SamplerError(f"max_steps={self.max_steps} below M^2={self.M**2}")


@dataclass(frozen=True)
class HullSample:
    exit_j: int  # -1 when the path hit the step cap
    deepest_left_row: int
    deepest_right_row: int
    last_side: str | None
    steps: int

    @property
    def complete(self) -> bool:
        return self.exit_j >= 0


@dataclass(frozen=True)
class HullVariables:
    X: float
    Y: float
    Z: float


@dataclass
class EnsembleResult:
    """Column arrays for an ensemble; ``samples()`` gives per-path records."""

    config: PathConfig
    exit_j: np.ndarray
    deep_left: np.ndarray
    deep_right: np.ndarray
    last_side: np.ndarray
    steps: np.ndarray
    summary: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.exit_j)

    @property
    def complete(self) -> np.ndarray:
        return self.exit_j >= 0

    @property
    def incomplete(self) -> int:
        return int(np.count_nonzero(~self.complete))

    def sample(self, i: int) -> HullSample:
        return HullSample(int(self.exit_j[i]), int(self.deep_left[i]), int(self.deep_right[i]),
                          _SIDE_NAMES[int(self.last_side[i])], int(self.steps[i]))

    def samples(self) -> list[HullSample]:
        return [self.sample(i) for i in range(self.n)]

    def hull(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays X, Y, Z over the complete paths."""
        ok = self.complete
        M = self.config.M
        nM = self.config.geometry.N(M)
        return (self.exit_j[ok] / (nM - 1), self.deep_left[ok] / M, self.deep_right[ok] / M)

    def head(self, n: int) -> "EnsembleResult":
        """The first ``n`` paths, identical to an ensemble run with ``n_paths=n``."""
        r = EnsembleResult(self.config, self.exit_j[:n], self.deep_left[:n], self.deep_right[:n],
                           self.last_side[:n], self.steps[:n])
        r.summary = _summarize(r)
        return r


# ---------------------------------------------------------------- tables

@dataclass(frozen=True)
class KernelTables:
    """Flat per-class transition tables for the compiled walker."""

    ptr: np.ndarray  # class c owns entries ptr[c]:ptr[c+1]
    dk: np.ndarray
    dj: np.ndarray
    cum: np.ndarray  # cumulative probabilities, last entry of a class forced to 1
    top_off: np.ndarray  # class id of (0, k) for top rows k < k0
    n_left: int
    n_right: int
    base_left: int
    base_right: int
    interior: int
    k0: int
    slope: int


def compile_tables(kernel: WalkKernel) -> KernelTables:
    g = kernel.geometry
    classes = [kernel.apex]
    top_off = np.zeros(max(g.k0, 1), dtype=np.int64)
    for k in range(1, g.k0):
        top_off[k] = len(classes)
        classes.extend(kernel.top[k - 1])
    base_left = len(classes)
    classes.extend(kernel.left)
    base_right = len(classes)
    classes.extend(kernel.right)
    interior = len(classes)
    classes.append(kernel.interior)
    ptr = np.zeros(len(classes) + 1, dtype=np.int64)
    dk, dj, cum = [], [], []
    for c, ts in enumerate(classes):
        acc = 0.0
        for t in ts:
            acc += t.p
            dk.append(t.dk)
            dj.append(t.dj)
            cum.append(acc)
        if ts:
            cum[-1] = 1.0  # the final bin absorbs rounding
        ptr[c + 1] = len(dk)
    return KernelTables(ptr, np.array(dk, dtype=np.int64), np.array(dj, dtype=np.int64),
                        np.array(cum), top_off, g.NL, g.NR, base_left, base_right, interior,
                        g.k0, g.lattice.slope)


@numba.njit(cache=True, inline="always")
def _next(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _walk(seed, M, max_steps, ptr, dk, dj, cum, top_off, n_left, n_right,
          base_left, base_right, interior, k0, slope):
    state = seed
    j = 0
    k = 0
    deep_l = 0
    deep_r = 0
    last = 0
    steps = 0
    while steps < max_steps:
        nk = slope * k + 1
        if k == 0:
            c = 0
        elif k < k0:
            c = top_off[k] + j
        elif j < n_left:
            c = base_left + j
        elif j >= nk - n_right:
            c = base_right + (nk - 1 - j)
        else:
            c = interior
        state, u = _next(state)
        e = ptr[c]
        end = ptr[c + 1] - 1
        while e < end and u >= cum[e]:
            e += 1
        k += dk[e]
        j += dj[e]
        steps += 1
        nk = slope * k + 1
        if k > 0:
            if j == 0:
                deep_l = max(deep_l, k)
                if k < M:
                    last = 1
            if j == nk - 1:
                deep_r = max(deep_r, k)
                if k < M:
                    last = 2
        if k == M:
            return j, deep_l, deep_r, last, steps
    return -1, deep_l, deep_r, last, steps


@numba.njit(cache=True, parallel=True)
def _ensemble(seeds, M, max_steps, ptr, dk, dj, cum, top_off, n_left, n_right,
              base_left, base_right, interior, k0, slope):
    n = seeds.shape[0]
    out = np.empty((n, 5), dtype=np.int64)
    for i in numba.prange(n):
        r = _walk(seeds[i], M, max_steps, ptr, dk, dj, cum, top_off, n_left, n_right,
                  base_left, base_right, interior, k0, slope)
        out[i, 0] = r[0]
        out[i, 1] = r[1]
        out[i, 2] = r[2]
        out[i, 3] = r[3]
        out[i, 4] = r[4]
    return out


def _args(tab: KernelTables):
    return (tab.ptr, tab.dk, tab.dj, tab.cum, tab.top_off, tab.n_left, tab.n_right,
            tab.base_left, tab.base_right, tab.interior, tab.k0, tab.slope)


def _kernel_for(config: PathConfig) -> WalkKernel:
    return build_kernel(config.geometry, config.M)


def run_path(kernel: WalkKernel, seed: int, max_steps: int | None = None) -> HullSample:
    """One path from the apex with SplitMix64 state ``seed``."""
    M = kernel.M
    cap = 100 * M * M if max_steps is None else int(max_steps)
    tab = kernel._cache.get("tables") or compile_tables(kernel)
    kernel._cache["tables"] = tab
    r = _walk(np.uint64(seed & _MASK), M, cap, *_args(tab))
    return HullSample(int(r[0]), int(r[1]), int(r[2]), _SIDE_NAMES[int(r[3])], int(r[4]))


def run_ensemble(config: PathConfig, n_paths: int, threads: int | None = None,
                 check: bool = True) -> EnsembleResult:
    """Run ``n_paths`` independent paths; deterministic in ``(master_seed, n_paths)``."""
    if n_paths < 1:
        raise SamplerError("n_paths must be >= 1")
    kernel = _kernel_for(config)
    tab = compile_tables(kernel)
    seeds = np.array([path_seed(config.master_seed, i) for i in range(n_paths)], dtype=np.uint64)
    prev = numba.get_num_threads()
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    try:
        out = _ensemble(seeds, config.M, int(config.max_steps), *_args(tab))
    finally:
        numba.set_num_threads(prev)
    res = EnsembleResult(config, out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(),
                         out[:, 3].copy(), out[:, 4].copy())
    res.summary = _summarize(res)
    if check and res.incomplete > INCOMPLETE_LIMIT * n_paths:
        raise SamplerError(f"{res.incomplete} of {n_paths} paths hit the step cap")
    return res


def hull_variables(sample: HullSample, M: int, geom: WedgeGeometry) -> HullVariables:
    """Normalized hull triple of a complete path."""
    if not sample.complete:
        raise SamplerError("hull variables need a complete path")
    return HullVariables(sample.exit_j / (geom.N(M) - 1), sample.deepest_left_row / M,
                         sample.deepest_right_row / M)


# ------------------------------------------------------------ statistics

@dataclass(frozen=True)
class EmpiricalCDF:
    values: np.ndarray  # sorted

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / len(self.values)

    def left(self, x):
        """Left limit ``P[V < x]``."""
        return np.searchsorted(self.values, x, side="left") / len(self.values)


def empirical_cdf(values) -> EmpiricalCDF:
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    return EmpiricalCDF(v)


def ks_distance(emp, cdf) -> float:
    """Sup distance between an empirical CDF and a continuous ``cdf``.

    ``emp`` is an ``EmpiricalCDF`` or raw values.  The supremum is attained
    at a sample point, approached from either side.
    """
    if not isinstance(emp, EmpiricalCDF):
        emp = empirical_cdf(emp)
    x = np.unique(emp.values)
    F = np.asarray(cdf(x), dtype=float)
    return float(max(np.max(np.abs(emp(x) - F)), np.max(np.abs(emp.left(x) - F))))


def lattice_ks_distance(emp, cdf, support) -> float:
    """Sup distance to a CDF whose law lives on the finite set ``support``.

    Both functions are step functions with jumps only on ``support``, so it
    suffices to compare them there.
    """
    if not isinstance(emp, EmpiricalCDF):
        emp = empirical_cdf(emp)
    s = np.asarray(support, dtype=float)
    return float(np.max(np.abs(emp(s) - np.asarray(cdf(s), dtype=float))))


def discrete_uniform_cdf(n_points: int):
    """CDF of the uniform law on ``{0, 1/(n-1), ..., 1}``."""
    def F(x):
        return np.clip(np.floor(np.asarray(x) * (n_points - 1) + 1e-9) + 1, 0, n_points) / n_points
    return F


def wilson_interval(k: int, n: int, z: float = 2.5758293035489004) -> tuple[float, float]:
    """Wilson score interval; the default ``z`` gives 99% coverage."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass(frozen=True)
class LastVisitTable:
    edges: np.ndarray
    counts: np.ndarray
    right: np.ndarray
    estimate: np.ndarray  # nan for empty bins
    lower: np.ndarray
    upper: np.ndarray
    none_fraction: float

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def last_visit_conditional(result: EnsembleResult, n_bins: int = 10) -> LastVisitTable:
    """Binned ``P[last side = Right | X in bin]`` with Wilson 99% intervals."""
    ok = result.complete
    X = result.hull()[0]
    side = result.last_side[ok]
    touched = side != SIDE_NONE
    none_frac = float(np.mean(~touched)) if len(side) else 0.0
    X, side = X[touched], side[touched]
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    b = np.clip(np.searchsorted(edges, X, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(b, minlength=n_bins)
    right = np.bincount(b, weights=(side == SIDE_RIGHT), minlength=n_bins).astype(np.int64)
    est = np.full(n_bins, np.nan)
    lo, hi = np.zeros(n_bins), np.ones(n_bins)
    for i in range(n_bins):
        if counts[i]:
            est[i] = right[i] / counts[i]
        lo[i], hi[i] = wilson_interval(int(right[i]), int(counts[i]))
    return LastVisitTable(edges, counts, right, est, lo, hi, none_frac)


# ------------------------------------------------------------- output

def _summarize(res: EnsembleResult) -> dict:
    cfg = res.config
    g = cfg.geometry
    M = cfg.M
    nM = g.N(M)
    X, Y, Z = res.hull()
    spec = HullLawSpec.native(g.angles.alpha, g.angles.beta)
    support = np.arange(M + 1) / M
    out = {
        "n": res.n,
        "M": M,
        "geometry": {"alpha": g.angles.alpha, "beta": g.angles.beta,
                     "n_l": g.nL, "n_r": g.nR},
        "master_seed": cfg.master_seed,
        "ks_x": None, "ks_y": None, "ks_z": None,
        "ks_x_continuum": None,
        "incomplete": res.incomplete,
        "mean_steps": float(np.sum(res.steps)) / res.n,
        "last_side_none": float(np.mean(res.last_side == SIDE_NONE)),
    }
    if len(X):
        out["ks_x"] = lattice_ks_distance(X, discrete_uniform_cdf(nM), np.arange(nM) / (nM - 1))
        out["ks_x_continuum"] = ks_distance(X, lambda x: x)
        out["ks_y"] = lattice_ks_distance(Y, lambda y: cdf_Y(y, spec), support)
        out["ks_z"] = lattice_ks_distance(Z, lambda z: cdf_Z(z, spec), support)
    return out


def ensemble_csv(res: EnsembleResult) -> str:
    """Per-path CSV, floats with 17 significant digits."""
    M = res.config.M
    nM = res.config.geometry.N(M)
    buf = io.StringIO()
    buf.write("seed_index,exit_j,X,Y,Z,last_side,steps\n")
    for i in range(res.n):
        e = int(res.exit_j[i])
        side = _SIDE_NAMES[int(res.last_side[i])] or "None"
        if e < 0:
            buf.write(f"{i},{e},,,,{side},{int(res.steps[i])}\n")
            continue
        buf.write(f"{i},{e},{e / (nM - 1):.17g},{res.deep_left[i] / M:.17g},"
                  f"{res.deep_right[i] / M:.17g},{side},{int(res.steps[i])}\n")
    return buf.getvalue()


def summary_json(res: EnsembleResult) -> str:
    return json.dumps(res.summary, indent=2, sort_keys=True)
