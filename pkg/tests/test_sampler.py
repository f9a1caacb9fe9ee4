import math
from collections import defaultdict

import numpy as np
import pytest

from rbmwalk import exact, sampler
from rbmwalk.acceptance import MC_M
from rbmwalk.geometry import make_geometry
from rbmwalk.kernel import build_kernel, transitions_at
from rbmwalk.sampler import (GOLDEN, PathConfig, SamplerError, empirical_cdf, ks_distance,
                             lattice_ks_distance, run_ensemble, run_path)

PI = math.pi
EQ = (PI / 3, PI / 3)
SKEW = (PI / 3, 5 * PI / 12)


def test_mix64_reference_values():
    # SplitMix64 from state 0: first output is the finalizer of GOLDEN
    assert sampler.mix64(GOLDEN) == 0xE220A8397B1DCDAF
    assert sampler.mix64(2 * GOLDEN) == 0x6E789E6AA1B965F4
    state, u = sampler._next(np.uint64(0))
    assert int(state) == GOLDEN
    assert u == (0xE220A8397B1DCDAF >> 11) / 2.0**53
    assert sampler.path_seed(0, 0) == sampler.mix64(sampler.mix64(GOLDEN))


def test_ks_distance_hand_values():
    uniform = lambda x: np.clip(x, 0, 1)
    # steps of 1/4 at .1,.2,.3,.4; the widest gap is at 0.4, where 1 - 0.4 = 0.6
    assert ks_distance([0.1, 0.2, 0.3, 0.4], uniform) == pytest.approx(0.6, abs=1e-15)
    # left limit matters: one point at 0.9, F jumps 0 -> 1 where U = 0.9
    assert ks_distance([0.9], uniform) == pytest.approx(0.9, abs=1e-15)
    v = np.array([0.0, 0.5, 0.5, 1.0])
    emp = empirical_cdf(v)
    assert lattice_ks_distance(v, emp, [0.0, 0.5, 1.0]) == 0.0
    F = sampler.discrete_uniform_cdf(3)
    assert np.allclose(F(np.array([0.0, 0.5, 1.0])), [1 / 3, 2 / 3, 1.0])
    assert lattice_ks_distance(v, F, [0.0, 0.5, 1.0]) == pytest.approx(1 / 12, abs=1e-15)


def test_wilson_interval():
    lo, hi = sampler.wilson_interval(50, 100)
    z = 2.5758293035489004
    # symmetric at p = 1/2: half width z sqrt(1/(4n) + z^2/(4n^2)) / (1 + z^2/n)
    half = z * math.sqrt(0.25 / 100 + z * z / 40000) / (1 + z * z / 100)
    assert (lo, hi) == pytest.approx((0.5 - half, 0.5 + half), abs=1e-15)
    assert sampler.wilson_interval(0, 0) == (0.0, 1.0)


def test_config_validation():
    g = make_geometry(*EQ)
    with pytest.raises(SamplerError):
        PathConfig(g, g.k0 + 1)
    with pytest.raises(SamplerError):
        PathConfig(g, 10, max_steps=50)
    with pytest.raises(SamplerError):
        run_ensemble(PathConfig(g, 10), 0)
    assert PathConfig(g, 10).max_steps == 10_000


def test_deterministic_and_thread_independent():
    cfg = PathConfig(make_geometry(*SKEW), 30, master_seed=7)
    a = run_ensemble(cfg, 3000)
    b = run_ensemble(cfg, 3000, threads=1)
    for col in ("exit_j", "deep_left", "deep_right", "last_side", "steps"):
        assert np.array_equal(getattr(a, col), getattr(b, col))
    assert sampler.ensemble_csv(a) == sampler.ensemble_csv(b)
    assert sampler.summary_json(a) == sampler.summary_json(b)
    short = run_ensemble(cfg, 500)
    assert sampler.ensemble_csv(a.head(500)) == sampler.ensemble_csv(short)
    other = run_ensemble(PathConfig(cfg.geometry, 30, master_seed=8), 3000)
    assert not np.array_equal(a.exit_j, other.exit_j)


def test_run_path_matches_ensemble():
    cfg = PathConfig(make_geometry(*EQ), 20, master_seed=3)
    res = run_ensemble(cfg, 20)
    kern = build_kernel(cfg.geometry, 20)
    for i in range(20):
        assert run_path(kern, sampler.path_seed(3, i)) == res.sample(i)


def augmented_law(geom, M):
    """Exact joint law of (exit_j, deepest left row, deepest right row, last side).

    Dynamic programming over (vertex, deepL, deepR, last) with the contact
    rules written out independently of the compiled walker.
    """
    kern = build_kernel(geom, M)
    dist = {(0, 0, 0, 0, 0): 1.0}  # (j, k, dl, dr, last)
    out = defaultdict(float)
    while sum(dist.values()) > 1e-15:
        nxt = defaultdict(float)
        for (j, k, dl, dr, last), p in dist.items():
            for t in transitions_at(j, k, kern):
                j2, k2 = j + t.dj, k + t.dk
                dl2, dr2, last2 = dl, dr, last
                if k2 > 0 and j2 == 0:
                    dl2 = max(dl2, k2)
                    last2 = 1 if k2 < M else last2
                if k2 > 0 and j2 == geom.N(k2) - 1:
                    dr2 = max(dr2, k2)
                    last2 = 2 if k2 < M else last2
                key = (j2, k2, dl2, dr2, last2)
                if k2 == M:
                    out[(j2, dl2, dr2, last2)] += p * t.p
                else:
                    nxt[key] += p * t.p
        dist = nxt
    return dict(out)


@pytest.mark.parametrize("ab,M", [(EQ, 2), (EQ, 3), (SKEW, 3)])
def test_joint_hull_law_against_exact_dp(ab, M):
    g = make_geometry(*ab)
    law = augmented_law(g, M)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
    n = 60_000
    res = run_ensemble(PathConfig(g, M, master_seed=11), n)
    counts = defaultdict(int)
    for row in zip(res.exit_j, res.deep_left, res.deep_right, res.last_side):
        counts[tuple(int(v) for v in row)] += 1
    assert set(counts) <= set(law)
    for key, p in law.items():
        se = math.sqrt(p * (1 - p) / n)
        assert abs(counts.get(key, 0) / n - p) <= 4.5 * se + 1e-12, key


@pytest.mark.parametrize("ab,M", [(EQ, 2), (EQ, 3), (SKEW, 3)])
def test_exit_frequencies_uniform(ab, M):
    g = make_geometry(*ab)
    law = augmented_law(g, M)
    exit_p = np.zeros(g.N(M))
    for (j, *_), p in law.items():
        exit_p[j] += p
    # the exit law is uniform on the absorbing row
    assert np.allclose(exit_p, 1 / g.N(M), atol=1e-12)
    res = run_ensemble(PathConfig(g, M, master_seed=5), 40_000)
    freq = np.bincount(res.exit_j, minlength=g.N(M)) / res.n
    se = math.sqrt((1 / g.N(M)) * (1 - 1 / g.N(M)) / res.n)
    assert np.max(np.abs(freq - exit_p)) <= 4.5 * se


def test_side_contact_invariants(mc_cache):
    res = mc_cache.get(EQ, 100_000)
    left = res.last_side == sampler.SIDE_LEFT
    right = res.last_side == sampler.SIDE_RIGHT
    assert np.all(res.deep_left[left] >= 1) and np.all(res.deep_right[right] >= 1)
    none = res.last_side == sampler.SIDE_NONE
    # a path that never touched a ray above row M can only touch at the landing step
    assert np.all(res.deep_left[none] % MC_M == 0) and np.all(res.deep_right[none] % MC_M == 0)
    nM = res.config.geometry.N(MC_M)
    X, Y, Z = res.hull()
    assert np.all(Z[res.exit_j == nM - 1] == 1.0) and np.all(Y[res.exit_j == 0] == 1.0)
    assert np.all((X >= 0) & (X <= 1) & (Y >= 0) & (Y <= 1) & (Z >= 0) & (Z <= 1))


def test_mean_steps_equals_green_sum(mc_cache):
    for ab in (EQ, SKEW):
        res = mc_cache.get(ab, 100_000)
        g = res.config.geometry
        mean = exact.green_solve(exact.chain1d(g, MC_M)).g.sum()
        se = res.steps.std() / math.sqrt(res.n)
        assert abs(res.steps.mean() - mean) <= 4.5 * se


def test_last_visit_table(mc_cache):
    res = mc_cache.get(EQ, 100_000)
    tab = sampler.last_visit_conditional(res, 10)
    assert tab.counts.sum() + round(tab.none_fraction * res.n) == res.n
    # by symmetry the middle of the base is even
    mid = sampler.wilson_interval(int(tab.right[4] + tab.right[5]), int(tab.counts[4] + tab.counts[5]))
    assert mid[0] <= 0.5 <= mid[1]
    assert np.all(np.diff(tab.estimate) > 0)


def test_hull_variables_and_incomplete():
    g = make_geometry(*EQ)
    s = sampler.HullSample(g.N(10) - 1, 3, 10, "Left", 77)
    hv = sampler.hull_variables(s, 10, g)
    assert (hv.X, hv.Y, hv.Z) == (1.0, 0.3, 1.0)
    with pytest.raises(SamplerError):
        sampler.hull_variables(sampler.HullSample(-1, 0, 0, None, 100), 10, g)
    cfg = PathConfig(g, 40, master_seed=1, max_steps=40 * 40)
    res = run_ensemble(cfg, 2000, check=False)
    assert res.incomplete > 0
    assert np.all(res.steps[~res.complete] == 1600)
    with pytest.raises(SamplerError):
        run_ensemble(cfg, 2000)
    assert res.summary["incomplete"] == res.incomplete


def test_csv_and_summary_format():
    cfg = PathConfig(make_geometry(*SKEW), 12, master_seed=2)
    res = run_ensemble(cfg, 50)
    lines = sampler.ensemble_csv(res).splitlines()
    assert lines[0] == "seed_index,exit_j,X,Y,Z,last_side,steps"
    assert len(lines) == 51
    first = lines[1].split(",")
    assert first[0] == "0" and int(first[1]) == res.exit_j[0]
    import json
    summ = json.loads(sampler.summary_json(res))
    assert summ["n"] == 50 and summ["M"] == 12 and summ["master_seed"] == 2
