import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbmwalk.geometry import make_geometry
from rbmwalk.kernel import (KernelError, audit_kernel, build_kernel, classify,
                            expected_boundary_step, kernel_to_json, reflection_angles,
                            transitions_at)

PI = math.pi
GEOMS = [(PI / 3, PI / 3), (PI / 3, 5 * PI / 12), (2 * PI / 3, PI / 6), (PI / 2, PI / 4),
         (PI / 4, PI / 2), (PI / 8, PI / 10), (5 * PI / 6, PI / 12), (PI / 12, 5 * PI / 6)]


def wedge_angles():
    return st.tuples(st.floats(0.06, 0.9), st.floats(0.06, 0.9)).filter(
        lambda t: t[0] + t[1] < 0.94).map(lambda t: (t[0] * PI, t[1] * PI))


@pytest.mark.parametrize("ab", GEOMS)
def test_audit(ab):
    g = make_geometry(*ab)
    kern = build_kernel(g, g.k0 + 6)
    for name, v in audit_kernel(kern).items():
        assert v <= 1e-13, name


@settings(max_examples=60, deadline=None)
@given(wedge_angles())
def test_audit_random(ab):
    g = make_geometry(*ab)
    kern = build_kernel(g, g.k0 + 4)
    assert max(audit_kernel(kern).values()) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(wedge_angles())
def test_reflection_angles_random(ab):
    g = make_geometry(*ab)
    tl, tr = reflection_angles(build_kernel(g, g.k0 + 3))
    assert tl == pytest.approx(ab[0], abs=1e-10)
    assert tr == pytest.approx(ab[1], abs=1e-10)


def test_equilateral_rules():
    g = make_geometry(PI / 3, PI / 3)
    kern = build_kernel(g, 5)
    assert {(t.dk, t.dj): t.p for t in kern.apex} == pytest.approx({(1, 0): 0.5, (1, 1): 0.5})
    inner = {(t.dk, t.dj): t.p for t in transitions_at(1, 2, kern)}
    assert inner == pytest.approx({(-1, 0): 1 / 6, (-1, -1): 1 / 6, (0, 1): 1 / 6,
                                   (0, -1): 1 / 6, (1, 0): 1 / 6, (1, 1): 1 / 6})
    # left end: no step to position -1, which is off the graph
    left = {(t.dk, t.dj): t.p for t in transitions_at(0, 2, kern)}
    assert sum(left.values()) == pytest.approx(1.0)
    assert all(0 <= 0 + dj < g.N(2 + dk) for dk, dj in left)


def test_expected_boundary_step_direction():
    # reflection at angle alpha = pi/3 from the left ray (arg -2pi/3) turns
    # the mean step to arg -pi/3, i.e. along the right ray, away from the apex
    g = make_geometry(PI / 3, PI / 3)
    e = expected_boundary_step(build_kernel(g, 4), "left")
    assert math.atan2(e.imag, e.real) == pytest.approx(-PI / 3, abs=1e-12)


def test_classes():
    g = make_geometry(2 * PI / 3, PI / 6)
    kern = build_kernel(g, 6)
    assert classify(0, 0, kern).kind == "apex"
    assert classify(1, 2, kern).kind == "top"
    assert classify(0, 3, kern).kind == "left"
    assert classify(g.N(3) - 1, 3, kern).kind == "right"
    assert classify(3, 6, kern).kind == "absorbing"
    assert transitions_at(3, 6, kern) == ()
    with pytest.raises(IndexError):
        classify(g.N(2), 2, kern)


def test_transition_matrix_rows():
    from rbmwalk.exact import transition_matrix
    for ab in GEOMS:
        g = make_geometry(*ab)
        P = transition_matrix(build_kernel(g, g.k0 + 4))
        assert np.allclose(np.asarray(P.sum(axis=1)).ravel(), 1.0, atol=1e-13)
        assert P.min() >= 0


def test_bad_M():
    g = make_geometry(2 * PI / 3, PI / 6)
    with pytest.raises(KernelError):
        build_kernel(g, 3)


def test_json_dump():
    g = make_geometry(PI / 3, PI / 3)
    d = json.loads(kernel_to_json(build_kernel(g, 4)))
    assert d["M"] == 4
