import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import POLYDISC_S
from tubegeo.base_geometry import Ball, IntervalProduct, PolytopeBase
from tubegeo.errors import ArgumentError
from tubegeo.gromov import (
    blowup_convergence_check,
    corner_cone,
    interval_quadruple_report,
    polydisc_witness,
    quadruple_report,
    s_four_point,
    witness_search,
)
from tubegeo.metrics import halfplane_distance, poincare

real = st.floats(-10, 10)


@given(real, real, real, real)
@settings(max_examples=50)
def test_s_on_the_line_is_nonpositive(a, b, c, d):
    # R is 0-hyperbolic: S never exceeds 0 up to rounding
    dist = lambda x, y: abs(x - y)
    assert s_four_point(dist, a, b, c, d) <= 1e-12


def test_s_permutation_symmetry():
    d = lambda a, b: poincare(a, b)
    pts = [0.1, 0.5j, -0.3 + 0.2j, 0.7]
    assert s_four_point(d, *pts) == pytest.approx(s_four_point(d, pts[2], pts[3], pts[0], pts[1]), abs=1e-15)


@pytest.mark.parametrize("r,expected", sorted(POLYDISC_S.items()))
def test_polydisc_witness(r, expected):
    rep = polydisc_witness(r)
    assert rep.S == pytest.approx(expected, abs=1e-12)
    assert rep.provenance == "exact model"
    data = json.loads(json.dumps(rep.to_dict()))
    assert data["S"] == rep.S and set(data["points"]) == set("xyzw")


@pytest.mark.parametrize("k", [5, 10, 20])
def test_polydisc_witness_dyadic(k):
    r = 1 - 2.0 ** -k
    assert polydisc_witness(r).S == pytest.approx(2 * math.atanh(r), abs=1e-12)


@pytest.mark.parametrize("r", [0.0, 1.0, -0.2])
def test_polydisc_witness_guard(r):
    with pytest.raises(ArgumentError):
        polydisc_witness(r)


def test_interval_report_brackets_exact():
    d = lambda a, b: poincare(a, b)
    pts = [0.1, 0.5j, -0.3 + 0.2j, 0.7]
    exact = quadruple_report(d, *pts).S
    rep = interval_quadruple_report(lambda a, b: d(a, b) - 0.01, lambda a, b: d(a, b) + 0.01, *pts)
    lo, hi = rep.S_interval
    assert lo <= exact <= hi and rep.S_low == lo
    assert rep.provenance == "bounds-pair"


def test_corner_cone_square(square):
    cone = corner_cone(square, [0.0, 0.0])
    np.testing.assert_allclose(cone.generators, np.eye(2), atol=1e-15)
    assert cone.contains([1.0, 2.0]) and not cone.contains([-1.0, 1.0])
    # the tube over the quadrant is a product of half-planes
    p, q = np.array([1 + 1j, 2.0]), np.array([3.0, 2 - 1j])
    expected = max(halfplane_distance(1 + 1j, 3), halfplane_distance(2, 2 - 1j))
    assert cone.distance(p, q) == pytest.approx(expected, abs=1e-15)
    edge = corner_cone(square, [0.5, 0.0])
    assert edge.normals.shape[0] == 1 and edge.generators is None


def test_corner_cone_triangle(triangle):
    cone = corner_cone(triangle, [1.0, 0.0])
    assert cone.simplicial
    for g in cone.generators:
        assert np.all(cone.normals @ g <= 1e-12)
    # generators point along the two edges leaving the vertex
    dirs = sorted(tuple(np.round(g / np.linalg.norm(g), 12)) for g in cone.generators)
    h = round(math.sqrt(0.5), 12)
    assert dirs == [(-1.0, 0.0), (-h, h)]


def test_corner_cone_guards(square):
    with pytest.raises(ArgumentError):
        corner_cone(square, [0.5, 0.5])
    with pytest.raises(ArgumentError):
        corner_cone(Ball(2), [1.0, 0.0])


def test_blowup_square(square):
    rep = blowup_convergence_check(square, [0.0, 0.0])
    assert rep.k0 == 2
    assert not rep.containment[0]["K_in_tOmega"]
    assert rep.final_gap <= 1e-3 and rep.scaling_error <= 1e-12
    assert rep.trend_decreasing and rep.passed
    assert json.loads(json.dumps(rep.to_dict()))["passed"]


def test_blowup_guard(triangle):
    with pytest.raises(ArgumentError):
        blowup_convergence_check(triangle, [0.0, 0.0])


@pytest.mark.parametrize("space,target", [("polydisc", 10.0), ("square", 10.0), ("square", 15.0)])
def test_witness_search_reaches_target(space, target):
    res = witness_search(space, budget=40, target=target)
    assert res.achieved and res.best >= target
    values = [r.S_low for r in res.reports]
    assert values == sorted(values)
    assert res.to_csv().splitlines()[0] == "k,t_k,S,S_high,x,y,z,w"
    assert json.loads(res.to_json())["achieved"]


def test_witness_search_budget_exhaustion():
    res = witness_search("polydisc", budget=3, target=100.0)
    assert not res.achieved and len(res.reports) == 3


def test_witness_search_random_is_reproducible():
    a = witness_search("square", strategy="random", budget=5, seed=3)
    b = witness_search("square", strategy="random", budget=5, seed=3)
    assert a.to_csv() == b.to_csv()


def test_witness_search_random_smooth_base():
    res = witness_search(Ball(2), budget=2, seed=0)
    assert res.strategy == "random"
    for rep in res.reports:
        lo, hi = rep.S_interval
        assert lo <= hi


@pytest.mark.parametrize("space,strategy", [("torus", None), ("square", "analytic"), ("polydisc", "corner"),
                                            ("square", "annealing")])
def test_witness_search_guards(space, strategy):
    with pytest.raises(ArgumentError):
        witness_search(space, strategy=strategy)
