import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import tube_pair
from oracles import HILBERT_BALL_HALF, STRIP_SLICE
from tubegeo.base_geometry import Ball, Ellipsoid, IntervalProduct, PolytopeBase
from tubegeo.errors import ArgumentError, DomainError
from tubegeo.metrics import (
    ModelSpace,
    affine_lower_bound,
    ball_distance,
    check_hilbert_inequality,
    halfplane_distance,
    hilbert_distance,
    lempert_search,
    lempert_upper_bound,
    model_distance,
    poincare,
    product_distance_tube,
    sphere_directions,
    strip_distance,
)

disc_point = st.builds(
    lambda r, t: r * complex(math.cos(t), math.sin(t)),
    st.floats(0, 0.95), st.floats(0, 2 * math.pi),
)


def mobius(a, theta):
    return lambda z: complex(math.cos(theta), math.sin(theta)) * (z - a) / (1 - a.conjugate() * z)


@pytest.mark.parametrize("lam,mu,expected", [
    (0, 0.5, math.atanh(0.5)),
    (0.5j, -0.5j, math.atanh(0.8)),
    (0.3, 0.3, 0.0),
])
def test_poincare_values(lam, mu, expected):
    assert poincare(lam, mu) == pytest.approx(expected, abs=1e-15)


def test_poincare_near_boundary_is_accurate():
    # 1 - 2^-40 is exact in binary, so the reference has no representation error
    eps = 2.0 ** -40
    assert poincare(0, 1 - eps) == pytest.approx(0.5 * math.log((2 - eps) / eps), rel=1e-12)
    assert poincare(0.9j, 1j * (1 - eps)) > 0


@given(disc_point, disc_point, disc_point)
@settings(max_examples=60, deadline=None)
def test_poincare_axioms(a, b, c):
    assert poincare(a, b) == pytest.approx(poincare(b, a), abs=1e-12)
    assert poincare(a, c) <= poincare(a, b) + poincare(b, c) + 1e-12
    assert poincare(a, a) == 0.0


@given(disc_point, disc_point, disc_point, st.floats(0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_poincare_mobius_invariance(a, b, c, theta):
    m = mobius(c, theta)
    assert poincare(m(a), m(b)) == pytest.approx(poincare(a, b), abs=1e-9)


def test_halfplane_and_strip_against_disc():
    # Cayley (z-1)/(z+1) takes the right half-plane onto the disc
    z, w = 2 + 1j, 0.3 - 2j
    c = lambda u: (u - 1) / (u + 1)
    assert halfplane_distance(z, w) == pytest.approx(poincare(c(z), c(w)), abs=1e-13)
    # {-1 < Re < 1} with w = 0 reproduces the slice oracle
    for t, value in STRIP_SLICE.items():
        assert strip_distance(0, t, -1, 1) == pytest.approx(value, abs=1e-14)
    assert strip_distance(0.2 + 5j, 0.7 + 5j, 0, 1) == pytest.approx(strip_distance(0.2, 0.7, 0, 1), abs=1e-14)
    with pytest.raises(ArgumentError):
        strip_distance(0.5, 2, 0, 1)


def test_ball_distance():
    assert ball_distance([0, 0], [0.5, 0]) == pytest.approx(math.atanh(0.5))
    assert ball_distance([0.3j, 0], [0.3j, 0]) == 0.0
    w, z = np.array([0.2, 0.1j]), np.array([-0.4, 0.5])
    # a unitary map preserves the distance
    U = np.array([[0, 1j], [1, 0]])
    assert ball_distance(U @ w, U @ z) == pytest.approx(ball_distance(w, z), abs=1e-14)
    with pytest.raises(ArgumentError):
        ball_distance([1, 0], [0, 0])


@pytest.mark.parametrize("space,w,z,expected", [
    (ModelSpace("disc"), 0, 0.5, math.atanh(0.5)),
    (ModelSpace("halfplane"), 1, 3, math.asinh(1 / math.sqrt(3))),
    (ModelSpace("polydisc", n=2), [0, 0], [0.5, 0.9], math.atanh(0.9)),
    (ModelSpace("orthant_tube", n=2), [1, 1], [3, 1], math.asinh(1 / math.sqrt(3))),
    (ModelSpace("ball", n=2), [0, 0], [0, 0.5], math.atanh(0.5)),
    (ModelSpace("strip", alpha=-1.0, beta=1.0), 0, 0.5, STRIP_SLICE[0.5]),
    (ModelSpace("interval_product", lo=(-1.0, 0.0), hi=(1.0, 1.0)), [0, 0.5], [0.5, 0.5], STRIP_SLICE[0.5]),
])
def test_model_distance(space, w, z, expected):
    assert model_distance(space, w, z) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("kw", [{"tag": "torus"}, {"tag": "strip", "alpha": 1.0, "beta": 0.0},
                                {"tag": "interval_product", "lo": (0.0,), "hi": (0.0,)}, {"tag": "polydisc", "n": 0}])
def test_model_space_validation(kw):
    with pytest.raises(ArgumentError):
        ModelSpace(**kw)


def test_product_distance_infinite_ends():
    inf = math.inf
    assert product_distance_tube([0.0], [inf], [1.0], [3.0]) == pytest.approx(math.asinh(1 / math.sqrt(3)))
    assert product_distance_tube([-inf], [0.0], [-1.0], [-3.0]) == pytest.approx(math.asinh(1 / math.sqrt(3)))
    assert product_distance_tube([-inf], [inf], [1.0], [5.0]) == 0.0


def test_hilbert_ball_oracle(ball2):
    assert hilbert_distance(ball2, [0, 0], [0.5, 0]) == pytest.approx(HILBERT_BALL_HALF, abs=1e-12)
    assert hilbert_distance(ball2, [0.1, 0.2], [0.1, 0.2]) == 0.0
    assert hilbert_distance(ball2, [0, 0], [0.5, 0], orientation="reversed") < 0
    with pytest.raises(ArgumentError):
        hilbert_distance(ball2, [0, 0], [1.5, 0])


@pytest.mark.parametrize("s,t", [(-0.5, 0.3), (0.1, 0.9), (-0.99, 0.99)])
def test_hilbert_collinear_identity(s, t):
    # on an interval chord h = 2 p(s, t) after the affine map to (-1, 1)
    dom = IntervalProduct([-1.0, -1.0], [1.0, 1.0])
    h = hilbert_distance(dom, [s, 0], [t, 0])
    assert h == pytest.approx(2 * poincare(s, t), abs=1e-9)


def test_hilbert_affine_invariance(rng):
    A = np.array([[2.0, 0.5], [0.0, 1.0]])
    c = np.array([0.3, -1.0])
    tri = PolytopeBase([[0.0, -1.0], [-1.0, 0.0], [1.0, 1.0]], [0.0, 0.0, 1.0])
    Ainv = np.linalg.inv(A)
    image = PolytopeBase(tri.normals @ Ainv, tri.offsets + tri.normals @ Ainv @ c)
    x, y = np.array([0.2, 0.3]), np.array([0.5, 0.1])
    assert hilbert_distance(image, A @ x + c, A @ y + c) == pytest.approx(hilbert_distance(tri, x, y), abs=1e-10)


@pytest.mark.parametrize("n,count", [(1, 5), (2, 8), (3, 20), (4, 10)])
def test_sphere_directions(n, count):
    u = sphere_directions(n, count)
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0)
    assert u.shape[1] == n


def test_affine_lower_bound_exact_on_box():
    box = IntervalProduct([-1.0, 0.0], [1.0, 2.0])
    w, z = np.array([0.1 + 1j, 0.5]), np.array([-0.4, 1.5 - 2j])
    exact = product_distance_tube(box.lo, box.hi, w, z)
    assert affine_lower_bound(box, w, z) == pytest.approx(exact, abs=1e-13)
    assert affine_lower_bound(box, w, w) == 0.0


def test_slice_sandwich(ball2):
    exact = STRIP_SLICE[0.5]
    assert affine_lower_bound(ball2, [0, 0], [0.5, 0]) == pytest.approx(exact, abs=1e-13)
    assert exact <= lempert_upper_bound(ball2, [0, 0], [0.5, 0], degree=2) + 1e-12


def test_lempert_monotone_in_degree(ball2):
    w, z = np.array([0.1, 0.2j]), np.array([-0.3 + 0.5j, 0.1])
    values = [lempert_upper_bound(ball2, w, z, degree=d) for d in (1, 2, 4)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    rep = lempert_search(ball2, w, z, degree=4)
    assert rep.feasible and not rep.fallback and rep.margin > 0
    assert json.loads(json.dumps(rep.to_dict()))["degree"] == 4


@pytest.mark.parametrize("degree,gap", [(1, 0.3), (2, 0.25), (4, 0.1), (8, 0.05)])
def test_lempert_converges_on_box(degree, gap):
    # the exact box distance is the max over strip factors
    box = IntervalProduct([-1.0, -1.0], [1.0, 1.0])
    w, z = np.array([-0.5, 0.0]), np.array([0.5, 0.5])
    exact = product_distance_tube(box.lo, box.hi, w, z)
    upper = lempert_upper_bound(box, w, z, degree=degree)
    assert exact - 1e-12 <= upper <= exact + gap


def test_lempert_guards(ball2):
    assert lempert_upper_bound(ball2, [0.1, 0], [0.1, 0]) == 0.0
    with pytest.raises(ArgumentError):
        lempert_search(ball2, [0, 0], [0.5, 0], degree=0)
    with pytest.raises(DomainError):
        lempert_search(ball2, [0, 0], [2.0, 0])


def test_sandwich_on_ellipsoid(rng):
    from tubegeo.geodesic_solver import kobayashi_distance

    dom = Ellipsoid([1.0, 0.5])
    w, z = tube_pair(dom, rng)
    k = kobayashi_distance(dom, w, z)
    assert affine_lower_bound(dom, w, z) <= k + 1e-9 <= lempert_upper_bound(dom, w, z, degree=2) + 1e-3


def test_hilbert_report(ball2):
    rep = check_hilbert_inequality(ball2, pairs=3, seed=1)
    assert rep.passed and rep.min_slack >= -1e-5
    assert rep.to_csv().splitlines()[0] == "pair,h,2k,slack"
    assert json.loads(rep.to_json())["pairs"] == 3
    bad = check_hilbert_inequality(ball2, pairs=3, seed=1, orientation="reversed")
    assert not bad.passed
