import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tubegeo.base_geometry import Ball, Ellipsoid, Superellipse, support_point
from tubegeo.errors import ArgumentError, DegenerateParamsError, QuadratureError
from tubegeo.geodesic_family import (
    FCase,
    BoundaryProfile,
    GeodesicParams,
    boundary_limits,
    boundary_profile,
    classify_case,
    direction_map,
    f_tilde,
    geodesic_function,
    h_poly,
    schwarz_integral,
    singular_points,
)

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])

CASES = {
    FCase.CIRCLE_EMBEDDING: (0.5 * E1 + 0.5j * E2, np.zeros(2)),
    FCase.SMALL_ARC: (0.5 * E1, np.array([0.0, 1.0])),
    FCase.OPEN_SEMICIRCLE: (0.5 * E1 + 0.5j * E2, E1),
    FCase.TWO_ANTIPODAL_VALUES: (E1 + 0j, np.zeros(2)),
}


def test_params_are_normalised():
    p = GeodesicParams(E1 + 1j * E2, np.zeros(2))
    assert np.sum(np.abs(p.a) ** 2) + np.sum(p.b**2) == pytest.approx(1.0)
    # after normalisation a = (e1 + i e2)/sqrt 2, so F~(0) = 2 Re a = sqrt 2 e1
    np.testing.assert_allclose(f_tilde(p, 0.0), math.sqrt(2) * E1, atol=1e-15)


@pytest.mark.parametrize("a,b", [
    (np.zeros(2, dtype=complex), np.zeros(2)),
    (0.5 * E1 + 0j, E1),          # F~ = (1 + cos t) e1, constant direction
    (0.5 * E1 + 0j, 2 * E1),
])
def test_degenerate_params(a, b):
    with pytest.raises(DegenerateParamsError):
        GeodesicParams(a, b)


def test_shape_mismatch():
    with pytest.raises(ArgumentError):
        GeodesicParams(np.ones(2, dtype=complex), np.ones(3))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(0, 2 * math.pi))
def test_h_poly_on_circle_is_f_tilde(values, t):
    v = np.array(values)
    try:
        p = GeodesicParams(v[:2] + 1j * v[2:4], v[4:])
    except DegenerateParamsError:
        return
    lam = np.exp(1j * t)
    np.testing.assert_allclose(np.conj(lam) * h_poly(p, lam), f_tilde(p, t), atol=1e-12)


def test_dict_roundtrip():
    p = GeodesicParams(0.3 * E1 + 0.2j * E2, np.array([0.1, -0.4]), im_f0=np.array([0.5, 1.0]))
    q = GeodesicParams.from_dict(p.to_dict())
    np.testing.assert_allclose(q.vector(), p.vector())
    np.testing.assert_allclose(q.im_f0, p.im_f0)


@pytest.mark.parametrize("case", list(CASES))
def test_case_labels(case):
    assert classify_case(GeodesicParams(*CASES[case])) is case


def test_small_arc_rank_two_off_ellipse():
    # ellipse in the plane of the base, origin outside it
    p = GeodesicParams(0.5 * E1 + 0.5j * E2, 3.0 * E1)
    assert classify_case(p) is FCase.SMALL_ARC


def test_singular_points_two_arc():
    zeros = singular_points(GeodesicParams(*CASES[FCase.TWO_ANTIPODAL_VALUES]))
    np.testing.assert_allclose(zeros, [math.pi / 2, 3 * math.pi / 2], atol=1e-14)
    F = direction_map(GeodesicParams(E1 + 0j, np.zeros(2)), np.array([0.1, math.pi]))
    np.testing.assert_allclose(F, [E1, -E1], atol=1e-15)


def test_two_arc_profile_closed_form():
    # boundary data sign(cos t) e1 has Schwarz integral (4/pi) atan(lam) e1
    f = geodesic_function(Ball(2), GeodesicParams(E1 + 0j, np.zeros(2)))
    lam = np.array([0.3, 0.5j, -0.2 + 0.7j, 0.9 * np.exp(0.4j)])
    np.testing.assert_allclose(f(lam)[:, 0], 4 / math.pi * np.arctan(lam), atol=1e-12)
    np.testing.assert_allclose(f(lam)[:, 1], 0, atol=1e-12)


def _quad_schwarz(domain, params, lam):
    def g(t, k, part):
        v = support_point(domain, f_tilde(params, t))[k]
        kern = (np.exp(1j * t) + lam) / (np.exp(1j * t) - lam)
        return (kern * v).real if part == 0 else (kern * v).imag

    out = []
    for k in range(params.dim):
        re = quad(g, 0, 2 * math.pi, args=(k, 0), limit=400, epsabs=1e-13)[0]
        im = quad(g, 0, 2 * math.pi, args=(k, 1), limit=400, epsabs=1e-13)[0]
        out.append((re + 1j * im) / (2 * math.pi))
    return np.array(out)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("domain,atol", [
    (Ball(2), 1e-9),
    (Ellipsoid([1.0, 0.5]), 1e-9),
    # zero curvature at the axis points: the support map is only Holder, coefficients decay slowly
    (Superellipse([1.0, 1.0], 4), 2e-6),
])
def test_schwarz_integral_matches_quadrature(domain, atol):
    params = GeodesicParams(0.4 * E1 + 0.3j * E2, np.array([0.1, -0.2]))
    profile = boundary_profile(domain, params)
    for lam in (0.0, 0.4 + 0.3j, -0.6j):
        np.testing.assert_allclose(profile.evaluate(np.array([lam]))[0], _quad_schwarz(domain, params, lam),
                                   atol=atol)


def test_schwarz_with_jumps_matches_quadrature():
    dom = Ellipsoid([1.0, 0.5])
    params = GeodesicParams(0.5 * E1 + 0.2j * E2, 0.4 * E2)
    profile = boundary_profile(dom, params)
    assert len(profile.jumps) in (1, 2)
    lam = 0.35 - 0.2j
    np.testing.assert_allclose(profile.evaluate(np.array([lam]))[0], _quad_schwarz(dom, params, lam), atol=1e-7)


def test_schwarz_integral_guards():
    params = GeodesicParams(*CASES[FCase.CIRCLE_EMBEDDING])
    profile = boundary_profile(Ball(2), params)
    with pytest.raises(ArgumentError):
        schwarz_integral(profile, None, 0.9995)
    assert schwarz_integral(profile, [1.0, 2.0], 0.0)[1] == pytest.approx(2j, abs=1e-15)
    coarse = boundary_profile(Ellipsoid([1.0, 0.2]), GeodesicParams(0.5 * E1 + 0.1j * E2, 0.2 * E2), M=64)
    with pytest.raises(QuadratureError):
        schwarz_integral(coarse, None, 0.99, tol=1e-14)


def test_real_part_at_zero_is_mean_of_boundary():
    dom = Ellipsoid([1.0, 0.5])
    params = GeodesicParams(0.4 * E1 + 0.3j * E2, np.array([0.1, -0.2]))
    prof = boundary_profile(dom, params)
    np.testing.assert_allclose(prof.evaluate(np.array([0.0]))[0].real, prof.values.mean(axis=0), atol=1e-13)


def test_adaptive_grid_reaches_tolerance():
    prof = boundary_profile(Ellipsoid([1.0, 0.3]), GeodesicParams(0.4 * E1 + 0.3j * E2, np.array([0.1, -0.2])))
    assert prof.tail <= 1e-13 and prof.M >= 1024
    with pytest.raises(ArgumentError):
        boundary_profile(Ball(2), GeodesicParams(E1 + 0j, np.zeros(2)), M=32)


def test_from_samples_constant():
    prof = BoundaryProfile.from_samples(np.ones(128))
    np.testing.assert_allclose(prof.evaluate(np.array([0.5 + 0.1j])), [[1.0]], atol=1e-15)


def test_continuous_case_boundary_on_base():
    rep = boundary_limits(Ellipsoid([1.0, 0.5]), GeodesicParams(*CASES[FCase.CIRCLE_EMBEDDING]))
    assert rep.continuous and rep.boundary_max_rho < 1e-6 and rep.boundary_max_dev < 1e-6


def test_two_arc_limits():
    rep = boundary_limits(Ball(2), GeodesicParams(*CASES[FCase.TWO_ANTIPODAL_VALUES]))
    assert not rep.continuous and len(rep.singular) == 2
    signs = {s.im_sign for s in rep.singular}
    assert signs == {-1, 1}
    for s in rep.singular:
        assert s.segment_distance < 1e-6
        assert s.monotone
        assert s.threshold_eps < 1e-20
    np.testing.assert_allclose(np.abs(rep.arc_values[0][0]), 1.0)


def test_semicircle_single_jump():
    rep = boundary_limits(Ball(2), GeodesicParams(*CASES[FCase.OPEN_SEMICIRCLE]))
    assert len(rep.singular) == 1
    np.testing.assert_allclose(rep.singular[0].angle, math.pi, atol=1e-12)


def test_profile_derivative_matches_difference_quotient():
    prof = boundary_profile(Ellipsoid([1.0, 0.5]), GeodesicParams(*CASES[FCase.TWO_ANTIPODAL_VALUES]))
    lam = np.array([0.3 + 0.2j, -0.7j, 0.95])
    h = 1e-6
    fd = (prof.evaluate(lam + h) - prof.evaluate(lam - h)) / (2 * h)
    np.testing.assert_allclose(prof.derivative(lam), fd, atol=1e-6)


@pytest.mark.parametrize("count", [1, 63, 64, 65, 1000])
def test_blockwise_powers(count):
    from tubegeo.geodesic_family import _powers

    lam = np.array([0.99j, -0.5 + 0.5j, 0.0])
    np.testing.assert_allclose(_powers(lam, count), lam[:, None] ** np.arange(count), atol=1e-13)
