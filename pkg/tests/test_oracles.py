"""Re-derive the frozen constants with mpmath, independently of the package."""
import mpmath as mp
import pytest

from oracles import (
    ELLIPSE_EXIT,
    ELLIPSE_SUPPORT,
    EXAMPLE2_IMAGE,
    EXAMPLE2_SIDES,
    HILBERT_BALL_HALF,
    POLYDISC_S,
    STRIP_SLICE,
    strip_slice,
)

mp.mp.dps = 30


@pytest.mark.parametrize("t", sorted(STRIP_SLICE))
def test_strip_slice_by_quadrature(t):
    t = mp.mpf(str(t))
    value = mp.quad(lambda x: mp.pi / (4 * mp.cos(mp.pi * x / 2)), [0, t])
    assert abs(value - STRIP_SLICE[float(t)]) < 1e-15
    assert abs(strip_slice(float(t)) - STRIP_SLICE[float(t)]) < 1e-14


def test_cross_ratio_constant():
    # x = 0, y = 1/2, alpha = -1, beta = 1
    x, y, a, b = mp.mpf(0), mp.mpf("0.5"), mp.mpf(-1), mp.mpf(1)
    value = mp.log((abs(x - b) * abs(y - a)) / (abs(x - a) * abs(y - b)))
    assert abs(value - HILBERT_BALL_HALF) < 1e-15


@pytest.mark.parametrize("r", sorted(POLYDISC_S))
def test_polydisc_constant(r):
    assert abs(2 * mp.atanh(mp.mpf(str(r))) - POLYDISC_S[r]) < 1e-15


def test_ellipse_constants():
    # maximise 2 cos s + sin s over the parametrisation (2 cos s, sin s)
    s = mp.findroot(lambda s: -2 * mp.sin(s) + mp.cos(s), 0.4)
    assert abs(2 * mp.cos(s) - ELLIPSE_SUPPORT[0]) < 1e-15
    assert abs(mp.sin(s) - ELLIPSE_SUPPORT[1]) < 1e-15
    t = mp.findroot(lambda t: (t / mp.sqrt(2)) ** 2 / 4 + (t / mp.sqrt(2)) ** 2 - 1, 1)
    assert abs(t - ELLIPSE_EXIT) < 1e-15


def test_example2_constants():
    z = mp.mpf(2)
    w = (1 - z) / (1 + z)
    assert abs(w - EXAMPLE2_IMAGE[0]) < 1e-15
    assert abs((1 - w**2) ** 2 - EXAMPLE2_SIDES[0]) < 1e-15
    assert abs((1 + w) ** 4 - EXAMPLE2_SIDES[1]) < 1e-15
