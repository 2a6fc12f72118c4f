"""Biholomorphic reference models with exact distances.

* The tube over the paraboloid ``{x1 > x2^2}`` is mapped onto the Siegel
  domain ``{Re w1 > |w2|^2}`` and then by a Cayley map onto the unit ball.
* The tube over ``{x in (0, inf)^2 : x1 x2 > 1}`` is mapped by the
  componentwise Cayley involution ``z -> (1 - z)/(1 + z)`` into the bidisc.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ArgumentError
from .metrics import affine_lower_bound, ball_distance, halfplane_distance

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ModelMap:
    tag: str
    forward: Callable
    inverse: Callable


def _siegel(z):
    z = np.asarray(z, dtype=complex)
    return np.stack([z[..., 0] - z[..., 1] ** 2 / 2, z[..., 1] / SQRT2], axis=-1)


def _siegel_inv(w):
    w = np.asarray(w, dtype=complex)
    z2 = SQRT2 * w[..., 1]
    return np.stack([w[..., 0] + z2 ** 2 / 2, z2], axis=-1)


def cayley_ball(w):
    """Siegel domain to the unit ball; returns the point and ``1 - |.|^2`` computed exactly."""
    w = np.asarray(w, dtype=complex)
    den = w[..., 0] + 1
    zeta = np.stack([(w[..., 0] - 1) / den, 2 * w[..., 1] / den], axis=-1)
    deficit = 4 * (w[..., 0].real - np.abs(w[..., 1]) ** 2) / np.abs(den) ** 2
    return zeta, deficit


def _cayley_pair(z):
    z = np.asarray(z, dtype=complex)
    return (1 - z) / (1 + z)


def _mixed_pair(z):
    z = np.asarray(z, dtype=complex)
    return np.stack([(1 - z[..., 0]) / (1 + z[..., 1]), (1 - z[..., 1]) / (1 + z[..., 1])], axis=-1)


SIEGEL = ModelMap("siegel_paraboloid", _siegel, _siegel_inv)
EXAMPLE2 = ModelMap("example2_involution", _cayley_pair, _cayley_pair)
EXAMPLE2_MIXED = ModelMap("example2_mixed", _mixed_pair, None)


class Paraboloid:
    """Unbounded base ``{x1 > x2^2}``; only what the affine bound needs."""

    dim = 2
    kind = "paraboloid"

    def rho(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 1] ** 2 - x[..., 0]

    def support_value(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.full(u.shape[0], np.inf)
        neg = u[:, 0] < 0
        out[neg] = -u[neg, 1] ** 2 / (4 * u[neg, 0])
        flat = (u[:, 0] == 0) & (u[:, 1] == 0)
        out[flat] = 0.0
        return out


def paraboloid_distance(z, z2):
    """Kobayashi distance of the paraboloid tube, pulled back from the ball."""
    a, da = cayley_ball(_siegel(z))
    b, db = cayley_ball(_siegel(z2))
    return ball_distance(a, b, da, db)


def sample_paraboloid_tube(count, rng, spread=2.0):
    x2 = rng.uniform(-spread, spread, count)
    x1 = x2 ** 2 + rng.exponential(1.0, count) + 1e-3
    im = rng.uniform(-spread, spread, (count, 2))
    return np.column_stack([x1, x2]) + 1j * im


@dataclass
class CheckReport:
    name: str
    samples: int
    failures: dict
    maxima: dict
    skipped: int = 0
    counterexamples: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def passed(self):
        return not any(self.failures.values())

    def to_dict(self):
        return {"name": self.name, "samples": self.samples, "skipped": self.skipped, "failures": self.failures,
                "maxima": self.maxima, "passed": self.passed, "flags": self.flags,
                "counterexamples": self.counterexamples[:10]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _dump(z):
    return [[float(c.real), float(c.imag)] for c in np.ravel(z)]


def siegel_check(samples=100, seed=0, points=None, tol=1e-10, bound_tol=1e-9):
    """Model-domain membership, metric axioms on triples, slice and oracle checks."""
    rng = np.random.default_rng(seed)
    pts = sample_paraboloid_tube(3 * samples, rng) if points is None else np.asarray(points, dtype=complex)
    inside = Paraboloid().rho(pts.real) < 0
    skipped = int(np.count_nonzero(~inside))
    pts = pts[inside]
    fail = {"image": 0, "roundtrip": 0, "identity": 0, "symmetry": 0, "triangle": 0, "slice": 0,
            "affine_bound": 0, "translation": 0}
    worst = dict.fromkeys(fail, 0.0)
    bad = []
    img = _siegel(pts)
    margin = img[:, 0].real - np.abs(img[:, 1]) ** 2
    fail["image"] = int(np.count_nonzero(margin <= 0))
    rt = np.max(np.abs(_siegel_inv(img) - pts), axis=1) / np.maximum(1, np.max(np.abs(pts), axis=1))
    worst["roundtrip"] = float(rt.max(initial=0))
    fail["roundtrip"] = int(np.count_nonzero(rt > 1e-12))
    base = Paraboloid()
    d = paraboloid_distance
    for i in range(len(pts) // 3):
        a, b, c = pts[3 * i : 3 * i + 3]
        dab, dba, dbc, dac = d(a, b), d(b, a), d(b, c), d(a, c)
        checks = {
            "identity": d(a, a),
            "symmetry": abs(dab - dba),
            "triangle": dac - dab - dbc,
            "affine_bound": affine_lower_bound(base, a, b) - dab,
        }
        shift = 1j * rng.uniform(-3, 3, 2)
        checks["translation"] = abs(d(a + shift, b + shift) - dab)
        for key, value in checks.items():
            worst[key] = max(worst[key], float(value))
            limit = bound_tol if key == "affine_bound" else tol
            if value > limit:
                fail[key] += 1
                bad.append({"check": key, "points": [_dump(p) for p in (a, b, c)], "value": float(value)})
        # x2 = 0 slice: first coordinates in the right half-plane
        s, t = a.copy(), b.copy()
        s[1] = t[1] = 0
        err = abs(d(s, t) - halfplane_distance(s[0], t[0]))
        worst["slice"] = max(worst["slice"], err)
        if err > tol:
            fail["slice"] += 1
    return CheckReport("siegel", len(pts), fail, worst, skipped, bad)


def sample_example2_tube(count, rng, boundary=False):
    """Points of the tube over ``{x1 x2 > 1, x > 0}`` (or over its boundary curve)."""
    u = rng.uniform(-1.5, 1.5, count)
    x1 = np.exp(u)
    prod = np.ones(count) if boundary else 1.0 + rng.exponential(1.0, count)
    x2 = prod / x1
    im = rng.uniform(-3, 3, (count, 2))
    return np.column_stack([x1, x2]) + 1j * im


def example2_inequality(zeta):
    """``(1-|z1|^2)(1-|z2|^2) - |1+z1|^2 |1+z2|^2``; positive on the image."""
    zeta = np.asarray(zeta, dtype=complex)
    m = np.abs(zeta) ** 2
    return (1 - m[..., 0]) * (1 - m[..., 1]) - np.abs(1 + zeta[..., 0]) ** 2 * np.abs(1 + zeta[..., 1]) ** 2


def bidisc(y, variant="derived"):
    """Centres and radii of the two discs of the union at parameter ``y``.

    ``derived``: the image of ``Re z1 > c, Re z2 > 1/c`` with ``c = (1+y)/(1-y)``.
    ``reflected``: the same discs reflected through the origin.
    """
    sign = -1.0 if variant == "derived" else 1.0
    return (sign * (1 + y) / 2, (1 - y) / 2), (sign * (1 - y) / 2, (1 + y) / 2)


def bidisc_member(zeta, variant="derived"):
    """Parameter ``y`` of a bidisc containing ``zeta``, or ``None``.

    The first disc shrinks and the second grows with ``y``, so the admissible
    ``y`` form an interval whose ends are found by root bracketing.
    """
    z1, z2 = complex(zeta[0]), complex(zeta[1])

    def g1(y):
        (c, r), _ = bidisc(y, variant)
        return abs(z1 - c) - r

    def g2(y):
        _, (c, r) = bidisc(y, variant)
        return abs(z2 - c) - r

    eps = 1e-15
    lo_y, hi_y = -1 + eps, 1 - eps
    # g1 < 0 on (-1, y1), g2 < 0 on (y2, 1)
    y1 = hi_y if g1(hi_y) < 0 else (brentq(g1, lo_y, hi_y, xtol=1e-15) if g1(lo_y) < 0 else None)
    y2 = lo_y if g2(lo_y) < 0 else (brentq(g2, lo_y, hi_y, xtol=1e-15) if g2(hi_y) < 0 else None)
    if y1 is None or y2 is None or not y2 < y1:
        return None
    y = 0.5 * (y1 + y2)
    return y if g1(y) < 0 and g2(y) < 0 else None


def example2_check(samples=1000, seed=0, variant="involution", union="derived", boundary_samples=100,
                   midpoints=200, tol_involution=1e-12, tol_boundary=1e-9):
    """Involution, bidisc image, displayed inequality, union membership and convexity."""
    if variant not in ("involution", "mixed"):
        raise ArgumentError("variant is 'involution' or 'mixed'")
    if union not in ("derived", "reflected"):
        raise ArgumentError("union is 'derived' or 'reflected'")
    rng = np.random.default_rng(seed)
    fmap = _cayley_pair if variant == "involution" else _mixed_pair
    z = sample_example2_tube(samples, rng)
    img = fmap(z)
    fail = {"involution": 0, "bidisc": 0, "inequality": 0, "union": 0, "union_agrees": 0, "boundary": 0,
            "convexity": 0}
    worst = {"involution": 0.0, "boundary": 0.0}
    bad = []
    back = fmap(img)
    inv = np.max(np.abs(back - z), axis=1) / np.maximum(1, np.max(np.abs(z), axis=1))
    worst["involution"] = float(inv.max())
    fail["involution"] = int(np.count_nonzero(inv > tol_involution))
    in_disc = np.all(np.abs(img) < 1, axis=1)
    ineq = example2_inequality(img) > 0
    fail["bidisc"] = int(np.count_nonzero(~in_disc))
    fail["inequality"] = int(np.count_nonzero(~ineq))
    for k in range(samples):
        member = bidisc_member(img[k], union) is not None
        if not member:
            fail["union"] += 1
            if len(bad) < 10:
                bad.append({"check": "union", "z": _dump(z[k]), "image": _dump(img[k])})
        if member != bool(ineq[k] and in_disc[k]):
            fail["union_agrees"] += 1
    edge = fmap(sample_example2_tube(boundary_samples, rng, boundary=True))
    scale = np.abs(1 + edge[:, 0]) ** 2 * np.abs(1 + edge[:, 1]) ** 2
    rel = np.abs(example2_inequality(edge)) / np.maximum(scale, 1e-300)
    worst["boundary"] = float(rel.max(initial=0))
    fail["boundary"] = int(np.count_nonzero(rel > tol_boundary))
    i, j = rng.integers(0, samples, (2, midpoints))
    mid = 0.5 * (img[i] + img[j])
    ok = (example2_inequality(mid) > 0) & np.all(np.abs(mid) < 1, axis=1)
    fail["convexity"] = int(np.count_nonzero(~ok))
    flags = []
    if variant == "mixed":
        flags.append("mixed-denominator map selected: not an involution")
    if union == "reflected":
        flags.append("reflected bidisc union selected: disc centres negated")
    return CheckReport(f"example2[{variant},{union}]", samples, fail, worst, 0, bad, flags)
