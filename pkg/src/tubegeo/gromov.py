"""Four-point function, corner cones and witnesses of non-hyperbolicity."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .base_geometry import BOUNDARY_TOL, IntervalProduct, PolytopeBase, sample_interior
from .errors import ArgumentError
from .metrics import (
    ModelSpace,
    affine_lower_bound,
    halfplane_distance,
    lempert_upper_bound,
    model_distance,
    product_distance_tube,
)

PAIRS = (("x", "y"), ("x", "z"), ("x", "w"), ("y", "z"), ("y", "w"), ("z", "w"))


def s_four_point(d, x, y, z, w):
    """``d(x,z) + d(y,w) - max(d(x,y) + d(z,w), d(y,z) + d(x,w))``."""
    return d(x, z) + d(y, w) - max(d(x, y) + d(z, w), d(y, z) + d(x, w))


def _s_from_table(t):
    return t["xz"] + t["yw"] - max(t["xy"] + t["zw"], t["yz"] + t["xw"])


@dataclass
class QuadrupleReport:
    points: dict
    distances: dict
    S: float
    provenance: str
    S_interval: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def S_low(self):
        return self.S_interval[0] if self.S_interval else self.S

    def to_dict(self):
        pts = {k: [[float(c.real), float(c.imag)] for c in np.ravel(v)] for k, v in self.points.items()}
        out = {"points": pts, "distances": self.distances, "S": self.S, "provenance": self.provenance}
        if self.S_interval is not None:
            out["S_interval"] = list(self.S_interval)
        out.update(self.meta)
        return out


def quadruple_report(d, x, y, z, w, provenance="exact model", **meta):
    pts = {"x": x, "y": y, "z": z, "w": w}
    table = {a + b: float(d(pts[a], pts[b])) for a, b in PAIRS}
    return QuadrupleReport(pts, table, _s_from_table(table), provenance, meta=meta)


def interval_quadruple_report(lower, upper, x, y, z, w, **meta):
    """S bracketed from lower and upper distance bounds."""
    pts = {"x": x, "y": y, "z": z, "w": w}
    lo = {a + b: float(lower(pts[a], pts[b])) for a, b in PAIRS}
    hi = {a + b: float(upper(pts[a], pts[b])) for a, b in PAIRS}
    s_low = lo["xz"] + lo["yw"] - max(hi["xy"] + hi["zw"], hi["yz"] + hi["xw"])
    s_high = hi["xz"] + hi["yw"] - max(lo["xy"] + lo["zw"], lo["yz"] + lo["xw"])
    table = {k: [lo[k], hi[k]] for k in lo}
    return QuadrupleReport(pts, table, s_low, "bounds-pair", S_interval=(s_low, s_high), meta=meta)


def polydisc_witness(r):
    """``(r,0), (0,r), (-r,0), (0,-r)`` in the bidisc; S equals ``2 atanh r``."""
    if not 0 < r < 1:
        raise ArgumentError("r must lie in (0, 1)")
    space = ModelSpace("polydisc", n=2)
    d = lambda a, b: model_distance(space, a, b)
    pts = [np.array(p, dtype=complex) for p in ((r, 0), (0, r), (-r, 0), (0, -r))]
    return quadruple_report(d, *pts, r=r)


# ---------------------------------------------------------------------------
# corner cones


@dataclass
class ConeModel:
    """Open cone ``{v : <u_i, v> < 0}`` over the active normals at ``vertex``.

    The tube over it is biholomorphic to ``H^m x C^(n-m)`` through the
    coordinates ``-<u_i, p - vertex>``; distances are the max over the
    half-plane factors.
    """

    vertex: np.ndarray
    normals: np.ndarray
    generators: np.ndarray | None

    @property
    def simplicial(self):
        return self.generators is not None

    def contains(self, v):
        return bool(np.all(self.normals @ np.asarray(v, dtype=float) < 0))

    def coordinates(self, p):
        return -(self.normals @ (np.asarray(p, dtype=complex) - self.vertex))

    def distance(self, p, q):
        a = self.coordinates(p)
        b = self.coordinates(q)
        return max(halfplane_distance(s, t) for s, t in zip(a, b))


def corner_cone(base, x, tol=BOUNDARY_TOL):
    """Tangent cone of a polytope at a boundary point from its active constraints."""
    if not isinstance(base, PolytopeBase):
        raise ArgumentError("corner cones are defined for polytope bases")
    x = np.asarray(x, dtype=float)
    if abs(float(base.rho(x))) > tol:
        raise ArgumentError("point is not on the boundary")
    U = base.normals[base.active_set(x, tol)]
    if np.linalg.matrix_rank(U) < U.shape[0]:
        # more active facets than independent directions: cone is not simplicial
        return ConeModel(x, U, None)
    gens = -np.linalg.inv(U).T if U.shape[0] == base.dim else None
    return ConeModel(x, U, gens)


# ---------------------------------------------------------------------------
# blow-up at a corner of a box


@dataclass
class BlowupReport:
    schedule: list
    containment: list
    k0: int | None
    gaps: dict
    scaling_error: float
    trend_decreasing: bool
    tol_gap: float
    tol_scaling: float

    @property
    def final_gap(self):
        return self.gaps[max(self.gaps)] if self.gaps else math.inf

    @property
    def passed(self):
        return self.final_gap <= self.tol_gap and self.scaling_error <= self.tol_scaling

    def to_dict(self):
        return {"schedule": self.schedule, "containment": self.containment, "k0": self.k0,
                "gaps": {str(k): v for k, v in self.gaps.items()}, "scaling_error": self.scaling_error,
                "trend_decreasing": self.trend_decreasing, "final_gap": self.final_gap, "passed": self.passed}


def blowup_convergence_check(base, x, schedule=range(1, 11), probe_box=((1.0, 1.0), (2.0, 2.0)),
                             pairs=20, seed=0, scaling_k=5, tol_gap=1e-3, tol_scaling=1e-12):
    """Compare distances in the dilated tubes ``t_k (Omega - x)`` with the cone tube.

    ``t_k = 2**k``.  Gaps are recorded only from the first ``k`` on which the
    probe box sits inside the dilated base.
    """
    if not isinstance(base, IntervalProduct):
        raise ArgumentError("exact distances on both sides need a box base")
    x = np.asarray(x, dtype=float)
    cone = corner_cone(base, x)
    rng = np.random.default_rng(seed)
    klo, khi = (np.asarray(v, dtype=float) for v in probe_box)
    re = klo + (khi - klo) * rng.uniform(size=(2 * pairs, base.dim))
    probes = re + 1j * rng.uniform(-1.0, 1.0, size=re.shape)
    lo0, hi0 = base.lo - x, base.hi - x
    corners = np.array(list(itertools.product(*zip(lo0, hi0))))
    containment, gaps, k0 = [], {}, None
    sched = [int(k) for k in schedule]
    for k in sched:
        t = 2.0 ** k
        lo, hi = t * lo0, t * hi0
        inner = bool(np.all(klo > lo) and np.all(khi < hi))
        outer = bool(np.all(cone.normals @ (t * corners).T <= 0))
        containment.append({"k": k, "t": t, "K_in_tOmega": inner, "tOmega_in_cone": outer})
        if not (inner and outer):
            continue
        if k0 is None:
            k0 = k
        gap = 0.0
        for p, q in zip(probes[::2], probes[1::2]):
            dk = product_distance_tube(lo, hi, p, q)
            dc = cone.distance(p + x, q + x)
            gap = max(gap, abs(dk - dc))
        gaps[k] = gap
    values = [gaps[k] for k in sorted(gaps)]
    trend = all(b <= a * (1 + 1e-9) for a, b in zip(values, values[1:]))
    # invariance of S under the dilation, same exact formula on both sides
    t = 2.0 ** scaling_k
    scaling_error = 0.0
    for _ in range(10):
        pts = sample_interior(base, 4, rng) + 1j * rng.uniform(-1, 1, size=(4, base.dim))
        d1 = lambda a, b: product_distance_tube(base.lo, base.hi, a, b)
        d2 = lambda a, b: product_distance_tube(t * base.lo, t * base.hi, a, b)
        s1 = s_four_point(d1, *pts)
        s2 = s_four_point(d2, *(t * pts))
        scaling_error = max(scaling_error, abs(s1 - s2))
    return BlowupReport(sched, containment, k0, gaps, scaling_error, trend, tol_gap, tol_scaling)


# ---------------------------------------------------------------------------
# witness search


@dataclass
class WitnessSearch:
    reports: list
    strategy: str
    target: float | None
    seed: int
    budget: int
    space: str

    @property
    def best(self):
        return max((r.S_low for r in self.reports), default=-math.inf)

    @property
    def achieved(self):
        return self.target is None or self.best >= self.target

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "t_k", "S", "S_high", "x", "y", "z", "w"])
        for r in self.reports:
            coords = [" ".join(f"{c.real:.12g}{c.imag:+.12g}j" for c in np.ravel(r.points[p])) for p in "xyzw"]
            high = r.S_interval[1] if r.S_interval else r.S
            writer.writerow([r.meta.get("k", ""), _fmt(r.meta.get("t_k", "")), _fmt(r.S_low), _fmt(high)] + coords)
        return buf.getvalue()

    def summary(self):
        return {"space": self.space, "strategy": self.strategy, "target": self.target, "seed": self.seed,
                "budget": self.budget, "steps": len(self.reports), "max_S": self.best, "achieved": self.achieved}

    def to_json(self):
        return json.dumps(self.summary(), sort_keys=True)


def _fmt(v):
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def _cayley(lam):
    # unit disc -> {Re > 0}
    return (1 + lam) / (1 - lam)


def _corner_witness(base, k):
    """Bidisc witness at ``r = 1 - 2^-k`` sent to the orthant and shrunk into the corner ``lo``."""
    r = 1.0 - 2.0 ** (-k)
    t = 2.0 ** (k + 12)
    width = base.hi - base.lo
    pts = []
    for p in ((r, 0), (0, r), (-r, 0), (0, -r)):
        half = np.array([_cayley(c) for c in p] + [1.0] * (base.dim - 2), dtype=complex)
        pts.append(base.lo + width * half / t)
    return pts, r, t


def _nondecreasing(reports):
    out = []
    for r in reports:
        if not out or r.S_low >= out[-1].S_low:
            out.append(r)
    return out


def witness_search(space, strategy=None, budget=20, target=None, seed=0, degree=1):
    """Quadruples with nondecreasing S.

    ``space`` is ``"polydisc"``, ``"square"`` or a base domain.  Strategies:
    ``analytic`` (bidisc schedule ``r_k = 1 - 2^-k``), ``corner`` (that schedule
    pushed into a corner of a box base, exact strip-product distances) and
    ``random`` (seeded draws; interval-valued S from the two oracles on
    smooth bases).
    """
    rng = np.random.default_rng(seed)
    if isinstance(space, str):
        name = space
        if space == "polydisc":
            base = None
        elif space == "square":
            base = IntervalProduct([0.0, 0.0], [1.0, 1.0])
        else:
            raise ArgumentError(f"unknown space {space!r}")
    else:
        base, name = space, getattr(space, "kind", "domain")
    if strategy is None:
        strategy = "analytic" if base is None else ("corner" if isinstance(base, IntervalProduct) else "random")
    reports = []
    if strategy == "analytic":
        if base is not None:
            raise ArgumentError("analytic strategy runs on the polydisc model")
        for k in range(1, budget + 1):
            rep = polydisc_witness(1.0 - 2.0 ** (-k))
            rep.meta.update(k=k, t_k=1.0)
            reports.append(rep)
            if target is not None and rep.S >= target:
                break
    elif strategy == "corner":
        if not isinstance(base, IntervalProduct) or base.dim < 2:
            raise ArgumentError("corner strategy needs a box base of dimension >= 2")
        d = lambda a, b: product_distance_tube(base.lo, base.hi, a, b)
        for k in range(1, budget + 1):
            pts, r, t = _corner_witness(base, k)
            rep = quadruple_report(d, *pts, provenance="exact model", k=k, t_k=t, r=r)
            reports.append(rep)
            if target is not None and rep.S >= target:
                break
    elif strategy == "random":
        reports = _random_search(base, budget, target, rng, degree)
    else:
        raise ArgumentError(f"unknown strategy {strategy!r}")
    return WitnessSearch(_nondecreasing(reports), strategy, target, seed, budget, name)


def _random_search(base, budget, target, rng, degree):
    if base is None:
        space = ModelSpace("polydisc", n=2)
        exact = lambda a, b: model_distance(space, a, b)
    elif isinstance(base, IntervalProduct):
        exact = lambda a, b: product_distance_tube(base.lo, base.hi, a, b)
    else:
        exact = None
    out = []
    for k in range(1, budget + 1):
        if base is None:
            rad = np.sqrt(rng.uniform(size=(4, 2))) * 0.999
            pts = list(rad * np.exp(2j * np.pi * rng.uniform(size=(4, 2))))
        else:
            re = sample_interior(base, 4, rng, shrink=0.95)
            pts = list(re + 1j * rng.uniform(-1.0, 1.0, size=re.shape))
        if exact is not None:
            rep = quadruple_report(exact, *pts, k=k)
        else:
            lower = lambda a, b: affine_lower_bound(base, a, b)
            upper = lambda a, b: lempert_upper_bound(base, a, b, degree=degree, check_grid=4096)
            rep = interval_quadruple_report(lower, upper, *pts, k=k)
        out.append(rep)
        if target is not None and rep.S_low >= target:
            break
    out.sort(key=lambda r: r.meta["k"])
    # running best
    best, seq = -math.inf, []
    for r in out:
        if r.S_low >= best:
            best = r.S_low
            seq.append(r)
    return seq
