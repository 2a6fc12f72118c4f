"""Reference distances, the Hilbert metric and two Kobayashi oracles.

Closed forms are evaluated through ``sinh``/``log1p`` expressions that stay
accurate for nearby points and for points close to the boundary.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .base_geometry import boundary_intersection, sample_interior
from .errors import ArgumentError, DomainError

MODEL_TAGS = ("disc", "halfplane", "strip", "polydisc", "orthant_tube", "ball", "interval_product")


def _poincare_from_parts(mod, deficit):
    """``atanh(mod)`` given ``mod = |phi|`` and ``deficit = 1 - |phi|^2``."""
    return math.log1p(mod) - 0.5 * math.log(deficit)


def poincare(lam, mu):
    """Poincare distance on the unit disc, ``atanh |(lam - mu)/(1 - conj(mu) lam)|``."""
    lam = complex(lam)
    mu = complex(mu)
    if not (abs(lam) < 1 and abs(mu) < 1):
        raise ArgumentError("points must lie in the open unit disc")
    if lam == mu:
        return 0.0
    den = abs(1 - mu.conjugate() * lam)
    mod = abs(lam - mu) / den
    deficit = (1 - abs(lam) ** 2) * (1 - abs(mu) ** 2) / den ** 2
    return _poincare_from_parts(mod, deficit)


def halfplane_distance(zeta, eta):
    """Distance in ``{Re > 0}``: ``sinh d = |zeta - eta| / (2 sqrt(Re zeta Re eta))``."""
    zeta = complex(zeta)
    eta = complex(eta)
    if not (zeta.real > 0 and eta.real > 0):
        raise ArgumentError("points must have positive real part")
    return math.asinh(abs(zeta - eta) / (2.0 * math.sqrt(zeta.real * eta.real)))


def strip_distance(zeta, eta, alpha=0.0, beta=1.0):
    """Distance in the strip ``{alpha < Re < beta}``.

    After rescaling to ``{0 < Re < 1}`` the map ``exp(i pi zeta)`` onto the
    upper half-plane gives ``sinh d = |sin(pi (zeta - eta)/2)| / sqrt(sin(pi x) sin(pi y))``.
    """
    if not alpha < beta:
        raise ArgumentError("strip requires alpha < beta")
    width = beta - alpha
    a = (complex(zeta) - alpha) / width
    b = (complex(eta) - alpha) / width
    if not (0 < a.real < 1 and 0 < b.real < 1):
        raise ArgumentError("points must lie in the strip")
    num = abs(np.sin(math.pi * (a - b) / 2))
    return math.asinh(num / math.sqrt(math.sin(math.pi * a.real) * math.sin(math.pi * b.real)))


def ball_distance(w, z, deficit_w=None, deficit_z=None):
    """Distance in the unit ball of C^n; deficits ``1 - |.|^2`` may be supplied exactly."""
    w = np.asarray(w, dtype=complex).ravel()
    z = np.asarray(z, dtype=complex).ravel()
    dw = 1.0 - np.vdot(w, w).real if deficit_w is None else float(deficit_w)
    dz = 1.0 - np.vdot(z, z).real if deficit_z is None else float(deficit_z)
    if not (dw > 0 and dz > 0):
        raise ArgumentError("points must lie in the open unit ball")
    inner = np.vdot(z, w)
    den2 = abs(1.0 - inner) ** 2
    # Lagrange identity: |1 - <w,z>|^2 - (1-|w|^2)(1-|z|^2) = |w-z|^2 - (|w|^2|z|^2 - |<w,z>|^2)
    wedge = max(np.vdot(w, w).real * np.vdot(z, z).real - abs(inner) ** 2, 0.0)
    mod2 = max(np.vdot(w - z, w - z).real - wedge, 0.0) / den2
    return _poincare_from_parts(math.sqrt(mod2), dw * dz / den2)


@dataclass(frozen=True)
class ModelSpace:
    """A model domain with an exact distance.

    ``strip`` uses ``alpha, beta``; ``interval_product`` uses ``lo, hi``;
    ``polydisc``, ``orthant_tube`` and ``ball`` use ``n``.
    """

    tag: str
    n: int = 1
    alpha: float | None = None
    beta: float | None = None
    lo: tuple | None = None
    hi: tuple | None = None

    def __post_init__(self):
        if self.tag not in MODEL_TAGS:
            raise ArgumentError(f"unknown model {self.tag!r}")
        if self.tag == "strip":
            if self.alpha is None or self.beta is None or not self.alpha < self.beta:
                raise ArgumentError("strip requires alpha < beta")
        if self.tag == "interval_product":
            if self.lo is None or self.hi is None or len(self.lo) != len(self.hi):
                raise ArgumentError("interval_product requires lo and hi of equal length")
            if any(h <= l for l, h in zip(self.lo, self.hi)):
                raise ArgumentError("interval_product requires lo < hi")
            object.__setattr__(self, "n", len(self.lo))
        if self.n < 1:
            raise ArgumentError("dimension must be positive")


def _coords(x, n):
    x = np.atleast_1d(np.asarray(x, dtype=complex)).ravel()
    if x.size != n:
        raise ArgumentError(f"expected {n} coordinates, got {x.size}")
    return x


def model_distance(space, w, z):
    """Exact distance in a model space (max over factors for products)."""
    tag = space.tag
    if tag == "disc":
        return poincare(w, z)
    if tag == "halfplane":
        return halfplane_distance(w, z)
    if tag == "strip":
        return strip_distance(w, z, space.alpha, space.beta)
    if tag == "ball":
        return ball_distance(_coords(w, space.n), _coords(z, space.n))
    w = _coords(w, space.n)
    z = _coords(z, space.n)
    if tag == "polydisc":
        return max(poincare(a, b) for a, b in zip(w, z))
    if tag == "orthant_tube":
        return max(halfplane_distance(a, b) for a, b in zip(w, z))
    return max(strip_distance(a, b, lo, hi) for a, b, lo, hi in zip(w, z, space.lo, space.hi))


def product_distance_tube(lo, hi, w, z):
    """Distance in the tube over a box; infinite ends allowed (half-planes)."""
    out = 0.0
    for a, b, l, h in zip(np.ravel(w), np.ravel(z), lo, hi):
        out = max(out, _interval_tube_distance(complex(a), complex(b), l, h))
    return out


def _interval_tube_distance(a, b, lo, hi):
    if math.isfinite(lo) and math.isfinite(hi):
        return strip_distance(a, b, lo, hi)
    if math.isfinite(lo):
        return halfplane_distance(a - lo, b - lo)
    if math.isfinite(hi):
        return halfplane_distance(hi - a, hi - b)
    return 0.0


# ---------------------------------------------------------------------------
# Hilbert metric


def hilbert_distance(domain, x, y, orientation="absolute"):
    """Hilbert distance via the two exits of the chord through ``x`` and ``y``.

    ``orientation="reversed"`` returns the signed quotient
    ``log(|x-alpha||y-beta| / (|x-beta||y-alpha|))``, which is the negative of the
    standard value; it exists as a negative control only.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for name, p in (("x", x), ("y", y)):
        if not domain.rho(p) < 0:
            raise ArgumentError(f"{name} is not an interior point")
    gap = float(np.linalg.norm(y - x))
    if gap == 0.0:
        return 0.0
    d = (y - x) / gap
    d /= np.linalg.norm(d)
    to_alpha = boundary_intersection(domain, x, -d)
    to_beta = boundary_intersection(domain, y, d)
    value = math.log1p(gap / to_alpha) + math.log1p(gap / to_beta)
    if orientation == "reversed":
        return -value
    if orientation != "absolute":
        raise ArgumentError(f"unknown orientation {orientation!r}")
    return value


# ---------------------------------------------------------------------------
# affine lower bound


def sphere_directions(n, count=64):
    """Quasi-uniform unit directions, one per antipodal pair."""
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        t = math.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        # Fibonacci points on the upper hemisphere
        k = np.arange(count) + 0.5
        zc = k / count
        phi = math.pi * (1 + math.sqrt(5)) * k
        r = np.sqrt(1 - zc ** 2)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), zc])
    u = np.random.default_rng(0).normal(size=(count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def affine_lower_bound(domain, w, z, directions=64):
    """Max over directions ``u`` of the strip distance between ``<w,u>`` and ``<z,u>``."""
    w = np.asarray(w, dtype=complex).ravel()
    z = np.asarray(z, dtype=complex).ravel()
    if np.array_equal(w, z):
        return 0.0
    n = w.size
    dirs = [sphere_directions(n, directions), np.eye(n)]
    chord = (z - w).real
    if np.linalg.norm(chord) > 0:
        dirs.append((chord / np.linalg.norm(chord))[None, :])
    U = np.vstack(dirs)
    hi = np.asarray(domain.support_value(U), dtype=float)
    lo = -np.asarray(domain.support_value(-U), dtype=float)
    best = 0.0
    for u, l, h in zip(U, lo, hi):
        best = max(best, _interval_tube_distance(complex(w @ u), complex(z @ u), l, h))
    return best


# ---------------------------------------------------------------------------
# polynomial disc upper bound


@dataclass
class UpperBoundReport:
    value: float
    degree: int
    r: float | None
    feasible: bool
    fallback: bool = False
    pieces: int = 1
    margin: float | None = None
    history: list = field(default_factory=list)

    def to_dict(self):
        return dataclasses.asdict(self)


def _two_point_distance(r):
    # p(-r, r)
    return math.atanh(2 * r / (1 + r * r))


class _DiscFamily:
    """Polynomial discs ``phi(-r) = w``, ``phi(r) = z`` of degree at most ``d``.

    ``phi(lam) = m + lam e/(2r) + (lam^2 - r^2) sum_j q_j lam^j``.
    """

    def __init__(self, domain, w, z, degree, grid):
        self.domain = domain
        self.m = (w + z) / 2
        self.e = z - w
        self.degree = degree
        self.n = w.size
        self.nq = max(degree - 1, 0)
        self.set_grid(grid)

    def set_grid(self, grid):
        t = 2 * math.pi * np.arange(grid) / grid
        self.lam = np.exp(1j * t)
        self.powers = self.lam[:, None] ** np.arange(self.nq)[None, :]

    def unpack(self, x):
        r = x[0]
        k = self.nq * self.n
        q = (x[1 : 1 + k] + 1j * x[1 + k :]).reshape(self.nq, self.n)
        return r, q

    def pack(self, r, q):
        return np.concatenate([[r], q.real.ravel(), q.imag.ravel()])

    def boundary(self, x):
        r, q = self.unpack(x)
        lam = self.lam[:, None]
        vals = self.m + lam * self.e / (2 * r)
        if self.nq:
            vals = vals + (lam ** 2 - r * r) * (self.powers @ q)
        return vals.real

    def worst(self, x):
        return float(np.max(self.domain.constraints(self.boundary(x))))

    def certified_worst(self, x):
        """Grid maximum plus the largest jump between neighbours; negative certifies containment."""
        c = np.max(self.domain.constraints(self.boundary(x)), axis=-1)
        return float(np.max(c) + np.max(np.abs(np.diff(np.append(c, c[0])))))


def _degree_one_radius(fam, margin=0.0):
    x_of = lambda r: fam.pack(r, np.zeros((fam.nq, fam.n), dtype=complex))
    hi = 1.0 - 1e-12
    if fam.certified_worst(x_of(hi)) >= -margin:
        return None
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid > 0 and fam.certified_worst(x_of(mid)) < -margin:
            hi = mid
        else:
            lo = mid
    return hi


def _slsqp(fam, x0, margin, maxiter):
    cons = {"type": "ineq", "fun": lambda x: -fam.domain.constraints(fam.boundary(x)).ravel() - margin}
    bounds = [(1e-9, 1.0 - 1e-12)] + [(None, None)] * (x0.size - 1)
    grad = np.eye(1, x0.size, 0).ravel()
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(lambda x: x[0], x0, jac=lambda x: grad, method="SLSQP", bounds=bounds,
                       constraints=[cons], options={"maxiter": maxiter, "ftol": 1e-12})
    return res.x


def lempert_search(domain, w, z, degree=1, grid=512, check_grid=1 << 16, margins=(1e-5, 1e-4, 1e-3),
                   maxiter=200):
    """Best polynomial disc found up to ``degree``; never worse than a lower degree.

    Discs are normalised to pass through ``w`` at ``-r`` and ``z`` at ``r``, so
    the bound is ``p(-r, r)``.  Containment of ``Re phi`` on the circle (hence on
    the disc, by convexity) is certified on a fine grid.
    """
    w = np.asarray(w, dtype=complex).ravel()
    z = np.asarray(z, dtype=complex).ravel()
    if np.array_equal(w, z):
        return UpperBoundReport(0.0, 0, 0.0, True)
    if degree < 1:
        raise ArgumentError("degree must be at least 1")
    for p in (w, z):
        if not domain.rho(p.real) < 0:
            raise DomainError("point outside base")
    r1 = _degree_one_radius(_DiscFamily(domain, w, z, 1, check_grid))
    best = None
    history = []
    if r1 is not None:
        best = (r1, np.zeros((0, w.size), dtype=complex))
        history.append(_two_point_distance(r1))
    for d in range(2, degree + 1):
        fam = _DiscFamily(domain, w, z, d, grid)
        fine = _DiscFamily(domain, w, z, d, check_grid)
        if best is None:
            x0 = fam.pack(0.999, np.zeros((fam.nq, w.size), dtype=complex))
        else:
            q0 = np.zeros((fam.nq, w.size), dtype=complex)
            q0[: best[1].shape[0]] = best[1]
            x0 = fam.pack(best[0], q0)
        for margin in margins:
            try:
                cand = _slsqp(fam, x0, margin, maxiter)
            except (ValueError, np.linalg.LinAlgError):
                continue
            if fine.certified_worst(cand) < 0:
                if best is None or cand[0] < best[0]:
                    best = fam.unpack(cand)
                break
        history.append(_two_point_distance(best[0]) if best is not None else math.inf)
    if best is not None:
        fam = _DiscFamily(domain, w, z, max(degree, 1), check_grid)
        x = fam.pack(best[0], np.pad(best[1], ((0, fam.nq - best[1].shape[0]), (0, 0))))
        return UpperBoundReport(_two_point_distance(best[0]), degree, float(best[0]), True,
                                margin=-fam.certified_worst(x), history=history)
    return _chain_bound(domain, w, z, degree, check_grid, history)


def _chain_bound(domain, w, z, degree, grid, history):
    # sum of degree-one bounds along the chord; valid by the triangle inequality
    pieces = 2
    while pieces <= 4096:
        pts = [w + (z - w) * k / pieces for k in range(pieces + 1)]
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            r = _degree_one_radius(_DiscFamily(domain, a, b, 1, grid))
            if r is None:
                break
            total += _two_point_distance(r)
        else:
            return UpperBoundReport(total, degree, None, False, fallback=True, pieces=pieces, history=history)
        pieces *= 2
    return UpperBoundReport(math.inf, degree, None, False, fallback=True, pieces=pieces, history=history)


def lempert_upper_bound(domain, w, z, degree=1, **kw):
    """Upper bound for the Kobayashi distance from polynomial discs."""
    return lempert_search(domain, w, z, degree=degree, **kw).value


# ---------------------------------------------------------------------------
# Hilbert versus Kobayashi


@dataclass
class HilbertReport:
    rows: list
    min_slack: float
    tol: float
    seed: int
    orientation: str

    @property
    def passed(self):
        return self.min_slack >= -self.tol

    def to_dict(self):
        return {"pairs": len(self.rows), "min_slack": self.min_slack, "tol": self.tol,
                "seed": self.seed, "orientation": self.orientation, "passed": self.passed}

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["pair", "h", "2k", "slack"])
        for row in self.rows:
            writer.writerow([row["pair"]] + [f"{row[key]:.12g}" for key in ("h", "2k", "slack")])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def check_hilbert_inequality(domain, pairs=100, seed=0, tol=1e-5, shrink=0.8, orientation="absolute",
                             distance=None):
    """Sample real pairs and record ``h - 2k``; ``k`` from the geodesic solver by default."""
    if distance is None:
        from .geodesic_solver import kobayashi_distance as distance
    rng = np.random.default_rng(seed)
    pts = sample_interior(domain, 2 * pairs, rng, shrink=shrink)
    rows = []
    for i in range(pairs):
        x, y = pts[2 * i], pts[2 * i + 1]
        h = hilbert_distance(domain, x, y, orientation=orientation)
        k2 = 2.0 * distance(domain, x.astype(complex), y.astype(complex))
        rows.append({"pair": i, "x": x.tolist(), "y": y.tolist(), "h": h, "2k": k2, "slack": h - k2})
    min_slack = min(row["slack"] for row in rows) if rows else 0.0
    return HilbertReport(rows, min_slack, tol, seed, orientation)
