"""Convex base domains in R^n.

A base domain is described by a defining function ``rho`` (negative inside,
zero on the boundary, positive outside) together with its gradient.  For
smooth strictly convex kinds the Gauss map ``x -> grad rho(x)/|grad rho(x)|``
is a bijection from the boundary onto the unit sphere; its inverse is the
support point ``argmax_{x in closure} <x, v>``.

All arrays are vectorised over leading axes: points have shape ``(..., n)``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, linprog

from .errors import ArgumentError, DomainError, NumericError

BOUNDARY_TOL = 1e-9

__all__ = [
    "BOUNDARY_TOL",
    "BaseDomain",
    "Ball",
    "Ellipsoid",
    "Superellipse",
    "CustomSmooth",
    "PolytopeBase",
    "IntervalProduct",
    "gauss_map",
    "support_point",
    "support_interval",
    "boundary_intersection",
    "sample_interior",
]


def _unit(v, what="vector"):
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise ArgumentError(f"{what} must be nonzero and finite")
    return v / norm


class BaseDomain:
    """Bounded convex domain given by a defining function.

    Subclasses provide ``rho`` and ``grad`` and, when available, a closed form
    for ``support_point``.  Instances are treated as immutable.
    """

    kind = "custom-smooth"
    smooth = True

    def __init__(self, dim, center, radius):
        self.dim = int(dim)
        if self.dim < 1:
            raise ArgumentError("dimension must be >= 1")
        self.center = np.asarray(center, dtype=float).reshape(self.dim)
        self.radius = float(radius)
        self.center.setflags(write=False)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()})"

    # -- defining function -------------------------------------------------
    def rho(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def contains(self, x, margin=0.0):
        return self.rho(np.asarray(x, dtype=float)) < -margin

    def constraints(self, x):
        """Constraint values, all negative iff ``x`` is interior; shape (..., m)."""
        return self.rho(x)[..., None]

    # -- support geometry --------------------------------------------------
    def support_point(self, v):
        return _lagrange_support(self, _unit(v, "support direction"))

    def support_value(self, u):
        """``max <x, u>`` over the closure."""
        u = np.asarray(u, dtype=float)
        return np.sum(self.support_point(u) * u, axis=-1)

    def to_spec(self):
        return {"kind": self.kind, "n": self.dim}


class Ellipsoid(BaseDomain):
    """``sum(((x - c)/a)**2) < 1``."""

    kind = "ellipsoid"

    def __init__(self, axes, center=None):
        axes = np.asarray(axes, dtype=float).ravel()
        if np.any(axes <= 0):
            raise ArgumentError("semi-axes must be positive")
        dim = axes.size
        center = np.zeros(dim) if center is None else center
        center = np.asarray(center, dtype=float)
        super().__init__(dim, center, np.linalg.norm(center) + axes.max())
        self.axes = axes
        self.axes.setflags(write=False)

    def rho(self, x):
        y = (np.asarray(x, dtype=float) - self.center) / self.axes
        return 0.5 * (np.sum(y * y, axis=-1) - 1.0)

    def grad(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.axes**2

    def support_point(self, v):
        v = np.asarray(v, dtype=float)
        _unit(v, "support direction")
        w = self.axes**2 * v
        return self.center + w / np.sqrt(np.sum(w * v, axis=-1, keepdims=True))

    def support_value(self, u):
        u = np.asarray(u, dtype=float)
        return u @ self.center + np.sqrt(np.sum((self.axes * u) ** 2, axis=-1))

    def to_spec(self):
        spec = {"kind": self.kind, "n": self.dim, "axes": self.axes.tolist()}
        if np.any(self.center):
            spec["center"] = self.center.tolist()
        return spec


class Ball(Ellipsoid):
    kind = "ball"

    def __init__(self, dim, radius=1.0, center=None):
        super().__init__(np.full(int(dim), float(radius)), center)

    def to_spec(self):
        spec = {"kind": self.kind, "n": self.dim}
        if self.axes[0] != 1.0:
            spec["radius"] = float(self.axes[0])
        if np.any(self.center):
            spec["center"] = self.center.tolist()
        return spec


class Superellipse(BaseDomain):
    """``sum(|(x - c)/a|**p) < 1`` with ``p > 1``.

    Strictly convex for every ``p > 1``; the boundary is C^2 for ``p >= 2``.
    """

    kind = "superellipse"

    def __init__(self, axes, p, center=None):
        axes = np.asarray(axes, dtype=float).ravel()
        if np.any(axes <= 0) or p <= 1:
            raise ArgumentError("need positive semi-axes and exponent p > 1")
        dim = axes.size
        center = np.zeros(dim) if center is None else center
        center = np.asarray(center, dtype=float)
        # |y|_inf <= |y|_p = 1 on the boundary
        super().__init__(dim, center, np.linalg.norm(center) + np.linalg.norm(axes))
        self.axes = axes
        self.p = float(p)
        self.axes.setflags(write=False)

    def rho(self, x):
        y = (np.asarray(x, dtype=float) - self.center) / self.axes
        return (np.sum(np.abs(y) ** self.p, axis=-1) - 1.0) / self.p

    def grad(self, x):
        y = (np.asarray(x, dtype=float) - self.center) / self.axes
        return np.sign(y) * np.abs(y) ** (self.p - 1.0) / self.axes

    def support_point(self, v):
        # Hoelder equality case for the dual exponent q
        v = np.asarray(v, dtype=float)
        _unit(v, "support direction")
        q = self.p / (self.p - 1.0)
        w = self.axes * v
        wn = w / np.max(np.abs(w), axis=-1, keepdims=True)
        norm_q = np.sum(np.abs(wn) ** q, axis=-1, keepdims=True) ** (1.0 / q)
        y = np.sign(wn) * (np.abs(wn) / norm_q) ** (q - 1.0)
        return self.center + self.axes * y

    def to_spec(self):
        spec = {"kind": self.kind, "n": self.dim, "axes": self.axes.tolist(), "p": self.p}
        if np.any(self.center):
            spec["center"] = self.center.tolist()
        return spec


class CustomSmooth(BaseDomain):
    """User supplied defining function and gradient (vectorised callables).

    Strict convexity is not verified here; see ``check_strict_convexity``.
    """

    def __init__(self, dim, rho, grad, center, radius):
        super().__init__(dim, center, radius)
        self._rho = rho
        self._grad = grad
        if not self.rho(self.center) < 0:
            raise DomainError("reference point is not interior")

    def rho(self, x):
        return np.asarray(self._rho(np.asarray(x, dtype=float)), dtype=float)

    def grad(self, x):
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)


class PolytopeBase(BaseDomain):
    """Intersection of open half-spaces ``<u_i, x> < c_i`` with unit normals."""

    kind = "polytope"
    smooth = False

    def __init__(self, normals, offsets, center=None):
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = np.asarray(offsets, dtype=float).ravel()
        if normals.shape[0] != offsets.size:
            raise ArgumentError("one offset per half-space required")
        norms = np.linalg.norm(normals, axis=1)
        if np.any(norms == 0):
            raise ArgumentError("zero half-space normal")
        # rescale rows so normals are unit length
        normals = normals / norms[:, None]
        offsets = offsets / norms
        dim = normals.shape[1]
        self.normals = normals
        self.offsets = offsets
        self.normals.setflags(write=False)
        self.offsets.setflags(write=False)
        lo, hi = self._bounding_box()
        if center is None:
            center = self._chebyshev_center()
        corner = np.maximum(np.abs(lo), np.abs(hi))
        super().__init__(dim, center, np.linalg.norm(corner))
        if not np.all(self.constraints(self.center) < 0):
            raise DomainError("polytope has empty interior")

    def _bounding_box(self):
        n = self.normals.shape[1]
        lo = np.empty(n)
        hi = np.empty(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            hi[i] = self._lp_max(e)
            lo[i] = -self._lp_max(-e)
        return lo, hi

    def _lp_max(self, u):
        res = linprog(-np.asarray(u, dtype=float), A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.normals.shape[1], method="highs")
        if res.status == 3:
            raise DomainError("polytope is unbounded")
        if res.status != 0:
            raise DomainError(f"linear program failed: {res.message}")
        return -res.fun

    def _chebyshev_center(self):
        n = self.normals.shape[1]
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        a_ub = np.hstack([self.normals, np.ones((self.normals.shape[0], 1))])
        res = linprog(cost, A_ub=a_ub, b_ub=self.offsets,
                      bounds=[(None, None)] * n + [(0, None)], method="highs")
        if res.status != 0 or res.x[-1] <= 0:
            raise DomainError("polytope has empty interior")
        return res.x[:n]

    def constraints(self, x):
        return np.asarray(x, dtype=float) @ self.normals.T - self.offsets

    def rho(self, x):
        return np.max(self.constraints(x), axis=-1)

    def active_set(self, x, tol=BOUNDARY_TOL):
        return np.flatnonzero(np.abs(self.constraints(x)) <= tol)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.argmax(self.constraints(x), axis=-1)
        return self.normals[idx]

    def support_point(self, v):
        raise DomainError("support points of a polytope are set valued")

    def support_value(self, u):
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            return self._lp_max(u)
        return np.array([self._lp_max(row) for row in u.reshape(-1, u.shape[-1])]).reshape(u.shape[:-1])

    def to_spec(self):
        rows = np.hstack([self.normals, self.offsets[:, None]])
        return {"kind": self.kind, "n": self.dim, "halfspaces": rows.tolist()}


class IntervalProduct(PolytopeBase):
    """Box ``prod (lo_i, hi_i)``."""

    kind = "interval-product"

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ArgumentError("need lo < hi componentwise")
        n = lo.size
        eye = np.eye(n)
        self.lo = lo
        self.hi = hi
        super().__init__(np.vstack([eye, -eye]), np.concatenate([hi, -lo]), center=(lo + hi) / 2)

    def support_value(self, u):
        u = np.asarray(u, dtype=float)
        return np.sum(np.maximum(u * self.lo, u * self.hi), axis=-1)

    def to_spec(self):
        return {"kind": self.kind, "n": self.dim, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


# ---------------------------------------------------------------------------
# generic inverse Gauss map


def _ray_hits(domain, x, d, iters=80):
    """Vectorised bisection for ``rho(x + t d) = 0`` with ``rho(x) < 0``."""
    x = np.broadcast_to(x, d.shape)
    t_hi = np.full(d.shape[:-1], 2.0 * domain.radius + 2.0 * np.linalg.norm(domain.center))
    t_lo = np.zeros(d.shape[:-1])
    for _ in range(iters):
        mid = 0.5 * (t_lo + t_hi)
        inside = domain.rho(x + mid[..., None] * d) < 0
        t_lo = np.where(inside, mid, t_lo)
        t_hi = np.where(inside, t_hi, mid)
    return 0.5 * (t_lo + t_hi)


def _fd_hessian(domain, x, h):
    n = x.shape[-1]
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append((domain.grad(x + e) - domain.grad(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def _newton_lagrange(domain, x, v, iters=50, tol=1e-13):
    """Newton on ``grad rho(x) = mu v, rho(x) = 0``; v has unit rows (m, n)."""
    n = domain.dim
    g = domain.grad(x)
    mu = np.linalg.norm(g, axis=-1)
    h = 1e-6 * max(domain.radius, 1.0)
    ok = np.zeros(x.shape[0], dtype=bool)
    for _ in range(iters):
        g = domain.grad(x)
        r = domain.rho(x)
        res = np.concatenate([g - mu[:, None] * v, r[:, None]], axis=1)
        ok = (np.max(np.abs(res), axis=1) <= tol * np.maximum(1.0, mu)) & (mu > 0)
        if ok.all():
            break
        jac = np.zeros((x.shape[0], n + 1, n + 1))
        jac[:, :n, :n] = _fd_hessian(domain, x, h)
        jac[:, :n, n] = -v
        jac[:, n, :n] = g
        try:
            step = np.linalg.solve(jac, -res[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        step = np.where(ok[:, None], 0.0, step)
        x = x + step[:, :n]
        mu = mu + step[:, n]
        if not np.all(np.isfinite(x)):
            break
    good = ok & np.all(np.isfinite(x), axis=1) & (np.abs(domain.rho(x)) <= BOUNDARY_TOL)
    cos = np.sum(_safe_unit(domain.grad(x)) * v, axis=1)
    good &= cos >= 1 - 1e-12
    return x, good


def _safe_unit(g):
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    return g / np.where(norm == 0, 1.0, norm)


def _lagrange_support(domain, v):
    """Inverse Gauss map for a smooth strictly convex domain.

    Newton on the Lagrange system, started at the ray hit from the centre.
    Rows that fail are continued along the great circle from the normal of
    that start point (whose support point is known exactly) to the target.
    """
    shape = v.shape
    v = v.reshape(-1, domain.dim)
    x0 = domain.center + _ray_hits(domain, domain.center, v)[:, None] * v
    x, good = _newton_lagrange(domain, x0.copy(), v)
    for i in np.flatnonzero(~good):
        x[i] = _continuation_support(domain, x0[i], v[i])
    return x.reshape(shape)


def _continuation_support(domain, x_start, v, min_step=1e-6):
    u = _safe_unit(domain.grad(x_start))
    cos = np.clip(u @ v, -1.0, 1.0)
    angle = math.acos(cos)
    if angle < 1e-15:
        return x_start
    # orthonormal frame of the great circle through u and v
    w = v - cos * u
    if np.linalg.norm(w) < 1e-14:
        w = np.zeros_like(u)
        w[np.argmin(np.abs(u))] = 1.0
        w -= (w @ u) * u
    w /= np.linalg.norm(w)
    x = x_start.copy()
    done = 0.0
    step = angle / 8
    while done < angle:
        step = min(step, angle - done)
        theta = done + step
        target = math.cos(theta) * u + math.sin(theta) * w
        xn, ok = _newton_lagrange(domain, x[None, :].copy(), target[None, :])
        if ok[0]:
            x = xn[0]
            done = theta
            step *= 1.5
        else:
            step /= 2
            if step < min_step:
                raise NumericError(
                    f"support point continuation stalled at angle {done:.3g} of {angle:.3g}",
                    residual=float(abs(domain.rho(x))),
                )
    return x


# ---------------------------------------------------------------------------
# domain-level operations


def gauss_map(domain, x, tol=BOUNDARY_TOL):
    """Unit outer normal at a boundary point."""
    x = np.asarray(x, dtype=float)
    r = np.abs(domain.rho(x))
    if np.any(r > tol):
        raise DomainError(f"point is not on the boundary (|rho| = {np.max(r):.3g})")
    if not domain.smooth:
        active = np.atleast_1d(np.sum(np.abs(domain.constraints(x)) <= tol, axis=-1))
        if np.any(active != 1):
            raise DomainError("Gauss map undefined at a nonsmooth boundary point")
    g = domain.grad(x)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def support_point(domain, v):
    """Boundary point maximising ``<x, v>`` over the closure (smooth kinds)."""
    if not domain.smooth:
        raise DomainError("support_point requires a smooth strictly convex base")
    return domain.support_point(v)


def support_interval(domain, u):
    """``(min, max)`` of ``<x, u>`` over the closure; entries may be infinite."""
    u = np.asarray(u, dtype=float)
    return -domain.support_value(-u), domain.support_value(u)


def boundary_intersection(domain, x, d):
    """Exit parameter ``t > 0`` of the ray ``x + t d`` from an interior point."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if not abs(np.linalg.norm(d) - 1.0) <= 1e-12:
        raise ArgumentError("direction must be a unit vector")
    if not domain.rho(x) < 0:
        raise DomainError("start point is not interior")
    if isinstance(domain, PolytopeBase):
        speed = domain.normals @ d
        slack = domain.offsets - domain.normals @ x
        hits = slack[speed > 0] / speed[speed > 0]
        if hits.size == 0:
            raise DomainError("ray does not leave the domain")
        return float(hits.min())
    t_max = 2.0 * domain.radius
    phi = lambda t: float(domain.rho(x + t * d))
    if phi(t_max) <= 0:
        raise DomainError("no boundary crossing within 2R; inconsistent domain")
    t = brentq(phi, 0.0, t_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    slope = float(domain.grad(x + t * d) @ d)
    if slope > 0:
        t_new = t - phi(t) / slope
        if abs(phi(t_new)) <= abs(phi(t)):
            t = t_new
    return t


def check_strict_convexity(domain, samples=2000, seed=0):
    """Sampled midpoint test: midpoints of distinct boundary points are interior.

    Returns the largest ``rho`` value found at a midpoint (negative is good).
    """
    rng = np.random.default_rng(seed)
    u = _unit(rng.normal(size=(samples, domain.dim)))
    v = _unit(rng.normal(size=(samples, domain.dim)))
    x = domain.support_point(u)
    y = domain.support_point(v)
    keep = np.linalg.norm(x - y, axis=1) > 1e-6
    return float(np.max(domain.rho(0.5 * (x[keep] + y[keep]))))


def sample_interior(domain, count, rng, shrink=1.0):
    """Uniform draws from ``center + shrink*(domain - center)`` by rejection."""
    c = domain.center
    out = []
    while sum(len(o) for o in out) < count:
        x = c + domain.radius * rng.uniform(-1.0, 1.0, size=(4 * count + 16, domain.dim))
        scaled = c + (x - c) / shrink
        out.append(x[domain.rho(scaled) < 0])
    return np.concatenate(out)[:count]
