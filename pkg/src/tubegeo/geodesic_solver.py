"""Two-point problem for complex geodesics and the Kobayashi distance.

Given ``w, z`` in the tube, find parameters ``(a, b)`` and ``s`` in (0, 1)
with ``f(0) = w`` and ``f(s) = z``.  ``Im f(0)`` is fixed to ``Im w``; the
remaining unknowns are the normalised ``(a, b)`` (a point of the sphere
S^{3n-1}) and ``s = (1 + tanh sigma)/2``.  The 3n real equations are solved by
damped Gauss-Newton with a central-difference Jacobian in the tangent space
of the sphere, from several starting points, with a homotopy in the end
points as a fallback.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .base_geometry import gauss_map
from .errors import ArgumentError, DegenerateParamsError, DomainError, NumericError, QuadratureError
from .geodesic_family import (
    TWO_PI,
    GeodesicParams,
    boundary_profile,
    f_tilde,
    classify_case,
)

log = logging.getLogger(__name__)

ACCEPT_TOL = 1e-6
TARGET_TOL = 1e-11
FD_STEP = 1e-6


def _as_point(x, dim):
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.size != dim:
        raise ArgumentError(f"expected a point of C^{dim}, got {x.size} coordinates")
    return x


def _s_of(sigma):
    return 0.5 * (1.0 + math.tanh(sigma))


def _one_minus_s(sigma):
    # 1 - s = 1/(1 + e^{2 sigma}), computed without cancellation
    if sigma > 0:
        e = math.exp(-2.0 * sigma)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(2.0 * sigma))


def poincare_from_sigma(sigma):
    """``atanh(s)`` for ``s = (1 + tanh sigma)/2`` without loss near s = 1."""
    one_minus = _one_minus_s(sigma)
    return 0.5 * math.log((2.0 - one_minus) / one_minus)


@dataclass
class GeodesicTrace:
    """A geodesic through two points (or two boundary points)."""

    params: GeodesicParams
    s: float | None
    profile: object
    residuals: tuple
    evaluate: Callable
    w: np.ndarray | None = None
    z: np.ndarray | None = None
    sigma: float | None = None
    endpoints: tuple | None = None
    info: dict = field(default_factory=dict)

    @property
    def distance(self):
        if self.sigma is not None:
            return poincare_from_sigma(self.sigma)
        return math.atanh(self.s)

    def to_dict(self, radii=(0.0, 0.5, 0.9, 0.99), n_angles=16, limits=None):
        """JSON-ready serialisation; ``f`` sampled on a polar grid."""
        angles = TWO_PI * np.arange(n_angles) / n_angles
        grid = np.array([r * np.exp(1j * angles) for r in radii])
        values = self.evaluate(grid)
        data = {
            "params": self.params.to_dict(),
            "s": self.s,
            "grid": {"M": self.profile.M, "radii": list(radii), "n_angles": n_angles},
            "values": [[[[float(v.real), float(v.imag)] for v in point] for point in row] for row in values],
            "case": self.profile.case.value if self.profile.case else None,
            "singular_points": self.profile.singular,
            "residuals": list(self.residuals),
            "real_curve": bool(self.info.get("real_curve", False)),
        }
        if self.w is not None:
            data["w"] = [[float(v.real), float(v.imag)] for v in self.w]
            data["z"] = [[float(v.real), float(v.imag)] for v in self.z]
            data["distance"] = self.distance
        if self.endpoints is not None:
            data["endpoints"] = [x.tolist() for x in self.endpoints]
        if limits is not None:
            data["limits"] = limits.to_dict()
        return data


def trace_from_params(domain, params, s, w=None, z=None, M=None):
    """Build a trace for given parameters (residuals against ``w, z`` if given)."""
    profile = boundary_profile(domain, params, M=M)
    im_f0 = params.im_f0

    def evaluate(lam):
        return profile.evaluate(lam) + 1j * im_f0

    residuals = ()
    if w is not None:
        vals = evaluate(np.array([0.0, s]))
        residuals = (float(np.max(np.abs(vals[0] - w))), float(np.max(np.abs(vals[1] - z))))
    sigma = math.atanh(2.0 * s - 1.0) if s is not None else None
    return GeodesicTrace(params, s, profile, residuals, evaluate, w=w, z=z, sigma=sigma)


# ---------------------------------------------------------------------------
# Newton machinery


class _Problem:
    def __init__(self, domain, w, z, M=None):
        self.domain = domain
        self.M = M
        self.w = w
        self.z = z
        self.im0 = w.imag.copy()
        self.n = domain.dim
        self.evaluations = 0

    def residual(self, p, sigma, M=None):
        self.evaluations += 1
        params = GeodesicParams.from_vector(p, self.im0)
        prof = boundary_profile(self.domain, params, M=self.M if M is None else M, classify=False)
        s = _s_of(sigma)
        if not 0.0 < s < 1.0:
            raise NumericError("s left the open interval")
        vals = prof.evaluate(np.array([0.0, s]))
        f0 = vals[0]
        fs = vals[1] + 1j * self.im0
        r = np.concatenate([f0.real - self.w.real, fs.real - self.z.real, fs.imag - self.z.imag])
        return r, prof

    def best_sigma(self, p, grid=np.linspace(-5.0, 8.0, 53)):
        params = GeodesicParams.from_vector(p, self.im0)
        prof = boundary_profile(self.domain, params, M=self.M, classify=False)
        s = np.array([_s_of(g) for g in grid])
        vals = prof.evaluate(np.concatenate([[0.0], s]))
        fs = vals[1:] + 1j * self.im0
        err = np.linalg.norm(fs - self.z, axis=1) ** 2 + np.linalg.norm(vals[0].real - self.w.real) ** 2
        return float(grid[int(np.argmin(err))])


def _tangent_basis(p):
    _, _, vt = np.linalg.svd(p[None, :])
    return vt[1:].T


def _normalize(p):
    return p / np.linalg.norm(p)


def _jacobian(problem, p, sigma, prof):
    basis = _tangent_basis(p)
    cols = []
    for i in range(basis.shape[1]):
        dp = FD_STEP * basis[:, i]
        rp, _ = problem.residual(_normalize(p + dp), sigma, prof.M)
        rm, _ = problem.residual(_normalize(p - dp), sigma, prof.M)
        cols.append((rp - rm) / (2 * FD_STEP))
    # the profile does not depend on sigma: d f(s)/d sigma = f'(s) ds/dsigma
    s = _s_of(sigma)
    df = prof.derivative(np.array([s]))[0] * (2.0 * s * _one_minus_s(sigma))
    cols.append(np.concatenate([np.zeros(problem.n), df.real, df.imag]))
    return np.column_stack(cols), basis


_RECOVERABLE = (DegenerateParamsError, QuadratureError, NumericError, np.linalg.LinAlgError, FloatingPointError)


def _newton(problem, p, sigma, max_iter=200, tol=TARGET_TOL):
    """Levenberg-Marquardt on the sphere; returns ``(p, sigma, |r|, iterations)``."""
    p = _normalize(np.asarray(p, dtype=float))
    r, prof = problem.residual(p, sigma)
    norm = float(np.linalg.norm(r))
    mu = 1e-6
    it = 0
    for it in range(1, max_iter + 1):
        if norm <= tol:
            break
        try:
            J, basis = _jacobian(problem, p, sigma, prof)
        except _RECOVERABLE:
            break
        JtJ = J.T @ J
        g = J.T @ r
        scale = np.diag(JtJ).max(initial=1e-300)
        accepted = False
        while mu < 1e8:
            try:
                step = np.linalg.solve(JtJ + mu * scale * np.eye(JtJ.shape[0]), -g)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            dp, dsigma = basis @ step[:-1], step[-1]
            # trust limits on the sphere and on sigma
            cut = min(1.0, 0.3 / max(np.linalg.norm(dp), 1e-300), 1.0 / max(abs(dsigma), 1e-300))
            try:
                p_try = _normalize(p + cut * dp)
                s_try = sigma + cut * dsigma
                r_try, prof_try = problem.residual(p_try, s_try)
                n_try = float(np.linalg.norm(r_try))
            except _RECOVERABLE:
                n_try = math.inf
            if n_try <= (1.0 - 1e-4 * cut) * norm:
                accepted = True
                break
            mu *= 10
        if not accepted:
            break
        mu = max(mu / 10, 1e-12)
        improvement = n_try / norm
        p, sigma, r, prof, norm = p_try, s_try, r_try, prof_try, n_try
        if norm < 1e-9 and improvement > 0.5:
            # at noise level of the quadrature
            break
    return p, sigma, norm, it


def _starts(domain, w, z, rng, count):
    n = domain.dim
    d = z - w
    starts = []
    if np.linalg.norm(d.real) > 0:
        u = d.real / np.linalg.norm(d.real)
        # connect_boundary on the support points of -d and d: a = u/2, b = 0
        starts.append(np.concatenate([u / 2, np.zeros(n), np.zeros(n)]))
    dn = d / np.linalg.norm(d)
    starts.append(np.concatenate([dn.real / 2, dn.imag / 2, np.zeros(n)]))
    mid = 0.5 * (w.real + z.real) - domain.center
    if np.linalg.norm(mid) > 0:
        starts.append(np.concatenate([dn.real / 2, dn.imag / 2, mid / max(domain.radius, 1e-300)]))
    while len(starts) < count:
        starts.append(rng.normal(size=3 * n))
    return [_normalize(s) for s in starts[:count]]


def _validate_pair(domain, w, z):
    if not domain.smooth:
        raise DomainError("geodesics are computed for smooth strictly convex bases only")
    w = _as_point(w, domain.dim)
    z = _as_point(z, domain.dim)
    for name, x in (("w", w), ("z", z)):
        if not domain.rho(x.real) < 0:
            raise DomainError(f"point outside base ({name})")
    if np.array_equal(w, z):
        raise ArgumentError("w and z coincide")
    return w, z


def _finish(problem, p, sigma, start_index, iterations):
    params = GeodesicParams.from_vector(p, problem.im0)
    s = _s_of(sigma)
    trace = trace_from_params(problem.domain, params, s, problem.w, problem.z, M=problem.M)
    trace.sigma = sigma
    trace.info.update(start=start_index, iterations=iterations, evaluations=problem.evaluations)
    trace.info["real_curve"] = bool(np.all(problem.w.imag == 0) and np.all(problem.z.imag == 0))
    return trace


def _solve_from(problem, p0, max_iter):
    sigma0 = problem.best_sigma(p0)
    return _newton(problem, p0, sigma0, max_iter=max_iter)


def _homotopy(problem, p, sigma, max_iter, min_step=1e-4):
    """Continue from the geodesic through ``(f_p(0), f_p(s))`` to ``(w, z)``."""
    w, z = problem.w, problem.z
    params = GeodesicParams.from_vector(p, problem.im0)
    prof = boundary_profile(problem.domain, params)
    vals = prof.evaluate(np.array([0.0, _s_of(sigma)]))
    w0 = vals[0].real + 1j * problem.im0
    z0 = vals[1] + 1j * problem.im0
    tau, step = 0.0, 0.25
    norm = float("inf")
    while tau < 1.0:
        t_next = min(1.0, tau + step)
        sub = _Problem(problem.domain, w0 + t_next * (w - w0), z0 + t_next * (z - z0), problem.M)
        try:
            p_new, s_new, norm, _ = _newton(sub, p, sigma, max_iter=max_iter // 4 + 5, tol=1e-10)
        except _RECOVERABLE:
            norm = float("inf")
        if norm <= 1e-8:
            p, sigma, tau = p_new, s_new, t_next
            step = min(0.5, step * 1.5)
        else:
            step *= 0.5
            if step < min_step:
                return p, sigma, float("inf")
    p, sigma, norm, _ = _newton(problem, p, sigma, max_iter=max_iter)
    return p, sigma, norm


def connect(domain, w, z, max_starts=16, max_iter=200, tol=ACCEPT_TOL, seed=0, M=None):
    """Complex geodesic ``f`` with ``f(0) = w`` and ``f(s) = z``.

    ``M`` fixes the boundary grid; by default it is chosen adaptively.
    """
    w, z = _validate_pair(domain, w, z)
    problem = _Problem(domain, w, z, M)
    rng = np.random.default_rng(seed)
    best = (float("inf"), None, None, -1, 0)
    for index, p0 in enumerate(_starts(domain, w, z, rng, max_starts)):
        try:
            p, sigma, norm, its = _solve_from(problem, p0, max_iter)
        except _RECOVERABLE as exc:
            log.debug("start %d failed: %s", index, exc)
            continue
        if norm < best[0]:
            best = (norm, p, sigma, index, its)
        if norm <= TARGET_TOL * 10:
            break
        if index >= 2 and best[0] <= tol:
            break
    if best[0] > tol and best[1] is not None:
        log.debug("multistart best residual %.3g; trying homotopy", best[0])
        try:
            p, sigma, norm = _homotopy(problem, best[1], best[2], max_iter)
            if norm < best[0]:
                best = (norm, p, sigma, -1, 0)
        except _RECOVERABLE:
            pass
    if best[1] is None or best[0] > tol:
        raise NumericError(f"geodesic solver did not converge (best residual {best[0]:.3g})", residual=best[0])
    return _finish(problem, best[1], best[2], best[3], best[4])


def kobayashi_distance(domain, w, z, **kw):
    """Kobayashi distance of the tube, ``atanh(s)`` on the connecting geodesic."""
    w_ = _as_point(w, domain.dim)
    z_ = _as_point(z, domain.dim)
    if np.array_equal(w_, z_):
        if not domain.rho(w_.real) < 0:
            raise DomainError("point outside base")
        return 0.0
    return connect(domain, w_, z_, **kw).distance


def connect_boundary(domain, x, y, M=None):
    """Geodesic extending continuously to ``f(-1) = x`` and ``f(1) = y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = gauss_map(domain, x)
    v = gauss_map(domain, y)
    if np.linalg.norm(u - v) <= 1e-12:
        raise DomainError("boundary points with equal normals")
    params = GeodesicParams((v - u) / 4.0, (u + v) / 2.0)
    profile = boundary_profile(domain, params, M=M)

    def evaluate(lam):
        return profile.evaluate(lam, boundary=True)

    ends = profile.boundary_values(np.array([math.pi, 0.0]))
    residuals = (float(np.max(np.abs(ends[0] - x))), float(np.max(np.abs(ends[1] - y))))
    return GeodesicTrace(params, None, profile, residuals, evaluate, endpoints=(x, y))


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    boundary_rho: float
    misalignment: float
    interior_max_rho: float
    residuals: tuple
    passed: dict

    @property
    def ok(self):
        return all(self.passed.values())

    def to_dict(self):
        return dataclasses.asdict(self)


def verify_geodesic(domain, trace, boundary_tol=1e-8, align_tol=1e-6, residual_tol=ACCEPT_TOL,
                    radius=0.999, n_radii=12, n_angles=96):
    """Check the support-point certificate and the end point residuals."""
    profile = trace.profile
    regular = np.all(np.isfinite(profile.values), axis=1)
    g = profile.values[regular]
    boundary_rho = float(np.max(np.abs(domain.rho(g))))
    if trace.params is not None and boundary_rho <= 1e-3:
        normals = domain.grad(g)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        field_ = f_tilde(trace.params, profile.angles[regular])
        field_ /= np.linalg.norm(field_, axis=1, keepdims=True)
        misalignment = float(np.max(1.0 - np.sum(normals * field_, axis=1)))
    else:
        misalignment = float("inf")
    r = np.linspace(0.0, radius, n_radii)
    t = TWO_PI * (np.arange(n_angles) + 0.5) / n_angles
    grid = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    interior = float(np.max(domain.rho(trace.evaluate(grid).real)))
    if trace.w is not None:
        # independent re-evaluation on a doubled grid
        fine = boundary_profile(domain, trace.params, M=2 * profile.M)
        vals = fine.evaluate(np.array([0.0, trace.s])) + 1j * trace.params.im_f0
        residuals = (float(np.max(np.abs(vals[0] - trace.w))), float(np.max(np.abs(vals[1] - trace.z))))
    elif trace.endpoints is not None:
        ends = profile.boundary_values(np.array([math.pi, 0.0]))
        residuals = tuple(float(np.max(np.abs(e - x))) for e, x in zip(ends, trace.endpoints))
    else:
        residuals = trace.residuals
    passed = {
        "boundary": boundary_rho <= boundary_tol,
        "alignment": misalignment <= align_tol,
        "interior": interior < 0,
        "endpoints": bool(residuals) and max(residuals) <= residual_tol,
    }
    return VerificationReport(boundary_rho, misalignment, interior, residuals, passed)


# ---------------------------------------------------------------------------
# uniqueness


@dataclass
class UniquenessReport:
    restarts: int
    converged: int
    max_profile_deviation: float
    max_param_deviation: float
    max_imag_on_diameter: float | None
    max_imag_symmetrized: float | None

    def to_dict(self):
        return dataclasses.asdict(self)


def uniqueness_probe(domain, w, z, restarts=8, seed=0, max_iter=200, tol=ACCEPT_TOL):
    """Solve from independent random starts and compare the resulting profiles."""
    from .geodesic_family import symmetrize

    w, z = _validate_pair(domain, w, z)
    rng = np.random.default_rng(seed)
    problem = _Problem(domain, w, z)
    first = _starts(domain, w, z, rng, 1)
    starts = first + [_normalize(rng.normal(size=3 * domain.dim)) for _ in range(restarts - 1)]
    solutions = []
    for p0 in starts:
        try:
            p, sigma, norm, _ = _solve_from(problem, p0, max_iter)
            if norm > tol:
                p, sigma, norm = _homotopy(problem, p, sigma, max_iter)
        except _RECOVERABLE:
            continue
        if norm <= tol:
            solutions.append((p, sigma))
    M = 1024
    t = TWO_PI * (np.arange(M) + 0.5) / M
    profiles = [domain.support_point(f_tilde(GeodesicParams.from_vector(p), t)) for p, _ in solutions]
    dev = 0.0
    pdev = 0.0
    for i in range(len(solutions)):
        for j in range(i):
            dev = max(dev, float(np.max(np.abs(profiles[i] - profiles[j]))))
            pdev = max(pdev, float(np.max(np.abs(solutions[i][0] - solutions[j][0]))))
    imag = imag_sym = None
    if solutions and np.all(w.imag == 0) and np.all(z.imag == 0):
        r = np.linspace(-0.99, 0.99, 41)
        imag = imag_sym = 0.0
        for p, sigma in solutions:
            trace = _finish(problem, p, sigma, -1, 0)
            imag = max(imag, float(np.max(np.abs(trace.evaluate(r).imag))))
            imag_sym = max(imag_sym, float(np.max(np.abs(symmetrize(trace).evaluate(r).imag))))
    return UniquenessReport(restarts, len(solutions), dev if solutions else float("nan"), pdev, imag, imag_sym)
