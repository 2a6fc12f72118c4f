"""Complex geodesics of a tube domain over a smooth strictly convex base.

A geodesic is determined by ``a`` in C^n, ``b`` in R^n and the imaginary
offset ``Im f(0)``.  On the unit circle the real part of the geodesic is

    g(e^{it}) = support_point(2 Re(a e^{it}) + b),

and the geodesic itself is the Schwarz integral of ``g`` plus ``i Im f(0)``.
The direction field ``2 Re(a e^{it}) + b`` may vanish at up to two angles;
there ``g`` jumps between two boundary points.

The Schwarz integral is evaluated as a power series whose coefficients come
from an FFT of the sampled profile.  Jumps are removed first with periodic
sawtooth functions whose Schwarz integral is a logarithm, so the remaining
function is continuous and its coefficients decay fast.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .base_geometry import support_point
from .errors import ArgumentError, DegenerateParamsError, NumericError, QuadratureError

TWO_PI = 2.0 * math.pi
RANK_TOL = 1e-12
SINGULAR_TOL = 1e-10
DEFAULT_M = 1024
MAX_M = 2**16
COEF_TOL = 1e-13


class FCase(str, enum.Enum):
    CIRCLE_EMBEDDING = "CIRCLE_EMBEDDING"
    SMALL_ARC = "SMALL_ARC"
    OPEN_SEMICIRCLE = "OPEN_SEMICIRCLE"
    TWO_ANTIPODAL_VALUES = "TWO_ANTIPODAL_VALUES"


SINGULAR_COUNT = {
    FCase.CIRCLE_EMBEDDING: 0,
    FCase.SMALL_ARC: 0,
    FCase.OPEN_SEMICIRCLE: 1,
    FCase.TWO_ANTIPODAL_VALUES: 2,
}


def _rank_and_frame(cols):
    """Numerical rank (relative threshold) and left singular vectors."""
    u, sv, _ = np.linalg.svd(cols, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return 0, u
    return int(np.sum(sv > RANK_TOL * sv[0])), u


@dataclass(frozen=True, eq=False)
class GeodesicParams:
    """``(a, b, Im f(0))``, normalised to ``|a|^2 + |b|^2 = 1``.

    Raises DegenerateParamsError when the direction map is constant, which
    covers ``(a, b) = 0`` and the segment image with 0 at an endpoint.
    """

    a: np.ndarray
    b: np.ndarray
    im_f0: np.ndarray = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=complex))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape or a.ndim != 1:
            raise ArgumentError("a and b must be vectors of the same length")
        im_f0 = np.zeros(a.size) if self.im_f0 is None else np.asarray(self.im_f0, dtype=float).reshape(a.size)
        scale = math.sqrt(float(np.sum(np.abs(a) ** 2) + np.sum(b**2)))
        if not scale > 0 or not math.isfinite(scale):
            raise DegenerateParamsError("(a, b) must not vanish")
        a = a / scale
        b = b / scale
        for name, value in (("a", a), ("b", b), ("im_f0", im_f0)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if _direction_is_constant(a, b):
            raise DegenerateParamsError("direction map is constant; the geodesic would be constant")

    @property
    def dim(self):
        return self.b.size

    def vector(self):
        """Real parameter vector ``(Re a, Im a, b)``."""
        return np.concatenate([self.a.real, self.a.imag, self.b])

    @classmethod
    def from_vector(cls, p, im_f0=None):
        p = np.asarray(p, dtype=float)
        n = p.size // 3
        return cls(p[:n] + 1j * p[n : 2 * n], p[2 * n :], im_f0)

    def with_im_f0(self, im_f0):
        return GeodesicParams(self.a, self.b, im_f0)

    def to_dict(self):
        return {
            "a": [[float(z.real), float(z.imag)] for z in self.a],
            "b": self.b.tolist(),
            "im_f0": self.im_f0.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        a = np.array([complex(re, im) for re, im in data["a"]])
        return cls(a, data["b"], data.get("im_f0"))


def _direction_is_constant(a, b):
    rank, u = _rank_and_frame(np.column_stack([a.real, a.imag, b]))
    if rank == 0:
        return True
    if rank > 1:
        return False
    e = u[:, 0]
    amp = 2.0 * math.hypot(float(a.real @ e), float(a.imag @ e))
    gamma = abs(float(b @ e))
    return gamma >= amp * (1.0 - RANK_TOL)


# ---------------------------------------------------------------------------
# the direction field


def h_poly(params, lam):
    """``h(lam) = a lam^2 + b lam + conj(a)``; shape ``lam.shape + (n,)``."""
    lam = np.asarray(lam, dtype=complex)[..., None]
    return params.a * lam**2 + params.b * lam + np.conj(params.a)


def f_tilde(params, t):
    """``2 Re(a e^{it}) + b``; equals ``conj(lam) h(lam)`` on the circle."""
    t = np.asarray(t, dtype=float)[..., None]
    return 2.0 * np.cos(t) * params.a.real - 2.0 * np.sin(t) * params.a.imag + params.b


def f_tilde_prime(params, t):
    t = np.asarray(t, dtype=float)[..., None]
    return -2.0 * np.sin(t) * params.a.real - 2.0 * np.cos(t) * params.a.imag


def direction_map(params, t):
    """Normalised direction field ``F``; NaN where it vanishes."""
    v = f_tilde(params, t)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(norm > 0, v / norm, np.nan)


def _refine_zero(params, t, iters=30):
    # Newton on d/dt |F~|^2 / 2
    for _ in range(iters):
        v = f_tilde(params, t)
        dv = f_tilde_prime(params, t)
        ddv = -2.0 * np.cos(t) * params.a.real + 2.0 * np.sin(t) * params.a.imag
        num = float(v @ dv)
        den = float(dv @ dv + v @ ddv)
        if den <= 0:
            break
        step = num / den
        t -= step
        if abs(step) < 1e-15:
            break
    return t % TWO_PI


def singular_points(params, tol=SINGULAR_TOL):
    """Angles in ``[0, 2 pi)`` where the direction field vanishes (at most two)."""
    A = 2.0 * params.a.real
    B = -2.0 * params.a.imag
    b = params.b
    rank, u = _rank_and_frame(np.column_stack([A, B]))
    candidates = []
    if rank == 2:
        cs, *_ = np.linalg.lstsq(np.column_stack([A, B]), -b, rcond=None)
        candidates.append(math.atan2(cs[1], cs[0]))
    elif rank == 1:
        e = u[:, 0]
        alpha, beta, gamma = float(A @ e), float(B @ e), float(b @ e)
        amp = math.hypot(alpha, beta)
        if abs(gamma) < amp:
            phase = math.atan2(beta, alpha)
            delta = math.acos(-gamma / amp)
            candidates += [phase + delta, phase - delta]
    zeros = []
    for t in candidates:
        t = _refine_zero(params, t % TWO_PI)
        if np.linalg.norm(f_tilde(params, t)) <= tol:
            if all(abs((t - s + math.pi) % TWO_PI - math.pi) > 1e-12 for s in zeros):
                zeros.append(t)
    return sorted(zeros)


def classify_case(params):
    """Shape of the direction map ``F = F~/|F~|`` on the circle."""
    zeros = singular_points(params)
    A = 2.0 * params.a.real
    B = -2.0 * params.a.imag
    rank, _ = _rank_and_frame(np.column_stack([A, B]))
    if len(zeros) == 2:
        case = FCase.TWO_ANTIPODAL_VALUES
    elif len(zeros) == 1:
        if rank < 2:
            raise DegenerateParamsError("zero at an endpoint of the segment image")
        case = FCase.OPEN_SEMICIRCLE
    elif rank < 2:
        case = FCase.SMALL_ARC
    else:
        G = np.column_stack([A, B])
        cs, *_ = np.linalg.lstsq(G, -params.b, rcond=None)
        off_plane = np.linalg.norm(G @ cs + params.b)
        if off_plane > RANK_TOL * max(1.0, np.linalg.norm(params.b)) or cs @ cs < 1.0:
            case = FCase.CIRCLE_EMBEDDING
        else:
            # 0 in the plane of the ellipse but outside it: F folds onto an arc
            case = FCase.SMALL_ARC
    if not _scan_confirms(params, case, zeros):
        raise NumericError(f"dense scan does not confirm case {case.value}")
    return case


def _largest_gap(F):
    """Largest empty angular gap of unit vectors lying in a common plane."""
    _, sv, vt = np.linalg.svd(F, full_matrices=False)
    if sv.size < 2 or sv[1] <= 1e-12 * sv[0]:
        same = np.all(F @ vt[0] * np.sign(F[0] @ vt[0]) > 0)
        return TWO_PI if same else math.pi
    ang = np.sort(np.arctan2(F @ vt[1], F @ vt[0]))
    gaps = np.diff(np.append(ang, ang[0] + TWO_PI))
    return float(gaps.max())


def _scan_confirms(params, case, zeros, samples=720):
    t = (np.arange(samples) + 0.5) * TWO_PI / samples
    F = direction_map(params, t)
    if case is FCase.TWO_ANTIPODAL_VALUES:
        t0, t1 = zeros
        inside = ((t - t0) % TWO_PI) < ((t1 - t0) % TWO_PI)
        ref = F[inside][0]
        dots = F @ ref
        return bool(np.all(np.abs(np.abs(dots) - 1) < 1e-9) and np.all((dots > 0) == inside))
    if case is FCase.SMALL_ARC:
        # image inside an open half circle: some angular gap exceeds pi
        return _largest_gap(F) > math.pi + 1e-9
    if case is FCase.OPEN_SEMICIRCLE:
        return _largest_gap(F) >= math.pi - 1e-9
    # circle embedding: consecutive samples move, no fold back
    steps = np.linalg.norm(np.diff(np.vstack([F, F[:1]]), axis=0), axis=1)
    turn = np.sum(np.diff(np.vstack([F, F[:2]]), axis=0)[:-1] * np.diff(np.vstack([F, F[:2]]), axis=0)[1:], axis=1)
    return bool(np.all(steps > 0) and np.all(turn > 0))


# ---------------------------------------------------------------------------
# boundary profiles and the Schwarz integral


def _sawtooth(t, t0):
    """Mean-zero periodic function with a unit upward jump at ``t0``; 0 at ``t0``."""
    x = (np.asarray(t, dtype=float) - t0) % TWO_PI
    return np.where(x == 0, 0.0, (math.pi - x) / TWO_PI)


@dataclass(frozen=True, eq=False)
class Jump:
    angle: float
    x_minus: np.ndarray
    x_plus: np.ndarray

    @property
    def size(self):
        return self.x_plus - self.x_minus


@dataclass(frozen=True, eq=False)
class BoundaryProfile:
    """Sampled boundary values of ``Re f`` and the Fourier data of the continuous part.

    ``values`` holds ``g(e^{i t_j})`` with NaN at singular grid angles.
    ``coeffs[k]`` is the k-th Fourier coefficient of ``g`` minus the jump
    sawtooth terms.
    """

    M: int
    angles: np.ndarray
    values: np.ndarray
    coeffs: np.ndarray
    jumps: tuple = ()
    case: FCase | None = None
    params: GeodesicParams | None = None
    tail: float = 0.0

    @property
    def singular(self):
        return [j.angle for j in self.jumps]

    @classmethod
    def from_samples(cls, values, jumps=(), **kw):
        """Profile from samples on the uniform grid ``t_j = 2 pi j / M``."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        M = values.shape[0]
        angles = TWO_PI * np.arange(M) / M
        coeffs, tail = _coefficients(angles, values, jumps)
        return cls(M=M, angles=angles, values=values, coeffs=coeffs, jumps=tuple(jumps), tail=tail, **kw)

    def error_estimate(self, radius):
        """Rough bound on the series error for evaluation at ``|lam| <= radius``."""
        radius = min(float(radius), 1.0)
        reach = self.M / 2 if radius >= 1.0 else min(self.M / 2, 1.0 / (1.0 - radius))
        return 2.0 * self.tail * reach

    def boundary_values(self, t):
        """Continuous extension of ``Re f`` to the circle (jump points excluded)."""
        return self.evaluate(np.exp(1j * np.asarray(t, dtype=float)), boundary=True).real

    def evaluate(self, lam, boundary=False):
        """Schwarz integral of the profile (no imaginary offset), shape ``lam.shape + (n,)``."""
        lam = np.asarray(lam, dtype=complex)
        if not boundary and np.any(np.abs(lam) >= 1):
            raise ArgumentError("evaluation point outside the open disc")
        flat = lam.ravel()
        out = _series(self.coeffs, flat)
        for jump in self.jumps:
            out = out + (1j / math.pi) * np.log(1.0 - flat * np.exp(-1j * jump.angle))[:, None] * jump.size
        return out.reshape(lam.shape + (self.coeffs.shape[1],))

    def derivative(self, lam):
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        k = np.arange(1, self._effective_length())
        out = np.zeros((flat.size, self.coeffs.shape[1]), dtype=complex)
        for start in range(0, flat.size, 256):
            chunk = flat[start : start + 256]
            out[start : start + 256] = 2.0 * (_powers(chunk, k.size) * k) @ self.coeffs[1 : k.size + 1]
        for jump in self.jumps:
            e = np.exp(-1j * jump.angle)
            out = out + ((1j / math.pi) * (-e) / (1.0 - flat * e))[:, None] * jump.size
        return out.reshape(lam.shape + (self.coeffs.shape[1],))

    def _effective_length(self):
        return self.coeffs.shape[0]


def _coefficients(angles, values, jumps):
    M = angles.size
    rem = np.array(values, dtype=float)
    for jump in jumps:
        saw = _sawtooth(angles, jump.angle)
        rem -= saw[:, None] * jump.size[None, :]
    bad = ~np.all(np.isfinite(rem), axis=1)
    if np.any(bad):
        # singular grid angles: the continuous part takes the mean of the one-sided limits
        for j in np.flatnonzero(bad):
            own = [jp for jp in jumps if abs((angles[j] - jp.angle + math.pi) % TWO_PI - math.pi) < 1e-12]
            if not own:
                raise ArgumentError("non-finite profile value away from a jump")
            value = 0.5 * (own[0].x_plus + own[0].x_minus)
            for jp in jumps:
                if jp is not own[0]:
                    value = value - _sawtooth(angles[j], jp.angle) * jp.size
            rem[j] = value
    c = np.fft.rfft(rem, axis=0) / M
    c = c[: M // 2]
    tail = float(np.max(np.abs(c[M // 4 :]))) if M >= 8 else 0.0
    # drop the negligible tail so series evaluation stays cheap
    mags = np.max(np.abs(c), axis=1)
    keep = np.flatnonzero(mags > 1e-18 * max(mags.max(), 1e-300))
    length = int(keep[-1]) + 1 if keep.size else 1
    return c[:length], tail


def _powers(lam, count, block=64):
    """``lam[:, None] ** arange(count)`` built blockwise: ``lam^(qB+j) = (lam^B)^q lam^j``."""
    small = np.cumprod(np.column_stack([np.ones_like(lam)] + [lam] * (block - 1)), axis=1)
    blocks = -(-count // block)
    big = np.cumprod(np.column_stack([np.ones_like(lam)] + [lam**block] * (blocks - 1)), axis=1)
    return (big[:, :, None] * small[:, None, :]).reshape(lam.size, -1)[:, :count]


def _series(coeffs, lam, chunk=256):
    """``c_0 + 2 sum_{k>=1} c_k lam^k`` for a flat array ``lam``."""
    K = coeffs.shape[0]
    out = np.empty((lam.size, coeffs.shape[1]), dtype=complex)
    weights = coeffs.copy()
    weights[1:] *= 2.0
    for start in range(0, lam.size, chunk):
        part = lam[start : start + chunk]
        r = float(np.max(np.abs(part))) if part.size else 0.0
        # terms with r^k below 1e-20 cannot affect the sum
        count = K if r >= 1.0 else min(K, int(-46.0 / math.log(max(r, 1e-300))) + 2)
        out[start : start + chunk] = _powers(part, count) @ weights[:count]
    return out


def boundary_profile(domain, params, M=None, coef_tol=COEF_TOL, max_M=MAX_M, classify=True):
    """Sample ``g = support_point(F~)`` and build the Schwarz data.

    With ``M=None`` the grid starts at 1024 points and is doubled until the
    upper quarter of the Fourier spectrum of the continuous part falls below
    ``coef_tol`` (or ``max_M`` is reached).  A given ``M`` is used as is.
    ``classify=False`` skips the case label, which inner solver loops do not need.
    """
    if M is not None and M < 64:
        raise ArgumentError("grid size must be at least 64")
    zeros = singular_points(params)
    jumps = []
    for t0 in zeros:
        d = f_tilde_prime(params, t0)
        jumps.append(Jump(t0, support_point(domain, -d), support_point(domain, d)))
    size = DEFAULT_M if M is None else int(M)
    while True:
        angles = TWO_PI * np.arange(size) / size
        vecs = f_tilde(params, angles)
        norms = np.linalg.norm(vecs, axis=1)
        regular = norms > 0
        for jump in jumps:
            # only exact coincidences with a jump use the midpoint convention
            near = np.abs((angles - jump.angle + math.pi) % TWO_PI - math.pi) < 1e-12
            regular &= ~near
        values = np.full((size, params.dim), np.nan)
        values[regular] = support_point(domain, vecs[regular])
        coeffs, tail = _coefficients(angles, values, jumps)
        if M is not None or tail <= coef_tol or size >= max_M:
            break
        size *= 2
    case = None
    if classify:
        try:
            case = classify_case(params)
        except NumericError:
            pass
    return BoundaryProfile(M=size, angles=angles, values=values, coeffs=coeffs, jumps=tuple(jumps),
                           case=case, params=params, tail=tail)


def schwarz_integral(profile, im_f0, lam, r_max=0.999, tol=1e-6):
    """``f(lam) = (1/2pi) int (xi + lam)/(xi - lam) g(xi) |dxi| + i im_f0``."""
    lam = np.asarray(lam, dtype=complex)
    radius = float(np.max(np.abs(lam))) if lam.size else 0.0
    if radius > r_max:
        raise ArgumentError(f"|lambda| = {radius:.6g} exceeds r_max = {r_max}")
    estimate = profile.error_estimate(radius)
    if estimate > tol:
        raise QuadratureError(f"quadrature error estimate {estimate:.3g} above tolerance {tol:.3g}", estimate)
    im_f0 = np.zeros(profile.coeffs.shape[1]) if im_f0 is None else np.asarray(im_f0, dtype=float)
    return profile.evaluate(lam) + 1j * im_f0


def geodesic_function(domain, params, M=None):
    """Callable ``lam -> f(lam)`` for the geodesic with the given parameters."""
    profile = boundary_profile(domain, params, M=M)
    im_f0 = params.im_f0

    def f(lam):
        return profile.evaluate(lam) + 1j * im_f0

    f.profile = profile
    return f


# ---------------------------------------------------------------------------
# boundary behaviour


RICHARDSON_RADII = (0.9, 0.99, 0.999, 0.9999)
DIVERGENCE_THRESHOLD = 50.0


@dataclass
class SingularLimit:
    angle: float
    x_minus: np.ndarray
    x_plus: np.ndarray
    radial_real: np.ndarray
    segment_distance: float
    im_projection: list
    im_sign: int
    monotone: bool
    threshold_eps: float

    def to_dict(self):
        return {
            "angle": self.angle,
            "x_minus": self.x_minus.tolist(),
            "x_plus": self.x_plus.tolist(),
            "radial_real": self.radial_real.tolist(),
            "segment_distance": self.segment_distance,
            "im_projection": list(self.im_projection),
            "im_sign": self.im_sign,
            "monotone": self.monotone,
            "threshold_eps": self.threshold_eps,
        }


@dataclass
class LimitReport:
    case: FCase
    continuous: bool
    singular: list = field(default_factory=list)
    boundary_max_rho: float | None = None
    boundary_max_dev: float | None = None
    arc_values: list | None = None

    def to_dict(self):
        return {
            "case": self.case.value,
            "continuous": self.continuous,
            "singular": [s.to_dict() for s in self.singular],
            "boundary_max_rho": self.boundary_max_rho,
            "boundary_max_dev": self.boundary_max_dev,
            "arc_values": None if self.arc_values is None else [x.tolist() for x in self.arc_values],
        }


def _segment_distance(p, x0, x1):
    d = x1 - x0
    s = np.clip((p - x0) @ d / (d @ d), 0.0, 1.0)
    return float(np.linalg.norm(p - (x0 + s * d)))


def _richardson(values, ratio=10.0):
    table = [np.asarray(v) for v in values]
    while len(table) > 1:
        table = [(ratio * table[i + 1] - table[i]) / (ratio - 1.0) for i in range(len(table) - 1)]
    return table[0]


def _radial_value(profile, im_f0, angle, eps):
    """``f((1 - eps) e^{i angle})`` with the own-jump logarithm taken exactly."""
    lam = (1.0 - eps) * np.exp(1j * angle)
    out = _series(profile.coeffs, np.array([lam]))[0]
    for jump in profile.jumps:
        if abs((jump.angle - angle + math.pi) % TWO_PI - math.pi) < 1e-15:
            log_term = math.log(eps)
        else:
            log_term = np.log(1.0 - lam * np.exp(-1j * jump.angle))
        out = out + (1j / math.pi) * log_term * jump.size
    return out + 1j * im_f0


def boundary_limits(domain, params, profile=None, threshold=DIVERGENCE_THRESHOLD, samples=257):
    """Boundary behaviour of the geodesic: continuity or one-sided limits at jumps."""
    if profile is None:
        profile = boundary_profile(domain, params)
    case = classify_case(params)
    if not profile.jumps:
        t = (np.arange(samples) + 0.5) * TWO_PI / samples
        re_boundary = profile.boundary_values(t)
        direct = support_point(domain, f_tilde(params, t))
        return LimitReport(
            case=case,
            continuous=True,
            boundary_max_rho=float(np.max(np.abs(domain.rho(re_boundary)))),
            boundary_max_dev=float(np.max(np.linalg.norm(re_boundary - direct, axis=1))),
        )
    reference = profile.jumps[0].size / np.linalg.norm(profile.jumps[0].size)
    limits = []
    for jump in profile.jumps:
        radial = [_radial_value(profile, params.im_f0, jump.angle, 1.0 - r) for r in RICHARDSON_RADII]
        real_limit = _richardson([v.real for v in radial])
        proj = [float((v.imag - params.im_f0) @ reference) for v in radial]
        eps, crossing = 1e-1, float("nan")
        previous = None
        monotone = all(abs(b) > abs(a) for a, b in zip(proj, proj[1:]))
        while eps > 1e-300:
            value = float((_radial_value(profile, params.im_f0, jump.angle, eps).imag - params.im_f0) @ reference)
            if previous is not None and abs(value) <= abs(previous):
                monotone = False
            previous = value
            if abs(value) > threshold:
                crossing = eps
                break
            eps /= 10.0
        limits.append(
            SingularLimit(
                angle=jump.angle,
                x_minus=jump.x_minus,
                x_plus=jump.x_plus,
                radial_real=real_limit,
                segment_distance=_segment_distance(real_limit, jump.x_minus, jump.x_plus),
                im_projection=proj,
                im_sign=int(np.sign(previous)),
                monotone=monotone,
                threshold_eps=crossing,
            )
        )
    arc_values = None
    if case is FCase.TWO_ANTIPODAL_VALUES:
        arc_values = [profile.jumps[0].x_minus, profile.jumps[0].x_plus]
    return LimitReport(case=case, continuous=False, singular=limits, arc_values=arc_values)


def symmetrize(trace):
    """``f(lam) -> (f(lam) + conj(f(conj lam)))/2``; real on (-1, 1)."""
    inner = trace.evaluate

    def evaluate(lam):
        lam = np.asarray(lam, dtype=complex)
        return 0.5 * (inner(lam) + np.conj(inner(np.conj(lam))))

    return dataclasses.replace(trace, evaluate=evaluate)
