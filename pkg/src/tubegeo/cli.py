"""Command line front end.

Subcommands: ``distance``, ``geodesic``, ``gromov-scan`` and ``verify``.
Exit codes: 0 ok, 1 configuration error, 2 solver failure, 3 budget
exhausted below target, 4 failed property check.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from .base_geometry import Ball, Ellipsoid, IntervalProduct, PolytopeBase, Superellipse, sample_interior
from .errors import ArgumentError, DomainError, NumericError, TubeGeoError
from .geodesic_family import boundary_limits
from .geodesic_solver import connect, connect_boundary, kobayashi_distance, uniqueness_probe, verify_geodesic
from .gromov import witness_search
from .metrics import affine_lower_bound, check_hilbert_inequality, lempert_search, product_distance_tube
from .reference_models import example2_check, siegel_check

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BUDGET, EXIT_PROPERTY = 0, 1, 2, 3, 4

CATALOG = {
    "ball2": lambda: Ball(2),
    "ball3": lambda: Ball(3),
    "ellipsoid2": lambda: Ellipsoid([1.0, 0.5]),
    "ellipsoid3": lambda: Ellipsoid([1.0, 0.7, 0.5]),
    "superellipse2": lambda: Superellipse([1.0, 1.0], 4),
    "square": lambda: IntervalProduct([0.0, 0.0], [1.0, 1.0]),
    "triangle": lambda: PolytopeBase([[0.0, -1.0], [-1.0, 0.0], [1.0, 1.0]], [0.0, 0.0, 1.0]),
}
MODEL_SPACES = ("polydisc",)

DEFAULTS = {
    "domain": "ball2",
    "points": None,
    "grid": None,
    "tol": 1e-6,
    "seed": 0,
    "out": None,
    "format": "json",
    "target": None,
    "degree": 2,
    "budget": 20,
    "strategy": None,
    "pairs": 10,
    "samples": 200,
    "restarts": 4,
}


class ConfigError(TubeGeoError):
    pass


# ---------------------------------------------------------------------------
# parsing


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def read_domain_file(path):
    """``key=value`` lines: kind, n, axes, p, lo, hi, halfspaces (rows ``u1,..,un,c`` split by ``;``)."""
    spec = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        spec[key] = value
    kind = spec.get("kind")
    n = int(spec["n"]) if "n" in spec else None
    if kind == "ball":
        return Ball(n or 2, radius=float(spec.get("radius", 1.0)))
    if kind == "ellipsoid":
        return Ellipsoid(_floats(spec["axes"]))
    if kind == "superellipse":
        axes = _floats(spec["axes"]) if "axes" in spec else [1.0] * (n or 2)
        return Superellipse(axes, float(spec.get("p", 4)))
    if kind == "interval-product":
        return IntervalProduct(_floats(spec["lo"]), _floats(spec["hi"]))
    if kind == "polytope":
        rows = np.array([_floats(r) for r in spec["halfspaces"].split(";") if r.strip()])
        return PolytopeBase(rows[:, :-1], rows[:, -1])
    raise ConfigError(f"unknown domain kind {kind!r}")


def load_domain(ref):
    if ref in CATALOG:
        return CATALOG[ref]()
    path = Path(ref)
    if path.is_file():
        try:
            return read_domain_file(path)
        except (KeyError, ValueError, IndexError) as exc:
            raise ConfigError(f"bad domain file {ref}: {exc}") from exc
    raise ConfigError(f"unknown domain {ref!r}")


def parse_points(text, dim=None):
    """``"0,0; 0.5+0.1j,0"`` -> list of complex vectors."""
    if not text:
        raise ConfigError("no points given")
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        try:
            pts.append(np.array([complex(c.strip().replace("i", "j")) for c in chunk.split(",")]))
        except ValueError as exc:
            raise ConfigError(f"malformed point literal {chunk.strip()!r}") from exc
    if dim is not None and any(p.size != dim for p in pts):
        raise ConfigError(f"points must have {dim} coordinates")
    return pts


def read_config(path):
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}") from exc
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def resolve(args):
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    try:
        for key in ("grid", "seed", "degree", "budget", "pairs", "samples", "restarts"):
            if cfg[key] is not None:
                cfg[key] = int(cfg[key])
        for key in ("tol", "target"):
            if cfg[key] is not None:
                cfg[key] = float(cfg[key])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["tol"] <= 0:
        raise ConfigError("tolerance must be positive")
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError("format is json or csv")
    cfg["command"] = args.command
    cfg["dev_hilbert_sign_bug"] = bool(getattr(args, "dev_hilbert_sign_bug", False))
    cfg["boundary"] = bool(getattr(args, "boundary", False))
    return cfg


def config_hash(cfg):
    keep = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(keep, sort_keys=True, default=str).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# output


def clean(obj):
    """JSON-safe copy with floats at 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.12g}")
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def envelope(cfg, body):
    head = {"command": cfg["command"], "config_hash": config_hash(cfg), "seed": cfg["seed"],
            "tolerances": {"residual": cfg["tol"], "sandwich_lower": 1e-9, "sandwich_upper": 1e-3}}
    head.update(body)
    return clean(head)


def emit(cfg, report, csv_text=None):
    if cfg["format"] == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
        if cfg["format"] == "csv" and csv_text is not None:
            Path(cfg["out"] + ".json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _pair(cfg, domain):
    pts = parse_points(cfg["points"], domain.dim)
    if len(pts) != 2:
        raise ConfigError("expected exactly two points")
    for p in pts:
        if not domain.rho(p.real) < 0:
            raise DomainError("point outside base")
    return pts


def cmd_distance(cfg):
    domain = load_domain(cfg["domain"])
    w, z = _pair(cfg, domain)
    body = {"domain": domain.to_spec(), "w": w, "z": z}
    if np.array_equal(w, z):
        body.update(k=0.0, lower=0.0, upper=0.0, s=0.0, residuals=[0.0, 0.0],
                    sandwich={"lower": True, "upper": True})
        emit(cfg, envelope(cfg, body))
        return EXIT_OK
    if isinstance(domain, IntervalProduct):
        k, s, residuals = product_distance_tube(domain.lo, domain.hi, w, z), None, []
        body["method"] = "exact product of strips"
    elif not domain.smooth:
        raise ConfigError("distances on non-box polytopes are not supported")
    else:
        trace = connect(domain, w, z, tol=cfg["tol"], seed=cfg["seed"], M=cfg["grid"])
        k, s, residuals = trace.distance, trace.s, list(trace.residuals)
        body["method"] = "geodesic"
    lower = affine_lower_bound(domain, w, z)
    upper = lempert_search(domain, w, z, degree=cfg["degree"])
    sandwich = {"lower": lower <= k + 1e-9, "upper": k <= upper.value + 1e-3}
    body.update(k=k, lower=lower, upper=upper.value, upper_fallback=upper.fallback, s=s,
                residuals=residuals, sandwich=sandwich)
    emit(cfg, envelope(cfg, body))
    return EXIT_OK if all(sandwich.values()) else EXIT_PROPERTY


def cmd_geodesic(cfg):
    domain = load_domain(cfg["domain"])
    if not domain.smooth:
        raise ConfigError("geodesics need a smooth strictly convex base")
    pts = parse_points(cfg["points"], domain.dim)
    if len(pts) != 2:
        raise ConfigError("expected exactly two points")
    if cfg["boundary"]:
        trace = connect_boundary(domain, pts[0].real, pts[1].real, M=cfg["grid"])
    else:
        trace = connect(domain, pts[0], pts[1], tol=cfg["tol"], seed=cfg["seed"], M=cfg["grid"])
    limits = boundary_limits(domain, trace.params, profile=trace.profile)
    body = {"domain": domain.to_spec(), "trace": trace.to_dict(limits=limits),
            "verification": verify_geodesic(domain, trace, residual_tol=cfg["tol"]).to_dict()}
    emit(cfg, envelope(cfg, body))
    return EXIT_OK


def cmd_gromov_scan(cfg):
    ref = cfg["domain"]
    space = ref if ref in MODEL_SPACES or ref == "square" else load_domain(ref)
    result = witness_search(space, strategy=cfg["strategy"], budget=cfg["budget"], target=cfg["target"],
                            seed=cfg["seed"], degree=cfg["degree"])
    body = {"summary": result.summary(), "steps": [r.to_dict() for r in result.reports]}
    emit(cfg, envelope(cfg, body), csv_text=result.to_csv())
    return EXIT_OK if result.achieved else EXIT_BUDGET


def cmd_verify(cfg):
    domain = load_domain(cfg["domain"])
    rng = np.random.default_rng(cfg["seed"])
    checks = {}
    if domain.smooth:
        orientation = "reversed" if cfg["dev_hilbert_sign_bug"] else "absolute"
        hil = check_hilbert_inequality(domain, pairs=cfg["pairs"], seed=cfg["seed"], orientation=orientation)
        checks["hilbert_inequality"] = dict(hil.to_dict(), passed=hil.passed)
        x = sample_interior(domain, 2, rng, shrink=0.7) + 1j * rng.uniform(-0.5, 0.5, (2, domain.dim))
        uni = uniqueness_probe(domain, x[0], x[1], restarts=cfg["restarts"], seed=cfg["seed"])
        checks["uniqueness"] = dict(uni.to_dict(), tol=1e-5,
                                    passed=uni.converged > 0 and uni.max_profile_deviation <= 1e-5)
    sie = siegel_check(samples=max(cfg["samples"] // 10, 10), seed=cfg["seed"])
    checks["siegel"] = sie.to_dict()
    ex2 = example2_check(samples=cfg["samples"], seed=cfg["seed"])
    checks["example2"] = ex2.to_dict()
    ok = all(c["passed"] for c in checks.values())
    emit(cfg, envelope(cfg, {"domain": domain.to_spec(), "checks": checks, "passed": ok}))
    return EXIT_OK if ok else EXIT_PROPERTY


COMMANDS = {"distance": cmd_distance, "geodesic": cmd_geodesic, "gromov-scan": cmd_gromov_scan,
            "verify": cmd_verify}


def build_parser():
    parser = argparse.ArgumentParser(prog="tubegeo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file with defaults for the flags below")
        p.add_argument("--domain", help="catalog name (%s) or domain file" % ", ".join(CATALOG))
        p.add_argument("--points", help="points separated by ';', coordinates by ','")
        p.add_argument("--grid", type=int, help="boundary grid size M (default adaptive)")
        p.add_argument("--tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--degree", type=int, help="polynomial degree of the upper-bound discs")
        if name == "geodesic":
            p.add_argument("--boundary", action="store_true", help="points are boundary points of the base")
        if name == "gromov-scan":
            p.add_argument("--target", type=float)
            p.add_argument("--budget", type=int)
            p.add_argument("--strategy", choices=("analytic", "corner", "random"))
        if name == "verify":
            p.add_argument("--pairs", type=int)
            p.add_argument("--samples", type=int)
            p.add_argument("--restarts", type=int)
            p.add_argument("--dev-hilbert-sign-bug", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ArgumentError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
