"""Command-line front end.

Sub-commands print a JSON document (sorted keys) to stdout, except
``sweep`` without ``--out``, which prints its CSV there. Progress and
warnings go to stderr. Exit codes: 0 success, 1 verification failure,
2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import bodies, equilibria, integrate
from .gomboc import GombocParams, build_body
from .spaces import DomainError, SpaceKind, builtin_profile, load_profile_csv

log = logging.getLogger("monostatic")

COMMANDS = ("build", "certify", "centroid", "equilibria", "verify2d", "sweep", "export-mesh")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    """``0.1,0.2,0.3`` or ``start:stop:count`` (inclusive linspace)."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return [float(x) for x in np.linspace(float(lo), float(hi), int(n))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma list or start:stop:count, got {text!r}") from exc


def _d_value(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--d must be a number or 'auto', got {text!r}") from exc


def _common(p: argparse.ArgumentParser, dims: bool = True) -> None:
    g = p.add_argument_group("space")
    g.add_argument("--space", choices=["euclidean", "spherical", "hyperbolic", "normed"], default="spherical",
                   help="ambient geometry (default: spherical)")
    if dims:
        g.add_argument("--dim", type=int, choices=[2, 3], default=3, help="dimension (default: 3)")
    g.add_argument("--profile", default="superellipsoid",
                   help="normed unit ball: 'superellipsoid' or 'round' (default: superellipsoid)")
    g.add_argument("--p", type=float, default=4.0, help="superellipsoid exponent (default: 4)")
    g.add_argument("--blend", type=float, default=None,
                   help="superellipsoid blend with the round ball (default: 0.5 in 3D, 1 in 2D)")
    g.add_argument("--profile-csv", default=None, help="tabulated theta,rho profile; overrides --profile")
    q = p.add_argument_group("quadrature")
    q.add_argument("--n-theta", type=int, default=64, help="latitude nodes (default: 64)")
    q.add_argument("--n-phi", type=int, default=128, help="longitude nodes (default: 128)")
    q.add_argument("--n-r", type=int, default=32, help="radial nodes (default: 32)")
    q.add_argument("--no-richardson", action="store_true", help="skip the doubled-grid error estimate")
    o = p.add_argument_group("run")
    o.add_argument("--config", default=None, help="key=value file pre-populating flags (flags win)")
    o.add_argument("--jobs", type=int, default=1, help="parallel width (default: 1)")
    o.add_argument("-v", "--verbose", action="store_true", help="progress and debug output on stderr")


def _body_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("body")
    g.add_argument("--body", choices=["ball", "ellipsoid", "ellipse", "gomboc", "random", "perturbed"],
                   default="ball", help="body family (default: ball)")
    g.add_argument("--R", type=float, default=1.0, help="radius / family scale (default: 1)")
    g.add_argument("--axes", type=_floats, default=[2.0, 1.5, 1.0], help="semi-axes for ellipse/ellipsoid")
    g.add_argument("--c", type=float, default=None, help="family parameter c (default: centering root)")
    g.add_argument("--d", type=float, default=0.02, help="family parameter d (default: 0.02)")
    g.add_argument("--seed", type=int, default=0, help="seed for random bodies (default: 0)")
    g.add_argument("--scale", type=float, default=0.5, help="size of random 2D bodies (default: 0.5)")
    g.add_argument("--amplitude", type=float, default=0.04, help="perturbation amplitude (default: 0.04)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monostatic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("build", help="centre K(c, d) and report c*, M3 and the centroid")
    _common(p, dims=False)
    p.add_argument("--R", type=float, default=1.0, help="ball radius in the chart (default: 1)")
    p.add_argument("--d", type=float, default=0.02, help="deformation size (default: 0.02)")
    p.add_argument("--c", type=float, default=None, help="use this c instead of solving for c*")
    p.add_argument("--tol", type=float, default=1e-12, help="|M3| tolerance of the centering solve")
    p.add_argument("--out", default=None, help="write a theta,phi,radial CSV of the body")

    p = sub.add_parser("certify", help="run the mono-monostatic certificate (A)-(E)")
    _common(p, dims=False)
    p.add_argument("--R", type=float, default=1.0, help="ball radius in the chart (default: 1)")
    p.add_argument("--d", type=_d_value, default=0.02, help="deformation size or 'auto' (default: 0.02)")
    p.add_argument("--eps", type=float, default=0.05, help="Hausdorff tolerance (default: 0.05)")
    p.add_argument("--grid", type=int, default=40000, help="equilibrium scan directions (default: 40000)")

    p = sub.add_parser("centroid", help="centroid of a body")
    _common(p)
    _body_options(p)

    p = sub.add_parser("equilibria", help="equilibrium census of a body")
    _common(p)
    _body_options(p)
    p.add_argument("--ref", type=_floats, default=None, help="reference point (default: centroid)")
    p.add_argument("--grid", type=int, default=None, help="scan resolution")

    p = sub.add_parser("verify2d", help="four-equilibria battery on random planar bodies")
    _common(p, dims=False)
    p.add_argument("--n", type=int, default=100, help="number of bodies (default: 100)")
    p.add_argument("--seed", type=int, default=0, help="first seed (default: 0)")
    p.add_argument("--scale", type=float, default=0.5, help="body size (default: 0.5)")
    p.add_argument("--k-max", type=int, default=6, help="highest harmonic (default: 6)")

    p = sub.add_parser("sweep", help="tabulate M3(c, d) as CSV")
    _common(p, dims=False)
    p.add_argument("--R", type=float, default=1.0, help="ball radius in the chart (default: 1)")
    p.add_argument("--c-values", type=_floats, default=_floats("0.02:1:10"), help="c grid (default: 0.02:1:10)")
    p.add_argument("--d-values", type=_floats, default=[0.0, 0.02, 0.05], help="d grid (default: 0,0.02,0.05)")
    p.add_argument("--out", required=False, default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("export-mesh", help="write a body as OBJ")
    _common(p, dims=False)
    _body_options(p)
    p.add_argument("--mesh-n-theta", type=int, default=64, help="mesh latitude bands (default: 64)")
    p.add_argument("--mesh-n-phi", type=int, default=128, help="mesh longitude segments (default: 128)")
    p.add_argument("--out", required=True, help="OBJ path of the chart surface")
    p.add_argument("--embedded-out", default=None, help="OBJ path of the embedded surface (curved spaces)")
    return parser


def _read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{n}: expected key=value, got {line!r}")
                k, v = (s.strip() for s in line.split("=", 1))
                out[k.replace("-", "_")] = v
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return out


def parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        defaults = {}
        for k, v in cfg.items():
            if k not in actions or k in ("config", "help"):
                raise UsageError(f"config key {k!r} is not a flag of '{args.command}'")
            act = actions[k]
            if isinstance(act, argparse._StoreTrueAction):  # noqa: SLF001
                defaults[k] = v.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    defaults[k] = act.type(v) if act.type else v
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {k!r}: {exc}") from exc
                if act.choices is not None and defaults[k] not in act.choices:
                    raise UsageError(f"config key {k!r}: {v!r} not in {list(act.choices)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _space(args, dim: int | None = None) -> SpaceKind:
    dim = dim or getattr(args, "dim", 3)
    if args.space != "normed":
        return SpaceKind(args.space, dim)
    if args.profile_csv:
        prof = load_profile_csv(args.profile_csv)
    elif args.profile == "superellipsoid":
        blend = args.blend if args.blend is not None else (0.5 if dim == 3 else 1.0)
        prof = builtin_profile("superellipsoid", p=args.p, blend=blend)
    else:
        prof = builtin_profile(args.profile)
    return SpaceKind.normed(prof, dim)


def _spec(args) -> integrate.QuadratureSpec:
    try:
        return integrate.QuadratureSpec(args.n_theta, args.n_phi, args.n_r, not args.no_richardson)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _make_body(args, space: SpaceKind, spec):
    kind = args.body
    if kind == "ball":
        return bodies.ball(space, args.R)
    if kind == "ellipse":
        if space.dim != 2 or len(args.axes) < 2:
            raise UsageError("--body ellipse needs --dim 2 and two --axes")
        return bodies.ellipse_2d(args.axes[0], args.axes[1], space)
    if kind == "ellipsoid":
        if space.dim != 3 or len(args.axes) != 3:
            raise UsageError("--body ellipsoid needs --dim 3 and three --axes")
        return bodies.ellipsoid_3d(*args.axes, space=space)
    if kind == "perturbed":
        if space.dim != 3 or len(args.axes) != 3:
            raise UsageError("--body perturbed needs --dim 3 and three --axes")
        return bodies.perturbed_ellipsoid_3d(args.axes, args.seed, args.amplitude, space)
    if kind == "random":
        if space.dim != 2:
            raise UsageError("--body random needs --dim 2")
        return bodies.random_convex_2d(space, args.seed, args.scale)
    if kind == "gomboc":
        if space.dim != 3:
            raise UsageError("--body gomboc needs --dim 3")
        c = args.c if args.c is not None else integrate.find_centering_c(args.d, args.R, space, spec=spec, jobs=args.jobs)
        return build_body(GombocParams(c, args.d, args.R, space))
    raise UsageError(f"unknown body {kind!r}")


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2, default=float) + "\n")
    sys.stdout.flush()


def _vec(x) -> list[float]:
    return [float(v) for v in np.asarray(x).ravel()]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build(args) -> int:
    space = _space(args, 3)
    spec = _spec(args)
    c = args.c
    if c is None:
        log.info("solving for the centering parameter c*")
        c = integrate.find_centering_c(args.d, args.R, space, tol=args.tol, spec=spec, jobs=args.jobs)
    body = build_body(GombocParams(c, args.d, args.R, space))
    rep = integrate.first_moment_M3(body, spec, jobs=args.jobs)
    cen = integrate.centroid(body, spec, jobs=args.jobs)
    if args.out:
        bodies.write_body_csv(body, args.out)
    _emit({
        "params": {"c": c, "d": args.d, "R": args.R, "space": space.describe()},
        "c_star": c if args.c is None else None,
        "M3": rep.value,
        "M3_error": rep.error_estimate,
        "centroid": _vec(cen),
    })
    return 0


def cmd_certify(args) -> int:
    space = _space(args, 3)
    spec = _spec(args)
    cert = equilibria.certify_mono_monostatic(
        {"c": 1.0, "d": args.d, "R": args.R, "space": space}, args.eps, spec=spec, equilibria_grid=args.grid
    )
    sys.stdout.write(cert.to_json() + "\n")
    return 0 if cert.ok else 1


def cmd_centroid(args) -> int:
    space = _space(args)
    spec = _spec(args)
    body = _make_body(args, space, spec)
    cen = integrate.centroid(body, spec, jobs=args.jobs)
    _emit({"body": body.label, "space": space.describe(), "centroid": _vec(cen)})
    return 0


def _census_doc(census) -> dict:
    return {
        **census.summary(),
        "points": [
            {"location": p.location, "kind": p.kind.value, "distance": p.distance_value,
             "hessian_eigenvalues": list(p.hessian_eigenvalues)}
            for p in census.points[:200]
        ],
    }


def cmd_equilibria(args) -> int:
    space = _space(args)
    spec = _spec(args)
    body = _make_body(args, space, spec)
    if args.ref is not None:
        ref = np.asarray(args.ref, dtype=float)
        if ref.size != space.dim:
            raise UsageError(f"--ref needs {space.dim} coordinates")
    else:
        ref = integrate.centroid(body, spec, jobs=args.jobs)
    census = equilibria.find_equilibria(body, ref, grid=args.grid)
    doc = {"body": body.label, "space": space.describe(), "ref": _vec(ref), "census": _census_doc(census)}
    try:
        doc["poincare_hopf"] = equilibria.poincare_hopf_check(census, space.dim)
    except equilibria.PoincareHopfInconclusive:
        doc["poincare_hopf"] = "inconclusive"
    _emit(doc)
    return 0


def _verify_one(job) -> dict:
    space, seed, scale, k_max, spec = job
    body = bodies.random_convex_2d(space, seed, scale, k_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", equilibria.EquilibriumWarning)
        census = equilibria.count_equilibria_2d(body, spec=spec)
    ok = census.degenerate_count == 0 and census.S >= 2 and census.U >= 2 and census.S == census.U
    return {"seed": seed, **census.summary(), "ok": ok}


def cmd_verify2d(args) -> int:
    space = _space(args, 2)
    spec = _spec(args)
    jobs = [(space, args.seed + i, args.scale, args.k_max, spec) for i in range(args.n)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_verify_one, jobs))
    else:
        rows = []
        for i, job in enumerate(jobs):
            rows.append(_verify_one(job))
            log.info("body %d/%d: %s", i + 1, args.n, rows[-1])
    failures = [r for r in rows if not r["ok"]]
    _emit({"space": space.describe(), "n": args.n, "first_seed": args.seed,
           "failures": failures, "min_equilibria": min(r["S"] + r["U"] for r in rows), "pass": not failures})
    return 0 if not failures else 1


def cmd_sweep(args) -> int:
    space = _space(args, 3)
    spec = _spec(args)
    rows = integrate.sweep_M3(args.c_values, args.d_values, args.R, space, spec, jobs=args.jobs)
    if args.out:
        integrate.write_sweep_csv(rows, args.out)
        _emit({"rows": len(rows), "out": args.out})
    else:
        integrate.write_sweep_csv(rows, sys.stdout)
    return 0


def cmd_export_mesh(args) -> int:
    space = _space(args, 3)
    spec = _spec(args)
    args.dim = 3
    body = _make_body(args, space, spec)
    bodies.export_mesh(body, args.mesh_n_theta, args.mesh_n_phi, args.out, args.embedded_out)
    _emit({"body": body.label, "out": args.out, "embedded_out": args.embedded_out,
           "vertices": 2 + (args.mesh_n_theta - 1) * args.mesh_n_phi})
    return 0


HANDLERS = {
    "build": cmd_build,
    "certify": cmd_certify,
    "centroid": cmd_centroid,
    "equilibria": cmd_equilibria,
    "verify2d": cmd_verify2d,
    "sweep": cmd_sweep,
    "export-mesh": cmd_export_mesh,
}


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except SystemExit as exc:  # argparse: --help (0) or usage error (2)
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"monostatic: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.jobs < 1:
        print("monostatic: error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return HANDLERS[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"monostatic: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"monostatic: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
