"""Command-line front end: ``densepack <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io
from .analysis import TOUCH_TOL, densify_hint, detect_percolation, lower_bound
from .energy import minimize_potentials
from .errors import InvalidInputError, NumericalError, OverlapError
from .flux import FluxModel, coefficient
from .graph import build_delaunay
from .lattices import LatticeSpec, generate
from .optimizer import maximize_spread, pack_in_class, scan_bases, solve_centers
from .torus import Configuration, pairwise_images

FACET_TOL = 1e-9
SOLVER_TOL = 1e-10

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INTERNAL = 0, 1, 2, 3


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DENSEPACK_THREADS", "1")))
    except ValueError:
        return 1


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse number list {text!r}") from exc


def _emit(args, payload: dict, manifest: io.RunManifest) -> None:
    if getattr(args, "output", None):
        io.write_output(args.output, payload, manifest)
    else:
        sys.stdout.write(io.dumps(payload))


def _check_overlaps(config: Configuration) -> None:
    dist, W = pairwise_images(config.basis, config.centers)
    gaps = dist - 2 * config.radius
    tol = 1e-12 * max(config.radius, 1.0)
    if gaps.min() < -tol:
        k, j, w = np.unravel_index(int(np.argmin(gaps)), gaps.shape)
        raise OverlapError(int(k), int(j), W[w].tolist(), float(gaps[k, j, w]))


def _load_config(args, manifest) -> Configuration:
    manifest.add_input(args.config)
    return io.config_from_dict(io.load_json(args.config))


def _graph_for(args, config, manifest):
    if getattr(args, "graph", None):
        manifest.add_input(args.graph)
        g = io.graph_from_dict(io.load_json(args.graph))
        if g.n != config.n:
            raise InvalidInputError(f"graph has {g.n} vertices, configuration has {config.n}")
        return g.with_geometry(config.basis, config.centers, config.radius)
    return build_delaunay(config.basis, config.centers, config.radius, args.facet_tol)


def _directions(args, d: int) -> list[np.ndarray]:
    if not args.xi:
        return list(np.eye(d))
    out = []
    for text in args.xi:
        v = np.array(_floats(text))
        if len(v) != d:
            raise InvalidInputError(f"xi {text!r} needs {d} components")
        out.append(v)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_lattice(args, manifest) -> int:
    lat = generate(LatticeSpec(args.family, args.m, args.d), args.facet_tol)
    manifest.tolerances["facet_tol"] = args.facet_tol
    if args.gap < 0 or args.gap >= 2 * lat.r_touch:
        raise InvalidInputError(f"--gap must lie in [0, {2 * lat.r_touch:g})")
    config = io.config_to_dict(lat.config.with_radius(lat.r_touch - args.gap / 2))
    cls = lat.graph_class.to_dict()
    if args.class_output:
        io.write_output(args.class_output, cls, manifest)
    if args.output:
        io.write_output(args.output, config, manifest)
    if not args.output and not args.class_output:
        sys.stdout.write(io.dumps({"config": config, "class": cls}))
    return EXIT_OK


def cmd_delaunay(args, manifest) -> int:
    manifest.add_input(args.input)
    config = io.config_from_dict(io.load_json(args.input))
    manifest.tolerances["facet_tol"] = args.facet_tol
    g = build_delaunay(config.basis, config.centers, config.radius, args.facet_tol)
    _emit(args, io.graph_to_dict(g), manifest)
    return EXIT_OK


def cmd_flux(args, manifest) -> int:
    model = FluxModel(args.d, args.p, args.r)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "value"])
    for delta in _floats(args.delta):
        w.writerow([repr(delta), repr(coefficient(model, delta, args.method))])
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_energy(args, manifest) -> int:
    config = _load_config(args, manifest)
    _check_overlaps(config)
    g = _graph_for(args, config, manifest)
    model = FluxModel(config.d, args.p, config.radius)
    manifest.tolerances.update(facet_tol=args.facet_tol, solver_tol=args.tol)
    dirs = _directions(args, config.d)

    def run(xi):
        return minimize_potentials(g, model, xi, config.basis, tol=args.tol, strength=args.strength)

    with ThreadPoolExecutor(min(_threads(), len(dirs))) as ex:
        reports = list(ex.map(run, dirs))
    if len(reports) == 1:
        payload = reports[0].to_dict()
    else:
        sig = [r.sigma for r in reports]
        payload = {
            "reports": [r.to_dict() for r in reports],
            "sigma_min": min(sig),
            "sigma_max": max(sig),
            "relative_spread": (max(sig) - min(sig)) / max(sig) if max(sig) > 0 else 0.0,
        }
    _emit(args, payload, manifest)
    return EXIT_OK


def cmd_bounds(args, manifest) -> int:
    config = _load_config(args, manifest)
    _check_overlaps(config)
    g = _graph_for(args, config, manifest)
    model = FluxModel(config.d, args.p, config.radius)
    manifest.tolerances.update(facet_tol=args.facet_tol, solver_tol=args.tol)
    out = []
    for xi in _directions(args, config.d):
        rep = minimize_potentials(g, model, xi, config.basis, tol=args.tol, strength=args.strength)
        b = lower_bound(g, model, rep.field, config.basis)
        out.append({"xi": rep.xi.tolist(), **b.to_dict()})
    _emit(args, out[0] if len(out) == 1 else {"bounds": out}, manifest)
    return EXIT_OK


def _load_class(args, manifest):
    manifest.add_input(args.class_file)
    return io.class_from_dict(io.load_json(args.class_file))


def cmd_optimize(args, manifest) -> int:
    cls = _load_class(args, manifest)
    manifest.add_input(args.basis)
    basis = io.basis_from_dict(io.load_json(args.basis))
    manifest.tolerances.update(facet_tol=args.facet_tol, solver_tol=args.tol)
    sol = solve_centers(cls, basis, args.tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        config, rep = pack_in_class(cls, basis, args.facet_tol, args.tol)
    sp = maximize_spread(cls, basis, restarts=args.restarts, seed=args.seed)
    payload = {
        "solution": sol.to_dict(),
        "packing": rep.to_dict(),
        "config": io.config_to_dict(config),
        "spread": {"value": sp.value, "restarts": sp.restarts, "consistent": sp.consistent},
    }
    _emit(args, payload, manifest)
    return EXIT_OK


def cmd_pack(args, manifest) -> int:
    cls = _load_class(args, manifest)
    manifest.add_input(args.basis_scan)
    scan = io.load_json(args.basis_scan)
    bases = [io.basis_from_dict({"basis": b}) for b in scan.get("bases", [])]
    if not bases:
        raise InvalidInputError("scan file needs a non-empty 'bases' list")
    manifest.tolerances.update(facet_tol=args.facet_tol, touch_tol=args.touch_tol)
    entries, best = scan_bases(cls, bases, args.facet_tol, args.touch_tol, max_workers=_threads())
    payload = {
        "entries": [e.to_dict() for e in entries],
        "best": best.to_dict() if best else None,
    }
    _emit(args, payload, manifest)
    return EXIT_OK


def cmd_percolation(args, manifest) -> int:
    config = _load_config(args, manifest)
    manifest.tolerances["touch_tol"] = args.touch_tol
    rep = detect_percolation(config, args.touch_tol)
    payload = rep.to_dict()
    payload["densify_hints"] = densify_hint(config, args.touch_tol)
    _emit(args, payload, manifest)
    return EXIT_OK


def cmd_verify(args, manifest) -> int:
    from .verify import format_table, run_all

    checks = run_all()
    sys.stdout.write(format_table(checks))
    if args.output:
        payload = {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks]}
        io.write_output(args.output, payload, manifest)
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_NUMERIC


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="densepack", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *, facet=False, solver=False, touch=False, output=True):
        if facet:
            p.add_argument("--facet-tol", type=float, default=FACET_TOL,
                           help="relative Voronoi facet measure below which contacts are dropped")
        if solver:
            p.add_argument("--tol", type=float, default=SOLVER_TOL, help="solver tolerance")
        if touch:
            p.add_argument("--touch-tol", type=float, default=TOUCH_TOL,
                           help="gap (relative to r) counted as touching")
        if output:
            p.add_argument("--output", "-o", help="output file (default: stdout)")

    p = sub.add_parser("lattice", help="generate a reference lattice and its graph class")
    p.add_argument("--family", required=True, choices=["a2", "zd", "fcc", "hcp"])
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--gap", type=float, default=0.0, help="uniform gap between touching neighbours (default 0)")
    p.add_argument("--class-output", help="write the graph class here")
    common(p, facet=True)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("delaunay", help="periodic Delaunay graph of a configuration")
    p.add_argument("--input", required=True)
    common(p, facet=True)
    p.set_defaults(func=cmd_delaunay)

    p = sub.add_parser("flux", help="flux coefficients as CSV")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--delta", required=True, help="comma-separated gaps")
    p.add_argument("--method", choices=["main", "quad", "hyp"], default="main")
    common(p)
    p.set_defaults(func=cmd_flux)

    for name, func, hlp in [("energy", cmd_energy, "minimal discrete energy"),
                            ("bounds", cmd_bounds, "energy lower bound at the optimal potentials")]:
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--config", required=True)
        p.add_argument("--p", type=int, required=True)
        p.add_argument("--xi", action="append", help="flux direction, e.g. '0,1' (repeatable)")
        p.add_argument("--strength", type=float, default=1.0, help="external field magnitude")
        p.add_argument("--graph", help="precomputed graph JSON (default: build Delaunay)")
        common(p, facet=True, solver=True)
        p.set_defaults(func=func)

    p = sub.add_parser("optimize", help="optimal centers in a graph class for one basis")
    p.add_argument("--class", dest="class_file", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--restarts", type=int, default=3, help="perturbed restarts for the spread check")
    p.add_argument("--seed", type=int, default=0)
    common(p, facet=True, solver=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("pack", help="best density over a list of bases")
    p.add_argument("--class", dest="class_file", required=True)
    p.add_argument("--basis-scan", required=True)
    common(p, facet=True, touch=True)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("percolation", help="touching-chain windings")
    p.add_argument("--config", required=True)
    common(p, touch=True)
    p.set_defaults(func=cmd_percolation)

    p = sub.add_parser("verify", help="run the reference example checks")
    common(p)
    p.set_defaults(func=cmd_verify)
    return ap


def dispatch(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    manifest = io.RunManifest(["densepack", *argv])
    try:
        return args.func(args, manifest)
    except InvalidInputError as exc:
        print(f"densepack: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"densepack: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001
        print(f"densepack: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
