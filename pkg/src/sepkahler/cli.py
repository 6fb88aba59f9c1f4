"""Command-line front end.

Exit codes: 0 success, 1 domain errors (invalid structure, twist element
outside the image, vanishing factors, unsupported input), 2 parse errors.
"""

import argparse
import re
import sys

from .curvature import extremality_residual, scalar_curvature, transform_coordinates
from .errors import InvalidStructure, ParseError, SepKahlerError, Unsupported
from .identities import run_grid
from .io import canonical, parse_geometry, parse_maps, read_json, render_text
from .oracle import compare, sample_points
from .solver import classify_beta, degree_profile, solve

VERBS = ("validate", "curvature", "extremal", "solve", "identities", "oracle", "transform")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="sepkahler", description="Exact separable Kaehler geometry engine.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("input", nargs="?", help="geometry-spec JSON file")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json", help="JSON output (default)")
    fmt.add_argument("--text", dest="fmt", action="store_const", const="text", help="plain text output")
    p.add_argument("--out", help="write the report to this file")
    p.add_argument("--seed", type=int, default=0, help="oracle sampling seed")
    p.add_argument("--points", type=int, default=10, help="number of oracle sample points")
    p.add_argument("--step", type=float, default=1e-3, help="finite-difference step")
    p.add_argument("--tol", type=float, default=1e-3, help="oracle relative tolerance")
    p.add_argument("--grid", default=None, help="identity grid bound, e.g. 'm<=5'")
    p.add_argument("--maps", default=None, help="JSON list of per-group 2x2 matrices for transform")
    p.add_argument("--inverse", action="store_true", help="apply the inverse matrices in transform")
    p.set_defaults(fmt="json")
    return p


def _need_geometry(data, need_beta=True, need_profiles=False):
    fs, beta, g = parse_geometry(data)
    if need_beta and beta is None:
        raise ParseError("input has no beta")
    if need_profiles and g is None:
        raise ParseError("input has no profiles")
    return fs, beta, g


def cmd_validate(args, data):
    fs, beta, _ = parse_geometry(data)
    out = {"valid": True, "dimension": len(fs.basis), "kind": fs.kind, "partition": list(fs.degrees)}
    if beta is not None:
        out["betaInImage"] = True
    return out


def cmd_curvature(args, data):
    _, _, g = _need_geometry(data, need_profiles=True)
    rep = extremality_residual(g)
    out = rep.to_wire()
    out["scal"] = scalar_curvature(g).to_wire()
    return out


def cmd_extremal(args, data):
    _, _, g = _need_geometry(data, need_profiles=True)
    rep = extremality_residual(g).to_wire()
    out = {"extremal": rep["extremal"]}
    if rep["extremal"]:
        out["alpha"] = rep["alpha"]
    else:
        out["residual"] = rep["residual"]
    return out


def cmd_solve(args, data):
    fs, beta, _ = _need_geometry(data)
    out = {
        "betaClass": classify_beta(fs, beta).to_wire(),
        "degreeProfile": degree_profile(fs, beta).to_wire(),
    }
    try:
        out["families"] = [f.to_wire() for f in solve(fs, beta)]
    except Unsupported as exc:
        out["families"] = []
        out["unsupported"] = str(exc)
    return out


def _grid_bound(text):
    if text is None:
        return {}
    m = re.fullmatch(r"\s*m\s*<=\s*(\d+)\s*", text)
    if not m:
        raise ParseError(f"bad grid bound {text!r}; expected m<=N")
    n = int(m.group(1))
    return {"max_m": n, "max_sigma_m": n, "max_twist_m": n}


def cmd_identities(args, data):
    summary = run_grid(**_grid_bound(args.grid))
    return summary.to_wire()


def cmd_oracle(args, data):
    _, _, g = _need_geometry(data, need_profiles=True)
    if args.points < 1:
        raise ParseError("--points must be positive")
    pts = sample_points(g, args.points, seed=args.seed)
    out = compare(g, pts, h=args.step, tol=args.tol).to_wire()
    out["seed"] = args.seed
    return out


def cmd_transform(args, data):
    _, _, g = _need_geometry(data, need_profiles=True)
    raw = args.maps if args.maps is not None else data.get("maps")
    if raw is None:
        raise ParseError("transform needs --maps or a maps field")
    maps = parse_maps(raw)
    return transform_coordinates(g, maps, inverse=args.inverse).to_wire()


COMMANDS = {
    "validate": cmd_validate,
    "curvature": cmd_curvature,
    "extremal": cmd_extremal,
    "solve": cmd_solve,
    "identities": cmd_identities,
    "oracle": cmd_oracle,
    "transform": cmd_transform,
}


def _emit(report, args, stdout):
    text = canonical(report) if args.fmt == "json" else render_text(report) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(argv, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        stderr.write(f"sepkahler: {exc}\n")
        return 2
    try:
        data = None
        if args.verb != "identities":
            if not args.input:
                raise ParseError(f"{args.verb} needs an input file")
            data = read_json(args.input)
            if not isinstance(data, dict):
                raise ParseError("top-level JSON value must be an object")
        report = COMMANDS[args.verb](args, data)
    except ParseError as exc:
        stderr.write(f"sepkahler: parse error: {exc}\n")
        return 2
    except InvalidStructure as exc:
        stderr.write(f"sepkahler: invalid structure: {exc} (rank {exc.rank}, expected {exc.expected})\n")
        return 1
    except (SepKahlerError, ValueError, ZeroDivisionError) as exc:
        stderr.write(f"sepkahler: {exc}\n")
        return 1
    _emit(report, args, stdout)
    if args.verb == "identities" and not report["allHold"]:
        return 1
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
