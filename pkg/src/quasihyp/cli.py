"""Command-line front end.

Exit codes: 0 success, 1 mathematical failure (violation found, failing
check, undefined ratio), 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import DomainError, MetricViolationError, ParseError, QuasiHypError, SizeError, UndefinedRatioError
from .formats import jsonable, matrix_to_csv, matrix_to_json, read_matrix, space_from_json
from .invariants import EXHAUSTIVE_MAX_N, c0_finite, delta_hyp_finite, roundness_finite
from .optimize import PRESETS, estimate_c, maximize_delta, snowflake_line
from .spaces import FiniteMatrix, FiniteMetricSpace, SpaceSpec, restrict, sample, validate_metric

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_SAMPLED_BUDGET = 1_000_000


class InputError(Exception):
    """Bad flags or input data (exit code 2)."""


# ---------------------------------------------------------------------------
# input resolution
# ---------------------------------------------------------------------------

_OVERRIDES = {
    "LpSpace": ("p",),
    "Snowflake": ("alpha",),
    "HalfLineAlpha": ("alpha",),
    "GraphVm": ("m",),
}


def _load_space_arg(text: str) -> dict:
    """Accept inline JSON, a path to a JSON file, or a bare kind name."""
    path = Path(text)
    if not text.lstrip().startswith("{") and path.suffix == ".json" and path.exists():
        text = path.read_text()
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad --space JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ParseError("--space must be a JSON object")
        return obj
    return {"kind": text.strip(), "params": {}}


def resolve_space(args) -> SpaceSpec | None:
    """Build the space named by ``--space``/``--preset`` plus ``--alpha/--p/--m`` overrides."""
    preset = getattr(args, "preset", None)
    given = {k: getattr(args, k, None) for k in ("alpha", "p", "m")}
    given = {k: v for k, v in given.items() if v is not None}
    if preset:
        if args.space:
            raise InputError("--preset and --space are mutually exclusive")
        entry = PRESETS[preset]
        key = "alpha" if preset == "euclidean-snowflake" else "m"
        if key not in given:
            raise InputError(f"preset {preset} needs --{key}")
        return entry["build"](given[key])
    if not args.space:
        if given:
            raise InputError("--alpha/--p/--m modify a --space; none given")
        return None
    obj = _load_space_arg(args.space)
    params = dict(obj.get("params") or {})
    kind = obj.get("kind")
    allowed = _OVERRIDES.get(kind, ())
    for k, v in given.items():
        if k not in allowed:
            raise InputError(f"--{k} does not apply to {kind}")
        params[k] = v
    if kind == "LpSpace":
        params.setdefault("n", 2)
    return space_from_json({"kind": kind, "params": params})


def parse_bounds(text: str | None):
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"--bounds expects LO,HI or a radius, got {text!r}") from exc
    if len(vals) == 1:
        return vals[0]
    if len(vals) == 2:
        return tuple(vals)
    raise InputError(f"--bounds expects LO,HI or a radius, got {text!r}")


def parse_radii(text: str):
    try:
        radii = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--profile expects comma-separated scales, got {text!r}") from exc
    if not radii or any(r <= 0 for r in radii) or radii != sorted(radii):
        raise InputError("--profile scales must be positive and ascending")
    return radii


def resolve_finite(args):
    """Return ``(FiniteMetricSpace, source_info)`` from ``--input`` or a sampled ``--space``."""
    has_input = args.input is not None
    has_space = bool(args.space) or bool(getattr(args, "preset", None))
    if has_input == has_space:
        raise InputError("give exactly one of --input PATH or --space JSON")
    if has_input:
        d = read_matrix(args.input)
        return _checked(d), {"input": str(args.input)}
    space = resolve_space(args)
    if isinstance(space, FiniteMatrix):
        return space.space, {"space": space.to_json()}
    if args.sample_count < 2:
        raise InputError("--sample-count must be at least 2")
    bounds = parse_bounds(args.bounds)
    pts = sample(space, args.sample_count, bounds, args.seed)
    return restrict(space, pts), {"space": space.to_json(), "sample_count": args.sample_count,
                                  "bounds": bounds, "points": pts}


def _checked(d) -> FiniteMetricSpace:
    try:
        return FiniteMetricSpace(d)
    except MetricViolationError as exc:
        raise InputError(f"input is not a metric: {_violations_text(exc.violations)}") from exc


def _violations_text(violations, limit: int = 5) -> str:
    parts = [f"{v.kind} at {tuple(v.indices)} by {v.magnitude:.3g}" for v in violations[:limit]]
    more = len(violations) - limit
    return "; ".join(parts) + (f"; and {more} more" if more > 0 else "")


def _budget(args, n: int):
    if args.sampled:
        return args.budget or DEFAULT_SAMPLED_BUDGET
    if n > EXHAUSTIVE_MAX_N:
        raise InputError(
            f"n={n} exceeds the exhaustive limit of {EXHAUSTIVE_MAX_N} points; "
            "rerun with --sampled (and optionally --budget N) for a sampled lower bound"
        )
    return None


def _witness_points(info: dict, witness) -> list | None:
    pts = info.get("points")
    if pts is None or witness is None:
        return None
    return [np.asarray(pts[i]).tolist() for i in (witness.x, witness.y, witness.z, witness.w)]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(args):
    d = read_matrix(args.input)
    found = validate_metric(d)
    report = {
        "command": "validate",
        "input": str(args.input),
        "n": int(d.shape[0]),
        "valid": not found,
        "violations": [v.to_dict() for v in found],
    }
    return report, (EXIT_OK if not found else EXIT_FAIL)


def _finite_command(args, name, fn, **kw):
    fs, info = resolve_finite(args)
    budget = _budget(args, fs.n)
    res = fn(fs, budget=budget, seed=args.seed, **kw)
    report = {"command": name, "n": fs.n, "degenerate": fs.degenerate}
    report.update({k: v for k, v in info.items() if k != "points"})
    report.update(res.to_dict())
    report["bound"] = "exact" if getattr(res, "exhaustive", budget is None) else "lower"
    wp = _witness_points(info, res.witness)
    if wp is not None:
        report["witness_points"] = wp
    return report


def cmd_c0(args):
    return _finite_command(args, "c0", c0_finite), EXIT_OK


def cmd_delta_hyp(args):
    report = _finite_command(args, "delta-hyp", delta_hyp_finite)
    report["convention"] = "half the four-point slack (Gromov product normalization)"
    return report, EXIT_OK


def cmd_roundness(args):
    report = _finite_command(args, "roundness", roundness_finite, tol=args.tol, p_max=args.p_max)
    if report["bound"] == "lower":
        # sampled quadruples can only miss violations
        report["bound"] = "upper"
    return report, EXIT_OK


def cmd_restrict(args):
    fs, info = resolve_finite(args)
    if args.format == "csv":
        return matrix_to_csv(fs.dist), EXIT_OK
    report = {"command": "restrict", **info, **json.loads(matrix_to_json(fs.dist))}
    return report, EXIT_OK


def _parametric(args) -> SpaceSpec:
    if args.input is not None:
        raise InputError("maximize and estimate-c need a parametric --space; use c0 for matrix input")
    space = resolve_space(args)
    if space is None:
        raise InputError("give --space JSON or --preset NAME")
    if not space.parametric:
        raise InputError(f"{type(space).__name__} is matrix-backed; use the c0 command instead")
    return space


def cmd_maximize(args):
    space = _parametric(args)
    budget = args.budget or 100_000
    bounds = parse_bounds(args.bounds)
    res = maximize_delta(space, budget, args.restarts, args.seed, scale_floor=args.scale_floor,
                         bounds=bounds, confine=args.confine)
    report = {"command": "maximize", "space": space.to_json(), "seed": args.seed}
    report.update(res.to_dict())
    if args.preset:
        entry = PRESETS[args.preset]
        param = args.alpha if args.preset == "euclidean-snowflake" else args.m
        report["preset"] = {"name": args.preset, "note": entry["note"], "conjectured": entry["target"](param)}
    if args.profile:
        prof = estimate_c(space, parse_radii(args.profile), budget, args.seed, args.restarts, bounds, args.confine)
        if args.format == "csv":
            return prof.to_csv(), EXIT_OK
        report["scale_profile"] = prof.to_dict()["profile"]
    elif args.format == "csv":
        raise InputError("--format csv needs --profile")
    return report, EXIT_OK


def cmd_estimate_c(args):
    space = _parametric(args)
    budget = args.budget or 20_000
    bounds = parse_bounds(args.bounds)
    prof = estimate_c(space, parse_radii(args.profile), budget, args.seed, args.restarts, bounds, args.confine)
    if args.format == "csv":
        return prof.to_csv(), EXIT_OK
    report = {"command": "estimate-c", "space": space.to_json(), "seed": args.seed}
    report.update(prof.to_dict())
    return report, EXIT_OK


def cmd_snowflake_line(args):
    if args.alpha is None:
        raise InputError("snowflake-line needs --alpha")
    sol = snowflake_line(args.alpha)
    report = {"command": "snowflake-line", **sol.to_dict(), "bound": "exact"}
    return report, EXIT_OK


def cmd_verify_paper(args):
    from .checks import CHECKS, run_all

    only = [s for s in (args.only or "").split(",") if s] or None
    if only:
        unknown = [s for s in only if s not in CHECKS]
        if unknown:
            raise InputError(f"unknown check(s) {unknown}; available: {', '.join(CHECKS)}")
    rows = run_all(args.seed, only)
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<18} {r.seconds:8.3f}s  {r.claim}", file=sys.stderr)
    failed = [r.name for r in rows if not r.passed]
    report = {
        "command": "verify-paper",
        "seed": args.seed,
        "rows": [r.to_dict() for r in rows],
        "passed": len(rows) - len(failed),
        "failed": failed,
    }
    return report, (EXIT_OK if not failed else EXIT_FAIL)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _real(text):
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _p_value(text):
    if text.strip().lower() in ("inf", "infinity", "∞"):
        return math.inf
    return _real(text)


def build_parser() -> argparse.ArgumentParser:
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--format", choices=("json", "csv"), default="json")
    out.add_argument("--no-meta", action="store_true", help="omit wall time and version (byte-stable output)")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--input", type=Path, help="distance matrix file (CSV or JSON)")
    source.add_argument("--space", help='space JSON {"kind": ..., "params": {...}}, a .json path, or a kind name')
    source.add_argument("--alpha", type=_real)
    source.add_argument("--p", type=_p_value)
    source.add_argument("--m", type=_real)
    source.add_argument("--seed", type=int, default=0)
    source.add_argument("--bounds", help="sampling region LO,HI or a radius R")

    finite = argparse.ArgumentParser(add_help=False)
    finite.add_argument("--sample-count", type=int, default=40)
    finite.add_argument("--sampled", action="store_true", help="random quadruples instead of exhaustive enumeration")
    finite.add_argument("--budget", type=_positive_int)

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--budget", type=_positive_int)
    search.add_argument("--restarts", type=_positive_int, default=20)
    search.add_argument("--confine", action="store_true", help="keep the search inside --bounds")

    parser = argparse.ArgumentParser(prog="quasihyp", description="Four-point invariants of metric spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[out], help="check a distance matrix")
    p.add_argument("--input", type=Path, required=True)
    p.set_defaults(func=cmd_validate)

    for name, func, text in (
        ("c0", cmd_c0, "restricted constant of a finite space"),
        ("delta-hyp", cmd_delta_hyp, "Gromov hyperbolicity constant of a finite space"),
        ("roundness", cmd_roundness, "roundness of a finite space"),
        ("restrict", cmd_restrict, "emit the distance matrix of a sampled restriction"),
    ):
        p = sub.add_parser(name, parents=[out, source, finite], help=text)
        if name == "roundness":
            p.add_argument("--tol", type=_real, default=1e-9)
            p.add_argument("--p-max", type=_real, default=64.0)
        p.set_defaults(func=func)

    p = sub.add_parser("maximize", parents=[out, source, search], help="optimizer lower bound for C0")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--scale-floor", type=_real)
    p.add_argument("--profile", help="also run the scale profile at R1,R2,...")
    p.set_defaults(func=cmd_maximize)

    p = sub.add_parser("estimate-c", parents=[out, source, search], help="scale profile estimating C")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--profile", required=True, help="ascending scales R1,R2,...")
    p.set_defaults(func=cmd_estimate_c, restarts=10)

    p = sub.add_parser("snowflake-line", parents=[out], help="closed-form constant of the snowflaked line")
    p.add_argument("--alpha", type=_real, required=True)
    p.set_defaults(func=cmd_snowflake_line)

    p = sub.add_parser("verify-paper", parents=[out], help="reproduce every closed-form constant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", help="comma-separated check names")
    p.set_defaults(func=cmd_verify_paper)
    return parser


def _emit(payload, args, elapsed: float) -> None:
    if isinstance(payload, str):
        sys.stdout.write(payload)
        return
    if getattr(args, "format", "json") == "csv":
        raise InputError("CSV output is only available for scale profiles and matrices")
    if not args.no_meta:
        payload["meta"] = {"version": __version__, "wall_time_s": round(elapsed, 6)}
    sys.stdout.write(json.dumps(jsonable(payload), indent=2) + "\n")


def _error(code: int, message: str) -> int:
    print(f"quasihyp: error: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        payload, code = args.func(args)
        _emit(payload, args, time.perf_counter() - t0)
        return code
    except UndefinedRatioError as exc:
        return _error(EXIT_FAIL, str(exc))
    except (InputError, ParseError, DomainError, SizeError, MetricViolationError) as exc:
        return _error(EXIT_INPUT, str(exc))
    except QuasiHypError as exc:
        return _error(EXIT_INPUT, str(exc))


if __name__ == "__main__":
    sys.exit(main())
