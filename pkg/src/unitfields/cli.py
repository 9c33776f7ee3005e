"""Command-line interface.

Family parameters are given as ``--name value`` after ``--family``; for example
``unitfields field bending --family horo-pq --p 1 --q 0 --point 0,0,1``.
Exit codes: 0 success or PASS, 1 usage error, 2 numerical failure or FAIL.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, fieldlab, flowtrace, pendulum, repro, residuals, stability
from .charts import ChartId, ChartPoint
from .errors import DomainError, NumericalError

TOOL = "unitfields"
OUTDIR_ENV = "UNITFIELDS_OUTDIR"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _family_help() -> str:
    lines = ["field families (parameters given as --name value):"]
    for name, (_, params) in fieldlab.CATALOG.items():
        args = " ".join(f"--{p} <{t.__name__}>" for p, t in params.items()) or "(no parameters)"
        lines.append(f"  {name:<20} {args}")
    lines += ["", "--rotate t applies u -> u + t to the field before the command runs.",
              "frame --space takes 'euclidean' or 'hyperbolic'; horo-theta --sign takes +1 or -1."]
    return "\n".join(lines)


FAMILY_EPILOG = _family_help()


# ---------------------------------------------------------------------------
# parsing helpers

def _floats(text: str, n: int | None = None, what: str = "value") -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed {what}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what} must be finite: {text!r}")
    return vals


def _family_params(family: str, extra: list[str]) -> dict:
    if family not in fieldlab.CATALOG:
        raise UsageError(f"unknown family {family!r}; choose from {', '.join(fieldlab.CATALOG)}")
    types = fieldlab.CATALOG[family][1]
    params: dict = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or tok[2:] not in types:
            raise UsageError(f"{family} does not take {tok!r}; parameters: "
                             f"{', '.join('--' + p for p in types) or 'none'}")
        name = tok[2:]
        try:
            raw = next(it)
        except StopIteration:
            raise UsageError(f"missing value for {tok}") from None
        try:
            params[name] = types[name](raw)
        except ValueError:
            raise UsageError(f"bad value {raw!r} for {tok}") from None
    return params


def _build_field(args, extra) -> fieldlab.FieldSpec:
    params = _family_params(args.family, extra)
    try:
        spec = fieldlab.make_field(args.family, **params)
        if getattr(args, "rotate", None):
            spec = fieldlab.circle_action(spec, args.rotate)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return spec


def _point(args, spec) -> ChartPoint:
    chart = ChartId(args.chart) if args.chart else (
        ChartId.EUCLIDEAN_CARTESIAN if spec.space == "euclidean" else ChartId.HYPERBOLIC_HALFSPACE)
    c = _floats(args.point, 3, "--point")
    try:
        return ChartPoint(chart, *c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid(args, spec) -> residuals.GridSpec:
    if not args.grid:
        return residuals.default_grid(spec, args.n)
    chart_name, _, rest = args.grid.partition(":")
    axes = [_floats(a, 3, "--grid axis") for a in rest.split(":")]
    try:
        return residuals.GridSpec(ChartId(chart_name), tuple(axes), args.margin)
    except ValueError as exc:
        raise UsageError(f"bad --grid: {exc}") from None


# ---------------------------------------------------------------------------
# output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_document(command: list[str], payload: dict) -> dict:
    return {"tool": TOOL, "version": __version__, "command": list(command),
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "payload": _jsonable(payload)}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(rows, dtype=float).reshape(-1, len(header)), fmt="%.17g",
               delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.is_absolute() and os.environ.get(OUTDIR_ENV):
        p = Path(os.environ[OUTDIR_ENV]) / p
    return p


def _emit(args, text: str):
    if getattr(args, "out", None):
        target = _resolve(args.out)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict):
    _emit(args, dumps(report_document(args.argv, payload)))


def _emit_table(args, header, rows, payload):
    if args.format == "csv":
        _emit(args, csv_text(header, rows))
    else:
        payload = dict(payload, columns=header, rows=np.asarray(rows).tolist())
        _emit_json(args, payload)


# ---------------------------------------------------------------------------
# commands

def cmd_field_eval(args, extra):
    spec = _build_field(args, extra)
    p = _point(args, spec)
    w = fieldlab.evaluate(spec, p)
    payload = {"field": spec.describe(), "point": {"chart": p.chart.value, "coords": p.coords},
               "components": list(w), "norm": w.norm()}
    try:
        payload["polar"] = fieldlab.polar_decompose(w.as_array())._asdict()
    except ValueError:
        payload["polar"] = None
    _emit_json(args, payload)
    return EXIT_OK


def cmd_field_bending(args, extra):
    spec = _build_field(args, extra)
    p = _point(args, spec)
    payload = {"field": spec.describe(), "point": {"chart": p.chart.value, "coords": p.coords},
               "bending": fieldlab.bending(spec, p, args.h),
               "bending_frame_derivatives": fieldlab.bending_fd(spec, p, args.h)}
    _emit_json(args, payload)
    return EXIT_OK


def _check(args, extra, runner):
    spec = _build_field(args, extra)
    report = runner(spec, _grid(args, spec), h=args.h, tol=args.tol)
    _emit_json(args, report.to_dict())
    return EXIT_OK if report.verdict == residuals.PASS else EXIT_FAIL


def cmd_check_harmonic(args, extra):
    return _check(args, extra, residuals.harmonic_section_residual)


def cmd_check_reduced(args, extra):
    return _check(args, extra, residuals.reduced_residual)


def cmd_check_map(args, extra):
    return _check(args, extra, residuals.harmonic_map_test)


def cmd_pendulum_solve(args, extra):
    _no_extra(extra)
    r = np.geomspace(args.r_min, args.r_max, args.n)
    if args.method == "closed":
        sol = pendulum.closed_form_solution(args.q, r)
        v, vp = sol.v, sol.v_prime
    else:
        sol = pendulum.solve_shooting(args.q, r_max=max(args.r_max, 10.0), tol=args.tol)
        v, vp = sol.profile(r)
    bend = vp**2 + (np.sin(v) / r) ** 2
    summary = {"q": args.q, "method": args.method, "ode_residual": sol.max_residual}
    if args.q != 0:
        summary.update(crossing_radius=pendulum.crossing_radius(args.q, args.method),
                       bending_axis_limit=pendulum.bending_axis_limit(args.q, args.method),
                       separatrix_residual=pendulum.separatrix_residual(sol))
    _emit_table(args, ["r", "v", "v_prime", "bending"], np.column_stack([r, v, vp, bend]), summary)
    return EXIT_OK


def cmd_stability_hessian(args, extra):
    _no_extra(extra)
    ev = stability.evaluate_hessian(args.R, args.delta, args.form, args.tol)
    payload = ev.to_dict()
    payload["support_radius"] = args.R + args.delta
    _emit_json(args, payload)
    return EXIT_OK


def cmd_stability_thresholds(args, extra):
    _no_extra(extra)
    th = stability.find_thresholds(args.tol, args.form)
    payload = th.to_dict()
    if args.lattice:
        payload["lattice"] = stability.lattice_check(args.form).to_dict()
    _emit_json(args, payload)
    return EXIT_OK


def cmd_stability_r0(args, extra):
    _no_extra(extra)
    _emit_json(args, stability.find_R0(args.delta0, form=args.form).to_dict())
    return EXIT_OK


def cmd_stability_surface(args, extra):
    _no_extra(extra)
    R = np.linspace(*_axis(args.R_range, "--R-range"))
    d = np.linspace(*_axis(args.delta_range, "--delta-range"))
    rows = stability.hessian_surface(R, d, args.form)
    _emit_table(args, ["R", "delta", "H"], rows, {"form": args.form})
    return EXIT_OK


def _axis(text, what):
    lo, hi, n = _floats(text, 3, what)
    if n < 2 or n != int(n):
        raise UsageError(f"{what} needs an integer count >= 2")
    return lo, hi, int(n)


def cmd_flow_trace(args, extra):
    spec = _build_field(args, extra)
    start = _floats(args.start, 3, "--start")
    line = flowtrace.trace(spec, start, args.step, args.n)
    _emit_table(args, ["s", "x", "y", "z"], line.rows(),
                {"field": spec.describe(), "step": args.step, "n": args.n})
    return EXIT_OK


def cmd_flow_diagnose(args, extra):
    spec = _build_field(args, extra)
    if not isinstance(spec, fieldlab.EuclidPendulum):
        raise UsageError("flow diagnose applies to --family euclid-pendulum")
    if abs(math.cos(spec.p)) < 1e-12:
        radii = _floats(args.radii, None, "--radii")
        diag = flowtrace.helix_diagnostics(spec, radii)
        kind = "helix"
    elif abs(math.sin(spec.p)) < 1e-12 and math.cos(spec.p) > 0:
        starts = [_floats(s, 3, "--starts") for s in args.starts.split(";")]
        diag = flowtrace.fountain_diagnostics(spec, starts, args.step, args.n)
        kind = "fountain"
    else:
        raise UsageError("flow diagnose needs p = 0 (fountain) or p = +-pi/2 (helix)")
    _emit_json(args, {"field": spec.describe(), "kind": kind, **diag.to_dict()})
    return EXIT_OK


def cmd_repro_all(args, extra):
    _no_extra(extra)
    results = repro.run_all()
    table = repro.format_table(results)
    if args.format == "json":
        _emit_json(args, {"results": [r.to_dict() for r in results],
                          "all_passed": all(r.passed for r in results)})
        print(table, file=sys.stderr)
    else:
        _emit(args, table + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _no_extra(extra):
    if extra:
        raise UsageError(f"unrecognized arguments: {' '.join(extra)}")


# ---------------------------------------------------------------------------
# parser

def _sub(parent, name, help_, func, family=False):
    p = parent.add_parser(name, help=help_, description=help_, allow_abbrev=False,
                          epilog=FAMILY_EPILOG,
                          formatter_class=argparse.RawDescriptionHelpFormatter)
    p.set_defaults(func=func)
    if family:
        p.add_argument("--family", required=True, help="field family name (listed below)")
        p.add_argument("--rotate", type=float, default=0.0,
                       help="rotate the equatorial part by this angle (u -> u + t)")
    p.add_argument("--out", help=f"output path; relative paths go under ${OUTDIR_ENV} when set")
    return p


def _check_options(p):
    p.add_argument("--grid", help="CHART:min,max,n:min,max,n:min,max,n (default: family grid)")
    p.add_argument("--n", type=int, default=6, help="points per axis of the default grid")
    p.add_argument("--margin", type=float, default=residuals.SINGULAR_MARGIN,
                   help="distance kept from singular sets")
    p.add_argument("--h", type=float, default=1e-4, help="finite-difference step")
    p.add_argument("--tol", type=float, default=residuals.DEFAULT_TOL, help="residual tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, allow_abbrev=False, description=__doc__,
                     epilog=FAMILY_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    field_p = groups.add_parser("field", help="evaluate fields and their bending")
    fs = field_p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func, help_ in (("eval", cmd_field_eval, "frame components of a field at a point"),
                              ("bending", cmd_field_bending, "bending |grad sigma|^2 at a point")):
        p = _sub(fs, name, help_, func, family=True)
        p.add_argument("--point", required=True, help="x,y,z in --chart coordinates")
        p.add_argument("--chart", choices=[c.value for c in ChartId],
                       help="chart of --point (default: cartesian or halfspace)")
        p.add_argument("--h", type=float, default=1e-4, help="finite-difference step")

    check_p = groups.add_parser("check", help="finite-difference harmonicity checks")
    cs = check_p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func, help_ in (
            ("harmonic", cmd_check_harmonic, "residual of the harmonic unit field equation"),
            ("reduced", cmd_check_reduced, "residuals of the polar-form or standard-form system"),
            ("map", cmd_check_map, "geodesic and solenoidal defects (hyperbolic fields)")):
        _check_options(_sub(cs, name, help_, func, family=True))

    pend_p = groups.add_parser("pendulum", help="radial profiles of the euclid-pendulum family")
    ps = pend_p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = _sub(ps, "solve", "tabulate r, v, v', bending", cmd_pendulum_solve)
    p.add_argument("--q", type=float, required=True, help="slope of v at the axis")
    p.add_argument("--method", choices=["closed", "shooting"], default="closed")
    p.add_argument("--r-min", dest="r_min", type=float, default=1e-3)
    p.add_argument("--r-max", dest="r_max", type=float, default=10.0)
    p.add_argument("--n", type=int, default=200, help="number of log-spaced radii")
    p.add_argument("--tol", type=float, default=1e-10, help="shooting residual tolerance")
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    stab_p = groups.add_parser("stability", help="Hessian of the h-parallel field")
    ss = stab_p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    form_help = "closed form: 'published' (default) or 'exact'"
    p = _sub(ss, "hessian", "closed form against quadrature at (R, delta)", cmd_stability_hessian)
    p.add_argument("--R", type=float, required=True, help="inner radius")
    p.add_argument("--delta", type=float, required=True, help="shell width")
    p.add_argument("--form", choices=stability.FORMS, default=stability.PUBLISHED, help=form_help)
    p.add_argument("--tol", type=float, default=1e-12, help="quadrature tolerance")
    p = _sub(ss, "thresholds", "delta_s and delta_u", cmd_stability_thresholds)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--form", choices=stability.FORMS, default=stability.PUBLISHED, help=form_help)
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--lattice", action="store_true", help="include the 20x20 lattice comparison")
    p = _sub(ss, "r0", "largest zero of R -> H(R, delta0)", cmd_stability_r0)
    p.add_argument("--delta0", type=float, required=True)
    p.add_argument("--form", choices=stability.FORMS, default=stability.PUBLISHED, help=form_help)
    p = _sub(ss, "surface", "H over a (R, delta) grid", cmd_stability_surface)
    p.add_argument("--R-range", dest="R_range", default="0.1,10,40", help="min,max,n")
    p.add_argument("--delta-range", dest="delta_range", default="0.1,5,40", help="min,max,n")
    p.add_argument("--form", choices=stability.FORMS, default=stability.PUBLISHED, help=form_help)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    flow_p = groups.add_parser("flow", help="streamlines and flow diagnostics")
    fls = flow_p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = _sub(fls, "trace", "RK4 streamline, columns s,x,y,z", cmd_flow_trace, family=True)
    p.add_argument("--start", required=True, help="x,y,z (cartesian or half-space)")
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p = _sub(fls, "diagnose", "helix (p=+-pi/2) or fountain (p=0) diagnostics",
             cmd_flow_diagnose, family=True)
    p.add_argument("--radii", default="0.01,0.1,0.5,1,1.5,1.9", help="helix radii")
    p.add_argument("--starts", default="0.1,0,0", help="fountain starts 'x,y,z;x,y,z'")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--n", type=int, default=20000)

    repro_p = groups.add_parser("repro", help="reproduction table")
    rs = repro_p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = _sub(rs, "all", "run every reproduction check and print a pass/fail table", cmd_repro_all)
    p.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        args.argv = argv
        if extra and not hasattr(args, "family"):
            _no_extra(extra)
        return args.func(args, extra)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
