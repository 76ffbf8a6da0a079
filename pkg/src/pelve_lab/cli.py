"""Command-line front end.

Exit codes: 0 success, 1 numerical or internal failure (error JSON on
stderr), 2 infeasible constraint, 64 malformed input, 73 unwritable output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import calib_curve, calib_point, constant_solver, pelve_engine, tail_analysis
from .dist_core import QuantileCurve, es, model_from_json, var
from .errors import InfeasibleConstraintError, PelveError

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_CANTCREAT = 0, 1, 2, 64, 73
_FULL_PRECISION_KEYS = {"knots", "head"}


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


def fmt(x):
    """Shortest round-trip repr of ``x`` capped at 12 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(f"{x:.12g}"))


def _clean(obj, full=False):
    if isinstance(obj, dict):
        return {k: _clean(v, full or k in _FULL_PRECISION_KEYS) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v, full) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt(x)
        return x if full else float(f"{x:.12g}")
    return obj


def dumps(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def load_json_arg(text, what):
    """Inline JSON, or a path to a JSON file."""
    src = text
    if not text.lstrip().startswith(("{", "[")):
        try:
            with open(text, encoding="utf-8") as fh:
                src = fh.read()
        except OSError as exc:
            raise UsageError(f"{what}: cannot read {text!r}: {exc.strerror}") from None
    try:
        return json.loads(src)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def parse_grid(text):
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise UsageError(f"grid must look like lo:hi:n[:log], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid must look like lo:hi:n[:log], got {text!r}") from None
    if n < 1 or not lo < hi and n > 1:
        raise UsageError("grid needs n >= 1 and lo < hi")
    if len(parts) == 4:
        if lo <= 0:
            raise UsageError("log grid needs lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pelve-", suffix=".tmp")
    except OSError as exc:
        raise OutputError(f"cannot write {path!r}: {exc.strerror}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OutputError(f"cannot write {path!r}: {exc.strerror}") from None


def _curve_samples_csv(curve, grid):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "f"])
    for s, v in zip(grid, np.asarray(curve.value(grid))):
        w.writerow([fmt(s), fmt(v)])
    return buf.getvalue()


def plot_data_csv(result):
    """CSV text for a curve-like result."""
    if isinstance(result, (pelve_engine.PelveCurve, calib_curve.ResidualReport, tail_analysis.HazardProfile)):
        return result.to_csv(fmt)
    if isinstance(result, calib_curve.SteppedSolution):
        pts = result.knot_table()
        return _curve_samples_csv(result, pts[:, 0])
    if isinstance(result, QuantileCurve):
        return _curve_samples_csv(result, np.geomspace(1e-4, 1.0, 200))
    raise TypeError(f"no plot data for {type(result).__name__}")


def emit_plot_data(result, path):
    """Write ``result`` as CSV to ``path`` atomically."""
    write_atomic(path, plot_data_csv(result))
    return path


# ---------------------------------------------------------------- commands

def _model(args):
    if not args.model:
        raise UsageError("--model is required")
    return model_from_json(load_json_arg(args.model, "--model"))


def _zcurve(args):
    if not args.zcurve:
        raise UsageError("--zcurve is required")
    return calib_curve.ZCurve.from_json(load_json_arg(args.zcurve, "--zcurve"))


def _need(value, flag):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


def cmd_eval(args):
    model = _model(args)
    eps = _need(args.epsilon, "--epsilon")
    kind = args.kind or "pelve"
    tol = args.tol or pelve_engine.PELVE_RTOL
    if kind == "pelve":
        value = pelve_engine.pelve(model, eps, rtol=tol)
    elif kind == "dual_pelve":
        value = pelve_engine.dual_pelve(model, eps)
    elif kind == "z_curve":
        value = pelve_engine.z_of_curve(model, eps)
    elif kind == "gamma":
        value = pelve_engine.gamma_link(model, eps).gamma
    elif kind == "var":
        value = var(model, 1.0 - eps)
    elif kind == "es":
        value = es(model, 1.0 - eps)
    else:
        raise UsageError(f"unknown --kind {kind!r}")
    if args.format == "json":
        return dumps({"kind": kind, "epsilon": eps, "value": value, "tolerance": tol}), None
    return fmt(value) + "\n", None


def cmd_curve(args):
    model = _model(args)
    grid = parse_grid(_need(args.grid, "--grid"))
    kind = args.kind or "pelve"
    if kind not in pelve_engine.KINDS:
        raise UsageError(f"unknown --kind {kind!r}")
    res = pelve_engine.pelve_curve(model, grid, kind=kind)
    meta = {"kind": kind, "tolerance": args.tol or pelve_engine.PELVE_RTOL}
    if args.format == "json":
        return dumps(res.to_json() | meta), None
    return res.to_csv(fmt), meta


def cmd_calibrate_one(args):
    if args.constraint:
        doc = load_json_arg(args.constraint, "--constraint")
        eps1, c1 = doc.get("eps1"), doc.get("c1")
    else:
        eps1, c1 = args.epsilon, args.c
    model = calib_point.calibrate_one_point(_need(eps1, "eps1"), _need(c1, "c1"))
    out = {"model": model.to_json(), "pelve_eps1": pelve_engine.pelve(model, eps1)}
    return dumps(out), None


def cmd_calibrate_two(args):
    doc = load_json_arg(_need(args.constraint, "--constraint"), "--constraint")
    try:
        con = calib_point.TwoPointConstraint.from_json(doc)
    except KeyError as exc:
        raise UsageError(f"--constraint: missing field {exc.args[0]!r}") from None
    kh, kt = doc.get("khat", 1.0), doc.get("ktilde", 0.0)
    res = calib_point.build_two_point_quantile(con, kh, kt)
    return dumps(res.to_json() | {"tolerance": calib_point.ROUNDTRIP_TOL}), None


def cmd_calibrate_curve(args):
    z = _zcurve(args)
    mesh = args.mesh or 32
    sol = calib_curve.solve_advanced_ode(z, args.eps_min, mesh)
    grid = parse_grid(args.grid) if args.grid else np.geomspace(args.eps_min, 1.0, 200)
    rep = calib_curve.validate_solution(sol, z, grid)
    meta = {"mesh": mesh, "eps_min": args.eps_min, "sup_residual": rep.sup,
            "normalized_sup_residual": rep.normalized_sup}
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["y", "f", "residual"])
        for y, fy, r in zip(grid, np.asarray(sol.value(grid)), rep.residual):
            w.writerow([fmt(y), fmt(fy), fmt(r)])
        return buf.getvalue(), meta
    return dumps({"solution": sol.to_json()} | meta), None


def cmd_constant_roots(args):
    c = _need(args.c, "--c")
    rr = constant_solver.real_roots(c)
    cr = constant_solver.complex_roots(c, args.kmax)
    rows = [(0, rr.m1, 0.0, constant_solver.characteristic_residual(c, rr.m1)),
            (0, rr.m2, 0.0, constant_solver.characteristic_residual(c, rr.m2))]
    rows += [(r.branch, r.lam, r.sigma, r.residual) for r in cr]
    if args.format == "json":
        return dumps({"c": c, "degenerate": rr.degenerate,
                      "roots": [dict(zip(("branch", "lambda", "sigma", "residual"), r)) for r in rows],
                      "failures": {str(k): v for k, v in cr.failures.items()}}), None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["branch", "lambda", "sigma", "residual"])
    for b, lam, sg, res in rows:
        w.writerow([b, fmt(lam), fmt(sg), fmt(res)])
    return buf.getvalue(), {"c": c, "kmax": args.kmax}


def cmd_constant_solution(args):
    c = _need(args.c, "--c")
    root = constant_solver.complex_roots(c, args.branch)[args.branch - 1] if args.branch > 0 else None
    if root is None:
        raise UsageError("--branch must be at least 1")
    spec = constant_solver.OscillatorySolutionSpec.from_root(c, root, args.c1, args.c2, args.c3)
    f = constant_solver.oscillatory_solution(spec)
    grid = parse_grid(args.grid) if args.grid else np.linspace(0.01, 1.0, 100)
    zs = np.array([pelve_engine.z_of_curve(f, y) for y in grid])
    meta = {"spec": spec.to_json(), "system_residual": spec.system_residual(),
            "max_z_deviation": float(np.max(np.abs(zs - c)))}
    if args.format == "json":
        return dumps(meta | {"points": [{"y": y, "f": float(f.value(y)), "z": zz}
                                        for y, zz in zip(grid, zs)]}), None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "f", "z_f"])
    for y, fy, zz in zip(grid, np.asarray(f.value(grid)), zs):
        w.writerow([fmt(y), fmt(fy), fmt(zz)])
    return buf.getvalue(), meta


def _region(args):
    if not args.region:
        return tail_analysis.DEFAULT_REGION
    try:
        lo, hi = (float(v) for v in args.region.split(":"))
    except ValueError:
        raise UsageError(f"region must look like qlo:qhi, got {args.region!r}") from None
    return lo, hi


def cmd_analyze(args):
    model = _model(args)
    region = _region(args)
    if args.format == "csv":
        prof = tail_analysis.hazard_profile(model, region[0], region[1], args.n)
        return prof.to_csv(fmt), {"region": list(region), "tolerance": prof.tolerance}
    verdict = tail_analysis.classify_monotonicity(model, region, args.n)
    return dumps(verdict.to_json() | {"tolerance_rel": tail_analysis.CONVEXITY_RTOL}), None


def cmd_limit(args):
    model = _model(args)
    est = tail_analysis.limit_at_zero(model, args.eps_floor, per_decade=args.per_decade,
                                      tol=args.tol or 5e-4)
    return dumps(est.to_json() | {"tolerance": args.tol or 5e-4}), None


def cmd_validate(args):
    z = _zcurve(args)
    grid = parse_grid(args.grid) if args.grid else np.linspace(0.1, 1.0, 10)
    if args.model:
        f = _model(args)
    else:
        f = calib_curve.solve_advanced_ode(z, min(args.eps_min, 0.5 * float(np.min(grid) * z(np.min(grid)))),
                                           args.mesh or 32)
    rep = calib_curve.validate_solution(f, z, grid)
    meta = {"sup": rep.sup, "normalized_sup": rep.normalized_sup}
    if args.format == "json":
        return dumps(rep.to_json()), None
    return rep.to_csv(fmt), meta


COMMANDS = {
    "eval": cmd_eval,
    "curve": cmd_curve,
    "calibrate-one": cmd_calibrate_one,
    "calibrate-two": cmd_calibrate_two,
    "calibrate-curve": cmd_calibrate_curve,
    "constant-roots": cmd_constant_roots,
    "constant-solution": cmd_constant_solution,
    "analyze": cmd_analyze,
    "limit": cmd_limit,
    "validate": cmd_validate,
}
_DEFAULT_FORMAT = {"eval": "csv", "curve": "csv", "constant-roots": "csv", "validate": "csv", "constant-solution": "csv"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="pelve-lab", description="PELVE computation and calibration.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--model")
        s.add_argument("--constraint")
        s.add_argument("--zcurve")
        s.add_argument("--epsilon", type=float)
        s.add_argument("--grid")
        s.add_argument("--kind")
        s.add_argument("--tol", type=float)
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--c", type=float)
        s.add_argument("--kmax", type=int, default=3)
        s.add_argument("--branch", type=int, default=1)
        s.add_argument("--c1", type=float, default=1.0)
        s.add_argument("--c2", type=float, default=None)
        s.add_argument("--c3", type=float, default=0.0)
        s.add_argument("--eps-min", type=float, default=1e-3)
        s.add_argument("--eps-floor", type=float, default=1e-10)
        s.add_argument("--per-decade", type=int, default=1)
        s.add_argument("--mesh", type=int)
        s.add_argument("--region")
        s.add_argument("--n", type=int, default=512)
    return p


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.format is None:
            args.format = _DEFAULT_FORMAT.get(args.command, "json")
        text, meta = COMMANDS[args.command](args)
        if args.out:
            write_atomic(args.out, text)
            if meta is not None and args.format == "csv":
                write_atomic(args.out + ".meta.json", dumps(meta))
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except OutputError as exc:
        return _fail(EXIT_CANTCREAT, "output", str(exc))
    except InfeasibleConstraintError as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(exc))
    except PelveError as exc:
        return _fail(EXIT_FAIL, type(exc).__name__, str(exc))
    except Exception as exc:  # noqa: BLE001 - reported as JSON, never a traceback
        return _fail(EXIT_FAIL, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
