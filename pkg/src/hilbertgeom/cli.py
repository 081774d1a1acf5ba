"""Command-line front end: ``hilbertgeom <subcommand> [options]``.

Exit codes: 0 success, 1 a verified inequality failed, 2 invalid input,
3 numerical failure.
"""
import argparse
import csv
import io as _io
import json
import math
import sys
import time

import numpy as np

from . import body as B
from . import convexity as C
from . import metrics as Mt
from . import normalization as Nz
from .errors import InvalidInputError, NumericalFailure
from .io import digest, load_body, spec_of

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
SIG_DIGITS = 12


class Report:
    """Result table plus summary fields, rendered as CSV or JSON."""

    def __init__(self, command, columns, rows, summary=None, passed=None):
        self.command = command
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.summary = dict(summary or {})
        self.passed = passed
        self.input_digest = ""
        self.meta = {}


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG_DIGITS}g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.{SIG_DIGITS}g}") if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def render(report, fmt):
    if fmt == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for r in report.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()
    doc = {
        "command": report.command,
        "input_digest": report.input_digest,
        "columns": report.columns,
        "rows": [dict(zip(report.columns, _jsonable(r))) for r in report.rows],
        "summary": _jsonable(report.summary),
        "meta": _jsonable(report.meta),
    }
    if report.passed is not None:
        doc["pass"] = bool(report.passed)
    return json.dumps(doc, indent=2) + "\n"


def emit_report(report, fmt, out=None):
    text = render(report, fmt)
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InvalidInputError(f"cannot write report to {out}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# argument parsing


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _point(text):
    return np.array(_floats(text))


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _eps_grid(args):
    if args.eps is not None:
        grid = np.array(args.eps)
    elif args.eps_min is not None or args.eps_max is not None or args.eps_steps is not None:
        lo = args.eps_min if args.eps_min is not None else C.DEFAULT_EPS_GRID[0]
        hi = args.eps_max if args.eps_max is not None else C.DEFAULT_EPS_GRID[-1]
        n = args.eps_steps if args.eps_steps is not None else len(C.DEFAULT_EPS_GRID)
        if not 0 < lo < hi <= 2:
            raise InvalidInputError("eps grid bounds must satisfy 0 < eps-min < eps-max <= 2")
        grid = np.geomspace(lo, hi, n)
    else:
        return None
    if np.any(grid <= 0) or np.any(grid > 2):
        raise InvalidInputError("eps values must lie in (0, 2]")
    return np.unique(grid)


def _body(args, planar=False):
    bb = load_body(args.body, args.basepoint)
    if planar and bb.dim != 2:
        if args.section is None:
            raise InvalidInputError("this subcommand is planar; pass --section u1,..;w1,.. for higher dimensions")
        bb = B.planar_section(bb, args.section[0], args.section[1])
    return bb


def _section(text):
    parts = text.split(";")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("section needs two vectors separated by ';'")
    return tuple(_point(p) for p in parts)


def build_parser():
    p = argparse.ArgumentParser(prog="hilbertgeom",
                                description="Hilbert geometry of convex bodies: gauges, moduli, verification.")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)

    bodyp = argparse.ArgumentParser(add_help=False)
    bodyp.add_argument("--body", required=True, help="JSON body file")
    bodyp.add_argument("--basepoint", type=_point, default=None, help="x,y (use --basepoint=-1,0 for negatives)")
    bodyp.add_argument("--section", type=_section, default=None,
                       help="planar section 'u;w' through the basepoint for bodies of dimension > 2")

    epsp = argparse.ArgumentParser(add_help=False)
    epsp.add_argument("--eps", type=_floats, default=None, help="eps value(s), comma-separated")
    epsp.add_argument("--eps-min", type=_positive(float), default=None)
    epsp.add_argument("--eps-max", type=_positive(float), default=None)
    epsp.add_argument("--eps-steps", type=_positive(int), default=None)
    epsp.add_argument("--samples", type=_positive(int), default=512, help="unit-sphere grid size")
    epsp.add_argument("--method", choices=("bruteforce", "refined"), default="bruteforce")
    epsp.add_argument("--workers", type=_positive(int), default=1)

    def add(name, parents, help_):
        return sub.add_parser(name, parents=parents, help=help_)

    s = add("gauge", [common, bodyp], "directed gauges M(v), M(-v) at the basepoint")
    s.add_argument("--vector", type=_point, required=True)
    s.add_argument("--tol", type=_positive(float), default=1e-12, help="ray-solver tolerance")

    s = add("dist", [common, bodyp], "Hilbert distance between two points")
    s.add_argument("--x", type=_point, required=True)
    s.add_argument("--y", type=_point, required=True)

    s = add("finsler", [common, bodyp], "Finsler norm of a vector at a point")
    s.add_argument("--x", type=_point, required=True)
    s.add_argument("--vector", type=_point, required=True)

    s = add("modulus", [common, bodyp, epsp], "modulus of convexity on an eps grid")
    s.add_argument("--symmetric", action="store_true", help="use the symmetrised (Finsler) gauge")

    s = add("fit-beta", [common, bodyp, epsp], "power-law fit of the modulus")
    s.add_argument("--fit-min", type=_positive(float), default=C.FIT_WINDOW[0])
    s.add_argument("--fit-max", type=_positive(float), default=C.FIT_WINDOW[1])

    s = add("boundary-beta", [common, bodyp], "boundary convexity exponent and constant")
    s.add_argument("--samples", type=_positive(int), default=C.BOUNDARY_SAMPLES)

    s = add("normalize", [common, bodyp], "normalising frame at boundary points")
    s.add_argument("--xi", type=_point, default=None, help="boundary point (default: sampled points)")
    s.add_argument("--samples", type=_positive(int), default=8)

    s = add("psi-scan", [common, bodyp], "range of the shear angle psi over the boundary")
    s.add_argument("--samples", type=_positive(int), default=1024)

    for name, help_ in (("verify-theorem", "check delta(eps) >= C eps^beta"),
                        ("verify-corollary", "check the symmetrised-gauge bound")):
        add(name, [common, bodyp, epsp], help_)

    s = add("ohta", [common, bodyp], "Monte Carlo estimate of the 2-uniform convexity constant")
    s.add_argument("--samples", type=_positive(int), default=2000)
    s.add_argument("--workers", type=_positive(int), default=1)

    s = add("dual-index", [common], "beta = alpha / (alpha - 1)")
    s.add_argument("--alpha", type=float, required=True)
    return p


# --------------------------------------------------------------------------
# subcommands


def _cmd_gauge(args):
    bb = _body(args)
    v = args.vector
    hits = [B.boundary_intersect(bb.body, bb.basepoint, w, tol=args.tol) for w in (v, -v)]
    fwd, bwd = (1.0 / h.t_hit if np.any(v) else 0.0 for h in hits)
    return Report("gauge", ["gauge_forward", "gauge_backward"], [[fwd, bwd]])


def _cmd_dist(args):
    bb = _body(args)
    return Report("dist", ["distance"], [[Mt.hilbert_distance(bb.body, args.x, args.y)]])


def _cmd_finsler(args):
    bb = _body(args)
    x = B._vec(args.x, "x")
    f = Mt.finsler_norm(bb.body, x, args.vector)
    fwd, bwd = Mt.directed_gauges(B.BasedBody(bb.body, x), args.vector)
    return Report("finsler", ["finsler", "gauge_forward", "gauge_backward"], [[f, fwd, bwd]])


def _curve(args, bb, symmetric=False):
    return C.modulus_curve(bb, _eps_grid(args), args.samples, args.method, symmetric, args.workers)


def _cmd_modulus(args):
    bb = _body(args, planar=True)
    cur = _curve(args, bb, args.symmetric)
    rows = [[e, d, cur.method] for e, d in zip(cur.eps, cur.delta)]
    return Report("modulus", ["eps", "delta", "method"], rows, {"samples": args.samples})


def _cmd_fit_beta(args):
    bb = _body(args, planar=True)
    cur = _curve(args, bb)
    fit = C.fit_beta(cur, (args.fit_min, args.fit_max))
    return Report("fit-beta", ["beta", "C", "residual", "n_points"],
                  [[fit.beta, fit.C, fit.residual, fit.n_points]],
                  {"window": list(fit.window), "max_abs_residual": fit.max_abs_residual})


def _cmd_boundary_beta(args):
    bb = _body(args, planar=True)
    fit = C.boundary_beta_convexity(bb.body, args.samples)
    rows = [[c, d] for c, d in zip(fit.chord, fit.dist_tangent)]
    return Report("boundary-beta", ["chord", "dist_tangent"], rows,
                  {"beta": fit.beta, "C_K": fit.C, "residual": fit.residual, "window": list(fit.window)})


def _cmd_normalize(args):
    bb = _body(args, planar=True)
    if args.xi is not None:
        xis = [args.xi]
    else:
        xis = B.boundary_points(bb, B.unit_directions(2, args.samples))
    cols = ["xi_x", "xi_y", "psi", "h", "T11", "T12", "T21", "T22", "t1", "t2",
            "res_basepoint", "res_xi", "res_tangent"]
    rows = []
    for xi in xis:
        fr = Nz.build_normalization(bb, xi)
        L, t = fr.T.linear, fr.T.translation
        r = fr.residuals
        rows.append([*fr.xi, fr.psi, fr.h, *L.ravel(), *t, r["basepoint"], r["xi"], r["tangent"]])
    return Report("normalize", cols, rows)


def _cmd_psi_scan(args):
    bb = _body(args, planar=True)
    sc = Nz.shear_bound_scan(bb, args.samples)
    return Report("psi-scan", ["min_psi", "max_psi", "max_abs_cot", "margin", "flagged"],
                  [[sc.min_psi, sc.max_psi, sc.max_abs_cot, sc.margin, sc.flagged]])


def _verify_report(name, rep, summary):
    rows = [list(r) for r in zip(rep.eps, rep.delta, rep.bound, rep.margin)]
    summary = {"beta": rep.beta, "C": rep.C, "skipped_eps": list(rep.skipped), **summary}
    return Report(name, ["eps", "delta", "bound", "margin"], rows, summary, rep.passed)


def _cmd_verify_theorem(args):
    bb = _body(args, planar=True)
    rep = C.verify_theorem(bb, _eps_grid(args), args.samples, method=args.method, workers=args.workers)
    tc = rep.details["constants"]
    return _verify_report("verify-theorem", rep, {
        "C_K": tc.C_K, "h": tc.h, "c1": tc.c1, "c2": tc.c2, "m": tc.m, "m_raw": tc.m_raw,
        "m_flagged": tc.m_flagged, "C0": tc.C0, "C1": tc.C1, "C2": tc.C2, "C1_printed": tc.C1_printed})


def _cmd_verify_corollary(args):
    bb = _body(args, planar=True)
    rep = C.verify_corollary(bb, _eps_grid(args), args.samples, method=args.method, workers=args.workers)
    d = rep.details
    return _verify_report("verify-corollary", rep, {"A": d["A"], "C_plus": d["C_plus"], "C_minus": d["C_minus"]})


def _cmd_ohta(args):
    bb = _body(args)
    est = Mt.ohta_constant(bb.body, args.samples, args.seed, args.workers)
    return Report("ohta", ["C_hat", "C_offline", "C_collinear", "samples", "offline_samples"],
                  [[est.C_hat, est.C_offline, est.C_collinear, est.samples, est.offline_samples]],
                  {"witness": [w.tolist() for w in est.witness]})


def _cmd_dual_index(args):
    return Report("dual-index", ["alpha", "beta"], [[args.alpha, C.dual_index(args.alpha)]])


COMMANDS = {
    "gauge": _cmd_gauge, "dist": _cmd_dist, "finsler": _cmd_finsler, "modulus": _cmd_modulus,
    "fit-beta": _cmd_fit_beta, "boundary-beta": _cmd_boundary_beta, "normalize": _cmd_normalize,
    "psi-scan": _cmd_psi_scan, "verify-theorem": _cmd_verify_theorem,
    "verify-corollary": _cmd_verify_corollary, "ohta": _cmd_ohta, "dual-index": _cmd_dual_index,
}


def _config(args):
    cfg = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(args).items()
           if k not in ("out", "format", "workers")}
    if isinstance(cfg.get("section"), tuple):
        cfg["section"] = [v.tolist() for v in cfg["section"]]
    if getattr(args, "body", None):
        try:
            cfg["body"] = spec_of(load_body(args.body))
        except InvalidInputError:
            pass
    return cfg


def run(args):
    """Execute parsed ``args``; returns ``(report, exit_code)``."""
    t0 = time.perf_counter()
    report = COMMANDS[args.command](args)
    report.input_digest = digest(_config(args))
    report.meta = {"seed": args.seed, "wall_clock_s": time.perf_counter() - t0,
                   "samples": getattr(args, "samples", None)}
    code = EXIT_FAILED if report.passed is False else EXIT_OK
    return report, code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report, code = run(args)
        emit_report(report, args.format, args.out)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if report.passed is False:
        print(f"{args.command}: verification failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
