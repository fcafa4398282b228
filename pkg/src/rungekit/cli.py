"""Command-line front end.

Exit codes: 0 pass, 2 analytic or geometric failure (including
indeterminate verdicts), 1 usage or runtime error.  Every JSON report embeds
the full run configuration and the package version, and is written with
sorted keys so identical runs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


@dataclass
class RunConfig:
    command: str
    operator: Optional[str] = None
    mode: str = "exact"
    tolerances: dict = field(default_factory=dict)
    grid: Optional[str] = None
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    params: dict = field(default_factory=dict)


def _emit(config, result, path=None):
    report = {"version": __version__, "config": asdict(config), "result": result}
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def _parse_axes(text):
    axes = []
    for part in text.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise UsageError(f"axis spec {part!r} must be lo:hi:count")
        lo, hi, cnt = float(bits[0]), float(bits[1]), int(bits[2])
        if cnt < 1:
            raise UsageError("axis count must be positive")
        axes.append(np.round(np.linspace(lo, hi, cnt), 12))
    return axes


def _operator(args, exact=True):
    from .polyalg import parse_poly, slab_decompose
    from .nullsol import PRESETS
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}")
        dec = PRESETS[args.preset]()
        return dec if exact else slab_decompose(dec.base.to_float()), args.preset
    if getattr(args, "poly", None) is None:
        raise UsageError("give --poly or --preset")
    dim = args.dim or _guess_dim(args.poly)
    return slab_decompose(parse_poly(args.poly, dim, exact=exact)), args.poly


def _guess_dim(text):
    import re
    idx = [int(m) for m in re.findall(r"x(\d+)", text)]
    return max(idx + [2])


# ---------------------------------------------------------------------------


def cmd_analyze(args):
    from .polyalg import CharacteristicError, check_hypotheses
    if args.poly is None and args.preset is None:
        raise UsageError("give --poly or --preset")
    cfg = RunConfig("analyze", args.poly or args.preset, "exact" if args.exact else "float",
                    {"samples": args.samples}, outputs={"report": args.out})
    try:
        dec, _ = _operator(args, args.exact)
    except CharacteristicError as exc:
        _emit(cfg, {"ed_noncharacteristic": False, "structural_pass": False, "error": str(exc)}, args.out)
        return 2
    rep = check_hypotheses(dec, samples=args.samples)
    res = rep.to_json()
    res["structural_pass"] = rep.structural_pass
    res["q_list"] = [str(q) for q in dec.q_list]
    _emit(cfg, res, args.out)
    return 0 if rep.structural_pass else 2


def _parse_data(specs, dec, exact):
    from .funcdata import PolyData
    from .polyalg import MultiPoly, parse_poly
    dim = dec.dim - 1
    data = [PolyData(MultiPoly.zero(dim, exact)) for _ in range(dec.m)]
    for s in specs or []:
        if "=" not in s:
            raise UsageError(f"data {s!r} must look like h1=x1^2")
        name, expr = s.split("=", 1)
        name = name.strip()
        if not (name.startswith("h") and name[1:].isdigit()):
            raise UsageError(f"bad data name {name!r}")
        j = int(name[1:])
        if not 0 <= j < dec.m:
            raise UsageError(f"data index {j} out of range 0..{dec.m - 1}")
        data[j] = PolyData(parse_poly(expr, dim, exact))
    return data


def cmd_cauchy(args):
    from .cauchy import cauchy_solve, identity_report, verify_prep_identity
    exact = not args.float
    dec, name = _operator(args, exact)
    data = _parse_data(args.data, dec, exact)
    n = "auto" if args.n is None else args.n
    cfg = RunConfig("cauchy", name, "exact" if exact else "float", {}, args.grid,
                    {"csv": args.csv, "report": args.out}, params={"data": args.data or [], "n": n,
                                                                   "lmax": args.lmax,
                                                                   "verify_explicit": args.verify_explicit})
    try:
        sol = cauchy_solve(dec, data, n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    prep = [verify_prep_identity(dec, data, s) for s in range(dec.m)]
    traces = sol.trace_residuals()
    result = {"truncation": sol.truncation, "terminated": sol.terminated,
              "prep_identity_zero": [bool(p.is_zero) for p in prep],
              "trace_residual_zero": [bool(t.is_zero) for t in traces]}
    ok = all(result["prep_identity_zero"]) and all(result["trace_residual_zero"])
    if sol.terminated:
        res = sol.pde_residual()
        result["pde_residual_zero"] = res.is_zero
        result["solution"] = str(sol.as_poly())
        ok = ok and res.is_zero
    if args.verify_explicit:
        reps = [identity_report(dec, h, args.lmax) for h in data]
        result["identity_reports"] = reps
        ok = ok and all(r["max_abs_residual"] == 0 for r in reps)
    if args.csv:
        axes = _parse_axes(args.grid or ",".join(["-1:1:21"] * dec.dim))
        if len(axes) != dec.dim:
            raise UsageError(f"grid needs {dec.dim} axes")
        sol.write_csv(axes, args.csv)
    _emit(cfg, result, args.out)
    return 0 if ok else 2


def cmd_nullsolution(args):
    from .nullsol import (PRESETS, ContourSpec, hormander_v_grid, puiseux_branch,
                          slab_solution, support_report)
    if args.op not in PRESETS:
        raise UsageError(f"unknown operator {args.op!r}")
    if not 0 < args.eps < args.a:
        raise UsageError("need 0 < eps < a")
    dec = PRESETS[args.op]()
    grid_text = args.grid or ("-2:1:61,-2:2:81" if args.v_only else "-1.6:0.5:22,-1:1:21")
    x1s, x2s = _parse_axes(grid_text)
    contour = ContourSpec(tau=args.tau, r=Fraction(args.r))
    cfg = RunConfig("null-solution", args.op, "float", {"tol_rel": args.tol}, grid_text,
                    {"csv": args.csv, "report": args.out, "heatmap": args.heatmap},
                    params={"a": args.a, "eps": args.eps, "rho": args.rho, "n": args.n,
                            "v_only": args.v_only, "contour": contour.to_json()})
    h1 = float(x1s[1] - x1s[0]) if len(x1s) > 1 else 0.0
    if args.v_only:
        branch = puiseux_branch(dec, 0, contour)
        vf = hormander_v_grid(contour, branch, x1s, x2s)
        field, errs = vf.values, vf.errors
        rep = support_report(field, (x1s, x2s), args.tol, errs)
        ok = all(c == "negligible" for x, c in zip(x1s, rep.classes) if x > h1) and \
            any(c == "significant" for x, c in zip(x1s, rep.classes) if x < -h1)
        result = {"support": rep.to_json(), "sigma_max": vf.sigma_max, "nodes": vf.n_nodes}
    else:
        run = slab_solution(dec, args.a, args.eps, Fraction(args.rho), args.n, (x1s, x2s), contour, tol=args.tol)
        field, errs = run.field, run.errors
        rep = run.support
        lo, hi = -(args.a + args.eps) - h1, h1
        ok = all(c == "negligible" for x, c in zip(x1s, rep.classes) if x > hi or x < lo) and \
            any(c == "significant" for x, c in zip(x1s, rep.classes) if -args.a <= x <= -args.eps)
        result = run.to_json()
    result["consistent"] = bool(ok)
    if args.csv:
        import csv
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "re", "im", "err"])
            for i, a in enumerate(x1s):
                for j, b in enumerate(x2s):
                    u = field[i, j]
                    w.writerow([repr(float(a)), repr(float(b)), repr(float(u.real)), repr(float(u.imag)), repr(float(errs[i, j]))])
    if args.heatmap:
        with open(args.heatmap, "w") as fh:
            fh.write(" ".join(["0"] + [repr(float(a)) for a in x1s]) + "\n")
            for j, b in enumerate(x2s):
                fh.write(" ".join([repr(float(b))] + [repr(float(abs(field[i, j]))) for i in range(len(x1s))]) + "\n")
    _emit(cfg, result, args.out)
    return 0 if ok else 2


def _load_domain(text):
    from .domains import rasterize
    if text is None:
        raise UsageError("domain spec missing")
    if not text.lstrip().startswith("{"):
        with open(text) as fh:
            text = fh.read()
    return rasterize(text)


def _geometry_exit(v):
    return 0 if v.outcome == "pass" else 2


def _write_overlay(path, X, witness, X2=None):
    from .domains import overlay, write_pgm
    if X.dim != 2:
        raise UsageError("overlays are 2-D only")
    write_pgm(path, overlay(X, witness, X2))


def cmd_runge(args):
    from .domains import runge_pair_check
    X1, X2 = _load_domain(args.x1), _load_domain(args.x2)
    v = runge_pair_check(X1, X2, workers=args.workers)
    cfg = RunConfig("runge-check", None, "grid", {}, None, {"report": args.out, "overlay": args.overlay},
                    params={"x1": X1.provenance, "x2": X2.provenance, "window": X1.window_json()})
    if args.overlay:
        _write_overlay(args.overlay, X1, v.witness, X2)
    _emit(cfg, v.to_json(), args.out)
    return _geometry_exit(v)


def cmd_pconvex(args):
    from .domains import p_convexity_check
    X = _load_domain(args.domain)
    v = p_convexity_check(X, tol=args.tol, exterior_counts=args.exterior, workers=args.workers)
    cfg = RunConfig("pconvex-check", None, "grid", {"tol": args.tol}, None,
                    {"report": args.out, "overlay": args.overlay},
                    params={"domain": X.provenance, "window": X.window_json(), "exterior": args.exterior})
    if args.overlay:
        _write_overlay(args.overlay, X, v.witness)
    _emit(cfg, v.to_json(), args.out)
    return _geometry_exit(v)


def _interval(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"interval {text!r} must be a,b") from None
    return a, b


def cmd_tube(args):
    from .domains import tube_check
    X1n, X2n = _load_domain(args.x1n), _load_domain(args.x2n)
    v = tube_check(_interval(args.i1), X1n, _interval(args.i2), X2n)
    cfg = RunConfig("tube-check", None, "grid", {}, None, {"report": args.out},
                    params={"i1": args.i1, "i2": args.i2, "x1n": X1n.provenance, "x2n": X2n.provenance})
    _emit(cfg, v.to_json(), args.out)
    return _geometry_exit(v)


def build_parser():
    p = _Parser(prog="rungekit", description="Cauchy series, null solutions and Runge-pair geometry.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("analyze", help="slab decomposition and structural hypotheses")
    a.add_argument("--poly")
    a.add_argument("--preset")
    a.add_argument("--dim", type=int)
    a.add_argument("--float", dest="exact", action="store_false")
    a.add_argument("--samples", type=int, default=20000)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("cauchy", help="power-series Cauchy solution with polynomial data")
    c.add_argument("--poly")
    c.add_argument("--preset")
    c.add_argument("--dim", type=int)
    c.add_argument("--data", action="append", help="h<j>=<polynomial in x1..x_{d-1}>")
    c.add_argument("--n", type=int)
    c.add_argument("--float", action="store_true")
    c.add_argument("--grid", help="lo:hi:count per axis, comma separated")
    c.add_argument("--csv")
    c.add_argument("--verify-explicit", action="store_true")
    c.add_argument("--lmax", type=int, default=12)
    c.add_argument("--out")
    c.set_defaults(func=cmd_cauchy)

    n = sub.add_parser("null-solution", help="half-space or slab supported null solution")
    n.add_argument("--op", default="heat")
    n.add_argument("--a", type=float, default=1.0)
    n.add_argument("--eps", type=float, default=0.25)
    n.add_argument("--rho", default="3/2")
    n.add_argument("--n", type=int, default=80)
    n.add_argument("--grid")
    n.add_argument("--tau", type=float, default=1.0)
    n.add_argument("--r", default="3/4")
    n.add_argument("--tol", type=float, default=1e-3)
    n.add_argument("--v-only", action="store_true")
    n.add_argument("--csv")
    n.add_argument("--heatmap")
    n.add_argument("--out")
    n.set_defaults(func=cmd_nullsolution)

    r = sub.add_parser("runge-check", help="Runge-pair test for rasterized X1 inside X2")
    r.add_argument("--x1", required=True, help="domain JSON text or file")
    r.add_argument("--x2", required=True)
    r.add_argument("--overlay")
    r.add_argument("--workers", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_runge)

    q = sub.add_parser("pconvex-check", help="minimum principle on characteristic slices")
    q.add_argument("--domain", required=True)
    q.add_argument("--tol", type=float)
    q.add_argument("--exterior", action="store_true", help="count the window exterior as complement")
    q.add_argument("--overlay")
    q.add_argument("--workers", type=int)
    q.add_argument("--out")
    q.set_defaults(func=cmd_pconvex)

    t = sub.add_parser("tube-check", help="Runge test for products of intervals and spatial domains")
    t.add_argument("--i1", required=True)
    t.add_argument("--x1n", required=True)
    t.add_argument("--i2", required=True)
    t.add_argument("--x2n", required=True)
    t.add_argument("--out")
    t.set_defaults(func=cmd_tube)
    return p


def main(argv=None):
    from .domains import ContainmentError, DomainSpecError
    from .polyalg import PolySyntaxError
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (UsageError, PolySyntaxError, DomainSpecError, ContainmentError, ValueError, OSError) as exc:
        sys.stderr.write(f"rungekit {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
