"""Command-line front end.

Subcommands: ``exponents {table|chain}``, ``greens {table|verify}``,
``solve {linear|nonlinear}``, ``oracle compare``.  All numeric output is
CSV with a '#'-prefixed header block (tool version and the fully resolved
configuration), 17 significant digits and newline line endings, so
identical configurations produce byte-identical files.

Exit codes: 0 success, 1 verification or tolerance failure (including a
non-terminating chain and a non-converging solve), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import __version__, exponents, greens, nonlinear, operators, spectral, verify

_FMT = "%.17g"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    return _FMT % float(x)


def _emit(lines: list[str], path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _header(config: dict) -> list[str]:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return [f"# biharm {__version__}", f"# config: {blob}"]


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}", 2)


def _check_keys(obj: dict, allowed: dict, where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise CliError(f"unknown key {where}{key!r} (allowed: {sorted(allowed)})", 2)
        sub = allowed[key]
        if isinstance(sub, dict) and isinstance(obj[key], dict):
            _check_keys(obj[key], sub, f"{where}{key}.")


def _require(cfg: dict, key: str, where: str = ""):
    if key not in cfg:
        raise CliError(f"missing config key {where}{key!r}", 2)
    return cfg[key]


def _source_from_config(fcfg: dict):
    """Build (callable, support_radius) from an f-section."""
    kind = _require(fcfg, "kind", "f.")
    params = fcfg.get("params", {})
    if kind == "gaussian":
        amp = float(params.get("amplitude", 1.0))
        width = float(params.get("width", 1.0))
        return (lambda r: amp * np.exp(-((np.asarray(r) / width) ** 2)), 6.5 * width)
    if kind == "bump":
        amp = float(params.get("amplitude", 1.0))
        radius = float(params.get("radius", 1.0))

        def bump(r):
            r = np.asarray(r, dtype=float)
            x2 = np.clip((r / radius) ** 2, 0.0, 1.0 - 1e-14)
            out = amp * np.exp(1.0 - 1.0 / (1.0 - x2))
            return np.where(r < radius, out, 0.0)

        return bump, radius
    if kind == "csv-profile":
        path = _require(params, "path", "f.params.")
        try:
            data = np.loadtxt(path, delimiter=",", comments="#")
        except OSError as exc:
            raise CliError(f"cannot read profile {path}: {exc}", 2)
        prof = operators.RadialProfile(data[:, 0], data[:, 1])
        return prof, prof.support_radius
    raise CliError(f"unknown source kind {kind!r}", 2)


# ---------------------------------------------------------------------------
# exponents


def cmd_exponents_table(args) -> int:
    table = {"T": exponents.young_T, "grad": exponents.young_grad, "lap": exponents.young_lap}[
        args.table
    ]
    try:
        interval = table(args.N, Fraction(args.p))
    except ValueError as exc:
        raise CliError(str(exc), 2)
    print(interval)
    return 0


def cmd_exponents_chain(args) -> int:
    try:
        sigma = Fraction(args.sigma)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(f"cannot parse sigma: {exc}", 2)
    try:
        trace = exponents.bootstrap_chain(args.N, sigma)
    except exponents.HypothesisViolatedError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return 1
    except exponents.NonTerminationError as exc:
        print(f"non-termination: {exc}", file=sys.stderr)
        return 1
    if args.csv:
        lines = _header({"N": args.N, "sigma": str(sigma)})
        lines.append("step,space,lo,lo_closed,hi,hi_closed,tag")
        for row in trace.to_csv_rows():
            lines.append(",".join(str(c) for c in row))
        _emit(lines, args.csv)
    print(trace.to_text())
    return 0 if trace.terminated else 1


# ---------------------------------------------------------------------------
# greens


def cmd_greens_table(args) -> int:
    if args.N < 2:
        raise CliError(f"dimension must be >= 2, got {args.N}", 2)
    par = greens.GreensParams(args.N, args.k)
    rr = np.geomspace(args.rmin, args.rmax, args.points)
    cfg = {
        "N": args.N,
        "k": args.k,
        "rmin": args.rmin,
        "rmax": args.rmax,
        "points": args.points,
    }
    lines = _header(cfg)
    lines.append("r,G,dG,lapG,dlapG")
    g = greens.greens_biharmonic(par, rr)
    dg = greens.greens_radial_derivative(par, rr)
    lg = greens.greens_laplacian(par, rr)
    dlg = greens.greens_laplacian_radial_derivative(par, rr)
    for i in range(len(rr)):
        lines.append(",".join(_fmt(v) for v in (rr[i], g[i], dg[i], lg[i], dlg[i])))
    _emit(lines, args.out)
    return 0


def cmd_greens_verify(args) -> int:
    if args.N < 2:
        raise CliError(f"dimension must be >= 2, got {args.N}", 2)
    par = greens.GreensParams(args.N, args.k)
    ok, lines = verify.run_suite(args.suite, par)
    for ln in lines:
        print(ln)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# solve


_LINEAR_SCHEMA = {
    "N": None,
    "k": None,
    "f": {"kind": None, "params": {"amplitude": None, "width": None, "radius": None, "path": None}},
    "eval": {"radii": None},
}


def cmd_solve_linear(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, _LINEAR_SCHEMA, "")
    N = int(_require(cfg, "N"))
    k = float(_require(cfg, "k"))
    if N < 2:
        raise CliError(f"dimension must be >= 2, got {N}", 2)
    src, support = _source_from_config(_require(cfg, "f"))
    radii = np.asarray(_require(_require(cfg, "eval"), "radii", "eval."), dtype=float)
    par = greens.GreensParams(N, k)
    try:
        u = operators.convolve_radial(par, src, radii, "G", support_radius=support)
        du = operators.convolve_radial(par, src, radii, "gradG", support_radius=support)
        lu = operators.convolve_radial(par, src, radii, "lapG", support_radius=support)
    except operators.QuadratureFailureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return 1
    lines = _header(cfg)
    lines.append("r,u,du,lapu")
    for i in range(len(radii)):
        lines.append(",".join(_fmt(v) for v in (radii[i], u[i], du[i], lu[i])))
    _emit(lines, args.out)
    return 0


_NONLINEAR_SCHEMA = {
    "N": None,
    "k": None,
    "a": {"kind": None, "params": {"depth": None, "width": None}},
    "g": {"kind": None, "sigma": None, "delta": None, "eps": None, "amplitude": None},
    "solver": None,
    "omega": None,
    "tol": None,
    "max_iter": None,
    "radial": {"r_min": None, "r_max": None, "n": None},
    "grid": {"halfwidth": None, "points": None},
}


def cmd_solve_nonlinear(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, _NONLINEAR_SCHEMA, "")
    N = int(_require(cfg, "N"))
    k = float(_require(cfg, "k"))
    acfg = _require(cfg, "a")
    gcfg = _require(cfg, "g")
    try:
        a = nonlinear.make_coefficient(_require(acfg, "kind", "a."), k, **acfg.get("params", {}))
        sigma = Fraction(str(_require(gcfg, "sigma", "g.")))
        delta = Fraction(str(gcfg.get("delta", "1/2")))
        g = nonlinear.make_nonlinearity(
            _require(gcfg, "kind", "g."),
            N,
            k,
            a,
            sigma,
            eps=float(gcfg.get("eps", 0.0)),
            amplitude=float(gcfg.get("amplitude", 1.0)),
        )
        prob = nonlinear.NonlinearProblem(
            N, k, a, g,
            b1_sup=abs(float(gcfg.get("eps", 0.0))),
            b2_sup=abs(float(gcfg.get("eps", 0.0))),
            delta=delta,
            sigma=sigma,
        )
    except ValueError as exc:
        raise CliError(str(exc), 2)

    solver = cfg.get("solver", "radial")
    omega = float(cfg.get("omega", 0.5))
    tol = float(cfg.get("tol", 1e-8))
    max_iter = int(cfg.get("max_iter", 500))

    if solver == "radial":
        rcfg = cfg.get("radial", {})
        u0 = operators.RadialProfile.from_callable(
            lambda r: np.zeros_like(r),
            r_max=float(rcfg.get("r_max", 10.0)),
            n=int(rcfg.get("n", 64)),
            r_min=float(rcfg.get("r_min", 1e-2)),
        )
    elif solver == "spectral":
        if N > 3:
            raise CliError("spectral solver needs N <= 3", 2)
        gcfg2 = cfg.get("grid", {})
        M = int(gcfg2.get("points", 64))
        L = float(gcfg2.get("halfwidth", 12.0))
        u0 = operators.Field(N, L, np.zeros((M,) * N))
    else:
        raise CliError(f"unknown solver {solver!r}", 2)

    code = 0
    try:
        sol, trace = nonlinear.picard_solve(prob, u0, relax=omega, tol=tol, max_iter=max_iter)
    except (nonlinear.MaxIterExceededError, nonlinear.BlowUpError) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        trace = exc.trace
        sol = None
        code = 1

    if sol is not None:
        lines = _header(cfg)
        lines.append("r,u")
        if isinstance(sol, operators.RadialProfile):
            for r, v in zip(sol.nodes, sol.values):
                lines.append(f"{_fmt(r)},{_fmt(v)}")
        else:
            m = sol.points_per_dim
            x = sol.coords1d()
            idx0 = tuple([m // 2] * (sol.dim - 1))
            axis = sol.values[(slice(m // 2, None),) + idx0]
            for r, v in zip(x[m // 2 :], axis):
                lines.append(f"{_fmt(r)},{_fmt(v)}")
        _emit(lines, args.out)

    if args.trace:
        tlines = _header(cfg)
        tlines.append("iter,residual")
        for i, res in enumerate(trace.iterates):
            tlines.append(f"{i},{_fmt(res)}")
        _emit(tlines, args.trace)
    return code


_ORACLE_SCHEMA = {
    "N": None,
    "k": None,
    "f": _LINEAR_SCHEMA["f"],
    "grid": {"halfwidth": None, "points": None},
    "eval": {"radii": None},
    "bound": None,
}


def cmd_oracle_compare(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, _ORACLE_SCHEMA, "")
    N = int(_require(cfg, "N"))
    k = float(_require(cfg, "k"))
    if not 2 <= N <= 3:
        raise CliError("oracle comparison needs N in {2, 3}", 2)
    src, support = _source_from_config(_require(cfg, "f"))
    gcfg = _require(cfg, "grid")
    L = float(_require(gcfg, "halfwidth", "grid."))
    M = int(_require(gcfg, "points", "grid."))
    bound = float(cfg.get("bound", 1e-3))
    radii = np.asarray(_require(_require(cfg, "eval"), "radii", "eval."), dtype=float)

    grid = spectral.PeriodicGrid(N, L, M)
    u_spec = spectral.solve_biharmonic_periodic(grid, grid.sample(src), k)
    x = grid.coords1d()
    i0 = M // 2
    idx = np.clip(np.round(radii / grid.spacing).astype(int), 0, M // 2 - 1)
    snapped = x[i0 + idx]
    spec_vals = u_spec.values[(i0 + idx,) + tuple([i0] * (N - 1))]

    par = greens.GreensParams(N, k)
    conv_vals = operators.convolve_radial(
        par, src, np.maximum(snapped, 1e-9), "G", support_radius=support
    )

    scale = float(np.max(np.abs(conv_vals)))
    rel = np.abs(conv_vals - spec_vals) / scale
    lines = _header(cfg)
    lines.append("r,u_conv,u_spec,rel_err")
    for i in range(len(snapped)):
        lines.append(
            ",".join(_fmt(v) for v in (snapped[i], conv_vals[i], spec_vals[i], rel[i]))
        )
    _emit(lines, args.out)
    worst = float(np.max(rel))
    print(f"max relative discrepancy: {worst:.3e} (bound {bound:g})")
    return 0 if worst < bound else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biharm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("exponents", help="exact exponent tables and bootstrap chains")
    exp_sub = p_exp.add_subparsers(dest="subcommand", required=True)
    p_tab = exp_sub.add_parser("table", help="one admissibility interval")
    p_tab.add_argument("--N", type=int, required=True)
    p_tab.add_argument("--p", type=str, required=True)
    p_tab.add_argument("--table", choices=["T", "grad", "lap"], default="T")
    p_tab.set_defaults(fn=cmd_exponents_table)
    p_ch = exp_sub.add_parser("chain", help="run the integrability bootstrap")
    p_ch.add_argument("--N", type=int, required=True)
    p_ch.add_argument("--sigma", type=str, required=True)
    p_ch.add_argument("--csv", type=str, default=None, help="also write the trace as CSV")
    p_ch.set_defaults(fn=cmd_exponents_chain)

    p_gr = sub.add_parser("greens", help="kernel tables and verification suites")
    gr_sub = p_gr.add_subparsers(dest="subcommand", required=True)
    p_gt = gr_sub.add_parser("table", help="tabulate G, G', lap G, (lap G)'")
    p_gt.add_argument("--N", type=int, required=True)
    p_gt.add_argument("--k", type=float, required=True)
    p_gt.add_argument("--rmin", type=float, default=0.1)
    p_gt.add_argument("--rmax", type=float, default=10.0)
    p_gt.add_argument("--points", type=int, default=64)
    p_gt.add_argument("--out", type=str, default=None)
    p_gt.set_defaults(fn=cmd_greens_table)
    p_gv = gr_sub.add_parser("verify", help="run a named property suite")
    p_gv.add_argument("--N", type=int, required=True)
    p_gv.add_argument("--k", type=float, required=True)
    p_gv.add_argument("--suite", choices=sorted(verify.SUITES), required=True)
    p_gv.set_defaults(fn=cmd_greens_verify)

    p_sv = sub.add_parser("solve", help="linear and nonlinear solves")
    sv_sub = p_sv.add_subparsers(dest="subcommand", required=True)
    p_sl = sv_sub.add_parser("linear", help="convolve a source against the kernel")
    p_sl.add_argument("--config", type=str, required=True)
    p_sl.add_argument("--out", type=str, default=None)
    p_sl.set_defaults(fn=cmd_solve_linear)
    p_sn = sv_sub.add_parser("nonlinear", help="relaxed fixed-point probe")
    p_sn.add_argument("--config", type=str, required=True)
    p_sn.add_argument("--out", type=str, default=None)
    p_sn.add_argument("--trace", type=str, default=None)
    p_sn.set_defaults(fn=cmd_solve_nonlinear)

    p_or = sub.add_parser("oracle", help="cross-validation of the two solvers")
    or_sub = p_or.add_subparsers(dest="subcommand", required=True)
    p_oc = or_sub.add_parser("compare", help="convolution vs spectral discrepancy table")
    p_oc.add_argument("--config", type=str, required=True)
    p_oc.add_argument("--out", type=str, default=None)
    p_oc.set_defaults(fn=cmd_oracle_compare)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
