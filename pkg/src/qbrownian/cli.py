"""Command-line front end.

Every subcommand prints either CSV (one header line naming the columns and
their units, then data rows) or a single JSON document.  Exit codes: 0 on
success, 2 for bad flags or arguments outside their domain, 3 when a
numerical routine fails to converge, 4 when a validation suite fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import qseries as qs
from . import sim, tq
from .errors import DomainError, MembershipError, NonConvergence, OrderError, PoleError
from .validate import run_suite

__all__ = ["run", "main", "parse_grid", "parse_state"]

EXIT_OK, EXIT_FLAGS, EXIT_NONCONVERGENCE, EXIT_VALIDATION = 0, 2, 3, 4


class _FlagError(Exception):
    pass


def parse_grid(text: str) -> list[float]:
    """Comma list ``a,b,c`` or geometric range ``lo:hi:n`` (n points, both ends included)."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            lo_f, hi_f, count = float(lo), float(hi), int(n)
            if lo_f <= 0 or hi_f <= 0 or count < 1:
                raise ValueError
            if count == 1:
                return [lo_f]
            return [float(x) for x in np.geomspace(lo_f, hi_f, count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise _FlagError(f"cannot parse grid {text!r}; use a,b,c or lo:hi:n with positive ends") from exc


def parse_state(text: str) -> tq.TqState:
    """``0`` for the origin, ``+k`` or ``-k`` for +-q^k (a bare ``k`` means +q^k)."""
    text = text.strip()
    if text == "0":
        return tq.TqState.zero()
    try:
        if text.startswith("-"):
            return tq.TqState.neg(int(text[1:]))
        return tq.TqState.pos(int(text.lstrip("+")))
    except ValueError as exc:
        raise _FlagError(f"cannot parse state {text!r}; use 0, +k or -k") from exc


def _emit(columns: Sequence[str], rows: Sequence[Sequence[Any]], fmt: str, out) -> None:
    if fmt == "json":
        doc = {"columns": list(columns), "rows": [dict(zip(columns, r)) for r in rows]}
        out.write(json.dumps(doc, sort_keys=True) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    out.write(buf.getvalue())


def _params(args) -> tq.TqParams:
    return tq.TqParams(args.q)


def _lambdas(args) -> list[float]:
    if args.lambda_grid is not None:
        grid = parse_grid(args.lambda_grid)
    elif args.lam is not None:
        grid = [args.lam]
    else:
        raise _FlagError("give --lambda or --lambda-grid")
    if not grid or any(not x > 0 for x in grid):
        raise _FlagError("lambda values must be positive")
    return grid


LAPLACE_COLUMNS = ["q", "n", "m", "lambda[1/time]", "value", "method", "error_estimate"]


def _cmd_qseries(args) -> tuple[list[str], list[list[Any]]]:
    base, z = args.base, args.z
    if args.func == "qpoch":
        n = math.inf if args.index == "inf" else int(args.index)
        value = qs.qpoch_value(z, base, n)
    elif args.func == "phi":
        value = qs.rphis(parse_grid(args.a) if args.a else [], parse_grid(args.b) if args.b else [], base, z)
    elif args.func == "eq":
        value = qs.eq_exp(z, base)
    elif args.func == "Eq":
        value = qs.Eq_exp(z, base)
    else:
        value = qs.psi01(args.c, base, z)
    return ["func", "base", "z", "value"], [[args.func, base, z, value]]


def _cmd_cf(args):
    p = _params(args)
    fn = tq.h0_down_fraction if args.kind == "down" else tq.h0_up_fraction
    rows = []
    for lam in _lambdas(args):
        v = fn(lam, p)
        rows.append([p.q, 0, -1 if args.kind == "down" else 1, lam, v.value, v.method, v.error_estimate])
    return LAPLACE_COLUMNS, rows


def _cmd_hit(args):
    p = _params(args)
    rows = []
    for lam in _lambdas(args):
        if args.kind == "down":
            forms = {"both": ["phi01", "phi11"], "all": ["phi01", "phi11", "cf"]}.get(args.form, [args.form])
            for form in forms:
                v = tq.h0_down_fraction(lam, p) if form == "cf" else tq.h0_down(lam, p, form)
                rows.append([p.q, 0, -1, lam, v.value, v.method, v.error_estimate])
        elif args.kind == "up":
            forms = {"both": ["phi11", "cf"], "all": ["phi11", "cf"]}.get(args.form, [args.form])
            for form in forms:
                v = tq.h0_up_fraction(lam, p) if form == "cf" else tq.h0_up(lam, p)
                rows.append([p.q, 0, 1, lam, v.value, v.method, v.error_estimate])
        elif args.kind == "nm":
            if args.form == "cf":
                raise _FlagError("level-to-level transforms have no continued-fraction form here")
            forms = ["phi01", "phi11"] if args.form in ("both", "all") else [args.form]
            if args.m >= args.n:
                forms = forms[:1]  # one closed form upward
            for form in forms:
                v = tq.h_nm(args.n, args.m, lam, p, form)
                rows.append([p.q, args.n, args.m, lam, v.value, v.method, v.error_estimate])
        else:
            v = tq.h_to_zero(args.n, lam, p)
            rows.append([p.q, args.n, "zero", lam, v.value, v.method, v.error_estimate])
    return LAPLACE_COLUMNS, rows


def _cmd_density(args):
    p = _params(args)
    if args.t is None:
        raise _FlagError("give --t (a value, comma list or lo:hi:n range)")
    times = parse_grid(args.t)
    if any(not t > 0 for t in times):
        raise _FlagError("times must be positive")
    rows = [[p.q, args.n, t, tq.tau_zero_density(args.n, t, p, strict=args.strict)] for t in times]
    return ["q", "n", "t[time]", "density[1/time]"], rows


def _cmd_psi(args):
    p = _params(args)
    rows = []
    for lam in _lambdas(args):
        row = [p.q, lam, tq.psi_exponent(lam, p), "product"]
        rows.append(row)
        if args.sum_check:
            rows.append([p.q, lam, tq.psi_exponent_sum(lam, p, args.window), "entrance_sum"])
    return ["q", "lambda[1/time]", "psi[1/time]", "method"], rows


def _cmd_entrance(args):
    p = _params(args)
    rows = [[p.q, args.n, lam, tq.entrance_law_lt(args.n, lam, p)] for lam in _lambdas(args)]
    return ["q", "n", "lambda[1/time]", "entrance_transform[time*length]"], rows


def _cmd_resolvent(args):
    p = _params(args)
    x, y = parse_state(args.x), parse_state(args.y)
    rows = []
    for lam in _lambdas(args):
        if args.killed:
            if x.kind != "positive" or y.kind != "positive":
                raise _FlagError("--killed needs two positive states")
            value = tq.resolvent_killed(x.exponent, y.exponent, lam, p)
        else:
            value = tq.resolvent_full(x, y, lam, p)
        rows.append([p.q, args.x, args.y, lam, value, "killed" if args.killed else "full"])
    return ["q", "from", "to", "lambda[1/time]", "resolvent[time]", "variant"], rows


def _cmd_simulate(args, out) -> None:
    p = _params(args)
    rng = sim.RngStream(args.seed)
    if args.kind == "path":
        horizon = float(args.t) if args.t is not None else 1.0
        path = sim.simulate_path(tq.TqState.pos(args.n), horizon, args.floor, p, rng)
        if args.output == "json":
            records = [{"jump_time": t, "state_value": s.value(p), "exponent": s.exponent, "sign": s.sign}
                       for t, s in zip([0.0, *path.jump_times], path.states)]
            out.write(json.dumps({"path": records, "terminated_by": path.terminated_by,
                                  "seed": args.seed}, sort_keys=True) + "\n")
        else:
            out.write(sim.path_to_csv(path, p))
        return
    lam = args.lam if args.lam is not None else 1.0
    m = args.m
    if args.kind == "down" and m >= args.n:
        m = args.n - 1
    if args.kind == "up" and m <= args.n:
        m = args.n + 1
    est = sim.estimate_laplace(args.kind, args.n, m, lam, p, args.samples, rng)
    params = {"q": p.q, "n": args.n, "m": m, "lambda": lam}
    if args.output == "json":
        out.write(sim.estimate_to_json(args.kind, params, est, args.seed) + "\n")
    else:
        _emit(["kind", "q", "n", "m", "lambda[1/time]", "estimate", "std_error", "n_samples", "seed"],
              [[args.kind, p.q, args.n, m, lam, est.mean, est.std_error, est.n_samples, args.seed]],
              "csv", out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbrownian",
                                     description="Brownian motion on the q-geometric time scale.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, lam=True):
        sp.add_argument("--q", type=float, default=2.0, help="process parameter q > 1")
        if lam:
            sp.add_argument("--lambda", dest="lam", type=float, help="Laplace variable")
            sp.add_argument("--lambda-grid", help="comma list or lo:hi:n geometric range")
        sp.add_argument("--output", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("qseries", help="q-Pochhammer symbols and basic hypergeometric series")
    sp.add_argument("--func", choices=("qpoch", "phi", "eq", "Eq", "psi01"), default="qpoch")
    sp.add_argument("--base", type=float, required=True, help="series base in (0, 1)")
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--index", default="inf", help="product length (integer or inf)")
    sp.add_argument("--a", help="numerator parameters, comma separated")
    sp.add_argument("--b", help="denominator parameters, comma separated")
    sp.add_argument("--c", type=float, default=0.0, help="denominator parameter of the bilateral series")
    sp.add_argument("--output", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("cf", help="hitting transforms by continued fraction")
    common(sp)
    sp.add_argument("--kind", choices=("down", "up"), default="down")

    sp = sub.add_parser("hit", help="closed-form hitting-time transforms")
    common(sp)
    sp.add_argument("--kind", choices=("down", "up", "nm", "to_zero"), default="down")
    sp.add_argument("--form", choices=("phi01", "phi11", "cf", "both", "all"), default="phi11")
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--m", type=int, default=-1)

    sp = sub.add_parser("density", help="density of the hitting time of zero")
    common(sp, lam=False)
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--t", help="time, comma list or lo:hi:n range")
    sp.add_argument("--strict", action="store_true", help="fail instead of returning 0 when precision is lost")

    sp = sub.add_parser("psi", help="Laplace exponent of the inverse local time")
    common(sp)
    sp.add_argument("--sum-check", action="store_true", help="add the entrance-law sum form")
    sp.add_argument("--window", type=int, default=40, help="exponent window of the sum form")

    sp = sub.add_parser("entrance", help="Laplace transform of the excursion entrance law")
    common(sp)
    sp.add_argument("--n", type=int, default=0)

    sp = sub.add_parser("resolvent", help="resolvent densities")
    common(sp)
    sp.add_argument("--x", default="+0", help="start state: 0, +k or -k")
    sp.add_argument("--y", default="+0", help="target state: 0, +k or -k")
    sp.add_argument("--killed", action="store_true", help="process killed at zero")

    sp = sub.add_parser("simulate", help="Monte Carlo paths and estimates")
    common(sp)
    sp.add_argument("--kind", choices=("path", "down", "up", "to_zero"), default="path")
    sp.add_argument("--n", type=int, default=0)
    sp.add_argument("--m", type=int, default=-1)
    sp.add_argument("--t", help="time horizon for --kind path")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--floor", type=int, default=-10, help="exponent where the exact splice to zero starts")

    sp = sub.add_parser("validate", help="run a self-check suite")
    sp.add_argument("--suite", choices=("identities", "hitting", "excursion", "montecarlo", "all"),
                    default="all")
    sp.add_argument("--output", choices=("csv", "json"), default="csv")
    return parser


_TABLE_COMMANDS = {
    "qseries": _cmd_qseries,
    "cf": _cmd_cf,
    "hit": _cmd_hit,
    "density": _cmd_density,
    "psi": _cmd_psi,
    "entrance": _cmd_entrance,
    "resolvent": _cmd_resolvent,
}


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_FLAGS
    try:
        if args.command == "validate":
            checks = run_suite(args.suite)
            rows = [[c.name, "pass" if c.passed else "fail", c.worst, c.tolerance] for c in checks]
            _emit(["check", "status", "worst", "tolerance"], rows, args.output, out)
            return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION
        if args.command == "simulate":
            _cmd_simulate(args, out)
            return EXIT_OK
        columns, rows = _TABLE_COMMANDS[args.command](args)
        _emit(columns, rows, args.output, out)
        return EXIT_OK
    except (_FlagError, DomainError, MembershipError, OrderError, PoleError) as exc:
        err.write(f"qbrownian {args.command}: {exc}\n")
        return EXIT_FLAGS
    except NonConvergence as exc:
        err.write(f"qbrownian {args.command}: no convergence: {exc}\n")
        return EXIT_NONCONVERGENCE


def main() -> None:
    sys.exit(run())
