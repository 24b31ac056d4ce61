"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 invalid parameters, 3 failed
certification (verify, or sweep --check).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import adoption, limiteq, statics, verify
from .params import NonGenericError, ParamError, load_config
from .sim import StrategyProfile, estimate_outcomes
from .woa import BeliefState, exhaustion_residuals, solve_woa

DIGITS = 12


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit status 1."""

    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def _round(x):
    if isinstance(x, (bool, np.bool_)) or x is None:
        return bool(x) if x is not None else None
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.{DIGITS}g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _flat(d, prefix=""):
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out += _flat(v, key + ".")
        elif isinstance(v, list):
            out.append((key, ";".join(str(x) for x in v)))
        else:
            out.append((key, v))
    return out


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([statics._fmt(v, DIGITS) for v in r])
    return buf.getvalue()


def _emit(args, payload, summary, csv_text=None):
    if args.format == "csv":
        text = csv_text if csv_text is not None else _csv(["key", "value"], _flat(_round(payload)))
    else:
        text = json.dumps(_round(payload), indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)


def _config(args):
    cfg = load_config(args.config, args.set or ())
    rb = args.r_b if getattr(args, "r_b", None) is not None else cfg["r_b"]
    rs = args.r_s if getattr(args, "r_s", None) is not None else cfg["r_s"]
    return cfg, rb, rs


def _binary(args, cfg):
    t1, t2 = args.theta1, args.theta2
    if cfg["theta"] and len(cfg["theta"]) == 2:
        t1 = cfg["theta"][0] if t1 is None else t1
        t2 = cfg["theta"][1] if t2 is None else t2
    if t1 is None or t2 is None:
        raise ParamError("theta1 and theta2 are required", "theta")
    c = getattr(args, "c", None)
    if c is None and cfg["adoption_costs"]:
        c = cfg["adoption_costs"][0]
    return t1, t2, c


# commands ---------------------------------------------------------------

def cmd_regime(args):
    cfg, rb, rs = _config(args)
    t1, t2, c = _binary(args, cfg)
    if not t1 < t2:
        raise ParamError("costs not increasing", "theta")
    ps = limiteq.pi_star(t1, t2, rb, rs)
    gap = limiteq.screening_gap_condition(t1, t2)
    if c is None:
        out = {"pi_star": ps, "gap_condition": gap.holds, "gap_margin": gap.margin,
               "boundary": gap.boundary}
        _emit(args, out, f"pi_star={ps:.12g}")
        return 0
    reg = adoption.classify_regime(t1, t2, c, rb, rs)
    eqs = adoption.limit_equilibria_endogenous(t1, t2, c, rb, rs)
    main = next((e for e in eqs if not e.efficient), eqs[0])
    out = {"label": reg.label, "pi_star": ps,
           "rho_star": None if main.efficient else main.buyer_mix,
           "adoption_prob": main.adoption_prob, "expected_delay": main.expected_delay,
           "boundary": reg.boundary, "neighbors": list(reg.neighbors),
           "conditions": reg.conditions, "equilibria": [e.to_dict() for e in eqs]}
    row = [reg.label, ps, out["rho_star"], main.adoption_prob, main.expected_delay, reg.boundary]
    text = _csv(["label", "pi_star", "rho_star", "adoption_prob", "expected_delay", "boundary"],
                [row])
    _emit(args, out, f"{reg.label}: delay={main.expected_delay:.12g}", text)
    return 0


def cmd_solve_exo(args):
    cfg, rb, rs = _config(args)
    costs = args.costs or cfg["theta"]
    if not costs or args.pi is None:
        raise ParamError("--costs and --pi are required", "costs")
    try:
        les = [limiteq.limit_equilibrium_exogenous(args.pi, costs, rb, rs)]
        knife = False
    except NonGenericError as err:
        if not err.candidates or not isinstance(err.candidates[0], limiteq.LimitEquilibrium):
            raise
        les, knife = list(err.candidates), True
    out = les[0].to_dict() if not knife else {"knife_edge": True,
                                              "candidates": [e.to_dict() for e in les]}
    text = _csv(list(limiteq.LimitEquilibrium.CSV_FIELDS), [e.csv_row() for e in les])
    summary = ("knife-edge: " if knife else "") + ", ".join(
        f"{e.regime_label} offer={e.buyer_offer:.12g}" for e in les)
    _emit(args, out, summary, text)
    return 0


def cmd_solve_endo(args):
    cfg, rb, rs = _config(args)
    if args.costs:
        if not args.adoption_costs:
            raise ParamError("--adoption-costs is required with --costs", "adoption_costs")
        reg = adoption.classify_regime_multi(args.costs, args.adoption_costs, rb, rs)
        _emit(args, reg.to_dict(), f"{reg.label}: adoption={reg.adoption_prob:.12g}")
        return 0
    t1, t2, c = _binary(args, cfg)
    if c is None:
        raise ParamError("--c is required", "c")
    eqs = adoption.limit_equilibria_endogenous(t1, t2, c, rb, rs)
    fields = ["label", "efficient", "adoption_prob", "buyer_mix", "expected_delay",
              "welfare_loss", "welfare"]
    text = _csv(fields, [[getattr(e, f) for f in fields] for e in eqs])
    summary = "; ".join(f"{e.label} efficient={e.efficient} delay={e.expected_delay:.12g}"
                        for e in eqs)
    _emit(args, {"equilibria": [e.to_dict() for e in eqs]}, summary, text)
    return 0


def cmd_woa(args):
    cfg, rb, rs = _config(args)
    costs = args.costs or cfg["theta"]
    if not costs:
        raise ParamError("--costs is required", "costs")
    eps_s = args.eps_s
    pi_hat = args.pi_hat
    if pi_hat is None:
        pi_hat = (1.0 - eps_s,) if len(costs) == 1 else None
    if pi_hat is None:
        raise ParamError("--pi-hat is required with several costs", "pi_hat")
    sol = solve_woa(args.p_b, args.p_s, BeliefState(args.eps_b, eps_s, pi_hat), costs, rb, rs)
    rep = verify.verify_woa_indifference(sol)
    out = sol.to_dict()
    out["exhaustion_residuals"] = list(exhaustion_residuals(sol))
    out["indifference"] = {"passed": rep.passed, "max_error": rep.max_indifference_error,
                           "max_excess": rep.max_excess}
    _emit(args, out, f"{sol.branch} weak={sol.weak} c_b={sol.c_b:.12g} "
                            f"c_s={sol.c_s:.12g} T_end={sol.T_end:.12g}")
    return 0


def _axis(text):
    try:
        name, rng = text.split("=", 1)
        lo, hi, step = (float(v) for v in rng.split(":"))
    except ValueError as exc:
        raise ParamError(f"axis must look like name=lo:hi:step, got {text!r}", "axis") from exc
    if step <= 0 or hi < lo:
        raise ParamError(f"axis {name} needs lo <= hi and step > 0", "axis")
    n = int(round((hi - lo) / step)) + 1
    return name.strip(), [float(f"{lo + k * step:.12g}") for k in range(n)]


def cmd_sweep(args):
    cfg, rb, rs = _config(args)
    base = {"r_b": rb, "r_s": rs}
    for key in ("theta1", "theta2", "c", "pi1"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    if args.preset == "figure":
        table = statics.figure_grid(base.get("theta1", 0.1), args.step)
    else:
        if not args.axis:
            raise ParamError("at least one --axis is required", "axis")
        axes = [_axis(a) for a in args.axis]
        for name, _ in axes:
            base.pop(name, None)
        qs = args.quantity or ["delay", "loss"]
        table = statics.sweep(axes, qs, base)
    status, summary = 0, f"{len(table.rows)} rows"
    if args.check:
        q = (args.quantity or ["delay"])[0]
        rep = statics.check_monotonicity(table, statics.Claim(q, args.check, args.strict,
                                                              by_regime=args.by_regime))
        summary += f"; {q} {'strictly ' if args.strict else ''}{args.check}: " \
                   f"{'pass' if rep.passed else 'FAIL'} ({rep.n_pairs} pairs)"
        status = 0 if rep.passed else 3
    args.format = "csv" if args.format is None else args.format
    if args.format == "csv":
        _emit(args, None, summary, table.to_csv(DIGITS))
    else:
        rows = [{k: v for k, v in r.items()} for r in table.rows]
        _emit(args, {"header": table.header, "rows": rows}, summary)
    return status


def _profile(args, cfg, rb, rs, eps):
    nu = args.nu if args.nu is not None else cfg["nu"]
    if args.kind == "exo":
        costs = args.costs or cfg["theta"]
        if not costs or args.pi is None:
            raise ParamError("--costs and --pi are required", "costs")
        le = limiteq.limit_equilibrium_exogenous(args.pi, costs, rb, rs)
        return StrategyProfile.from_limit(le, eps, nu)
    if args.kind == "endo":
        t1, t2, c = _binary(args, cfg)
        if c is None:
            raise ParamError("--c is required", "c")
        eqs = adoption.limit_equilibria_endogenous(t1, t2, c, rb, rs)
        if not 0 <= args.which < len(eqs):
            raise ParamError(f"--which must be below {len(eqs)}", "which")
        return StrategyProfile.from_adoption(eqs[args.which], t1, t2, c, eps, nu, rb, rs)
    costs = args.costs or cfg["theta"]
    if not costs or args.p_b is None or args.p_s is None:
        raise ParamError("--costs, --p-b and --p-s are required", "costs")
    pi_hat = args.pi_hat or ((1.0 - eps,) if len(costs) == 1 else None)
    if pi_hat is None:
        raise ParamError("--pi-hat is required with several costs", "pi_hat")
    eps_s = 1.0 - sum(pi_hat)
    sol = solve_woa(args.p_b, args.p_s, BeliefState(eps, eps_s, pi_hat), costs, rb, rs)
    return StrategyProfile.from_woa(sol)


def _seed(args, cfg):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ARTIFACT_SEED")
    return int(env) if env else cfg["seed"]


def cmd_simulate(args):
    cfg, rb, rs = _config(args)
    eps = args.eps if args.eps is not None else cfg["eps"]
    prof = _profile(args, cfg, rb, rs, eps)
    seed = _seed(args, cfg)
    dump = None
    if args.dump:
        dump = open(args.dump, "w")
    try:
        rep = estimate_outcomes(prof, args.n_paths, seed, args.tie_window, dump, args.dump_cap)
    finally:
        if dump:
            dump.close()
    out = rep.to_dict()
    out["profile"] = prof.describe()
    m, se = rep.buyer_payoff
    _emit(args, out, f"buyer payoff {m:.6g} +/- {se:.2g}, delay "
                            f"{rep.expected_delay[0]:.6g} ({args.n_paths} paths, seed {seed})")
    return 0


def cmd_verify(args):
    cfg, rb, rs = _config(args)
    eps = args.eps if args.eps is not None else cfg["eps"]
    prof = _profile(args, cfg, rb, rs, eps)
    rep = verify.best_response_gap(prof, tol=args.tol, policy=args.policy)
    out = rep.to_dict()
    out["profile"] = prof.describe()
    status = 0 if rep.passed else 3
    _emit(args, out, f"gap {rep.gap:.6g} (tol {args.tol:g}): "
                            f"{'pass' if rep.passed else 'FAIL'}")
    return status


def cmd_benchmark(args):
    from .bench import run_benchmark
    rows = run_benchmark(args.n, args.repeats)
    keys = sorted({k for r in rows for k in r}, key=["kernel", "n", "numpy", "numba",
                                                      "speedup", "agree"].index)
    text = _csv(keys, [[r.get(k) for k in keys] for r in rows])
    summary = ", ".join(f"{r['kernel']} x{r.get('speedup', float('nan')):.2f}" for r in rows)
    _emit(args, {"rows": rows}, summary, text)
    return 0


# parser -----------------------------------------------------------------

def build_parser():
    p = Parser(prog="artifact", description="Reputational bargaining with technology adoption.")
    sub = p.add_subparsers(dest="command", parser_class=Parser)

    def common(sp, fmt="json"):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
        sp.add_argument("--format", choices=("json", "csv"), default=fmt)
        sp.add_argument("--output", "-o", help="write the artifact here instead of stdout")
        sp.add_argument("--r-b", type=float, dest="r_b")
        sp.add_argument("--r-s", type=float, dest="r_s")

    def binary(sp):
        sp.add_argument("--theta1", type=float)
        sp.add_argument("--theta2", type=float)
        sp.add_argument("--c", type=float, help="adoption cost of the cheaper technology")

    sp = sub.add_parser("regime", help="classify the adoption regime")
    common(sp)
    binary(sp)
    sp.set_defaults(func=cmd_regime)

    sp = sub.add_parser("solve-exo", help="limit outcome for a given cost distribution")
    common(sp)
    sp.add_argument("--costs", type=_floats)
    sp.add_argument("--pi", type=_floats)
    sp.set_defaults(func=cmd_solve_exo)

    sp = sub.add_parser("solve-endo", help="limit equilibria with adoption")
    common(sp)
    binary(sp)
    sp.add_argument("--costs", type=_floats, help="several technologies")
    sp.add_argument("--adoption-costs", type=_floats, dest="adoption_costs")
    sp.set_defaults(func=cmd_solve_endo)

    sp = sub.add_parser("woa", help="solve one war of attrition")
    common(sp)
    sp.add_argument("--p-b", type=float, dest="p_b", required=True)
    sp.add_argument("--p-s", type=float, dest="p_s", required=True)
    sp.add_argument("--costs", type=_floats)
    sp.add_argument("--eps-b", type=float, dest="eps_b", required=True)
    sp.add_argument("--eps-s", type=float, dest="eps_s", required=True)
    sp.add_argument("--pi-hat", type=_floats, dest="pi_hat")
    sp.set_defaults(func=cmd_woa)

    sp = sub.add_parser("sweep", help="parameter sweep to CSV")
    common(sp, fmt=None)
    sp.add_argument("--axis", action="append", help="name=lo:hi:step (repeatable)")
    sp.add_argument("--quantity", action="append", help="column to report (repeatable)")
    sp.add_argument("--theta1", type=float)
    sp.add_argument("--theta2", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--pi1", type=float)
    sp.add_argument("--preset", choices=("figure",), help="regime map over (gap, c)")
    sp.add_argument("--step", type=float, default=0.01)
    sp.add_argument("--check", choices=("increasing", "decreasing"),
                    help="certify monotonicity of the first quantity")
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--by-regime", action="store_true", dest="by_regime")
    sp.set_defaults(func=cmd_sweep)

    def profile(sp):
        sp.add_argument("--kind", choices=("exo", "endo", "woa"), default="endo")
        binary(sp)
        sp.add_argument("--which", type=int, default=0, help="index among the limit equilibria")
        sp.add_argument("--costs", type=_floats)
        sp.add_argument("--pi", type=_floats)
        sp.add_argument("--p-b", type=float, dest="p_b")
        sp.add_argument("--p-s", type=float, dest="p_s")
        sp.add_argument("--pi-hat", type=_floats, dest="pi_hat")
        sp.add_argument("--eps", type=float)
        sp.add_argument("--nu", type=float)

    sp = sub.add_parser("simulate", help="Monte Carlo estimates for a profile")
    common(sp)
    profile(sp)
    sp.add_argument("--n-paths", type=int, default=100_000, dest="n_paths")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tie-window", type=float, default=0.0, dest="tie_window")
    sp.add_argument("--dump", help="per-path CSV file")
    sp.add_argument("--dump-cap", type=int, default=10_000, dest="dump_cap")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="best-response gap of a profile")
    common(sp)
    profile(sp)
    sp.add_argument("--tol", type=float, default=verify.DEFAULT_TOL)
    sp.add_argument("--policy", choices=("prior", "lowest", "deterrent"), default="deterrent")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("benchmark", help="numba kernels against the numpy fallback")
    common(sp)
    sp.add_argument("--n", type=int, default=1_000_000)
    sp.add_argument("--repeats", type=int, default=5)
    sp.set_defaults(func=cmd_benchmark)
    return p


def run_command(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.error("a command is required")
        result = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return result


def main(argv=None):
    sys.exit(run_command(argv))
