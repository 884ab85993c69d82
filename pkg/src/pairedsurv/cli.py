"""Command-line interface: ``pairedsurv analyze | simulate | truth``.

Exit codes: 0 success, 2 invalid input, 3 degenerate variance or positivity
failure.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import baselines, harness, rmst, rte, simgen
from .data import load_csv, validate
from .exceptions import (DataError, DegenerateVarianceError, PositivityError,
                         RatioUndefinedError, ScenarioError)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DEGENERATE = 3

ANALYZE_METHODS = ("rte", "midrank", "km", "vonhoff", "rmst")
EXAMPLE_TAU1 = 1.2


def example_path():
    """Path of the bundled synthetic example data set."""
    return resources.files("pairedsurv").joinpath("data/example.csv")


class _Row:
    def __init__(self, label, estimate, two, one, source=None):
        self.label = label
        self.estimate = float(estimate)
        self.two = tuple(float(v) for v in two)
        self.one = tuple(float(v) for v in one)
        self.source = source


def _rte_rows(ds, args):
    cfg = rte.RteConfig(tau1=args.tau1, tau2=args.tau2, delta=args.delta,
                        alpha=args.alpha)
    crs = rte.recode(ds, cfg)
    diag = rte.check_assumptions(crs)
    rows = []
    res = rte.asymptotic_inference(crs, cfg)
    rows.append(_Row("RTE (Gauss)", res.theta_hat, res.ci_two_sided,
                     res.ci_lower_one_sided, res.quantile_source))
    if args.resampling == "perm":
        res = rte.randomization_inference(crs, cfg, args.B,
                                          np.random.default_rng([args.seed, 1]))
        rows.append(_Row("RTE (perm)", res.theta_hat, res.ci_two_sided,
                         res.ci_lower_one_sided, res.quantile_source))
    elif args.resampling == "boot":
        res = rte.bootstrap_inference(ds, cfg, args.B,
                                      np.random.default_rng([args.seed, 2]))
        rows.append(_Row("RTE (boot)", res.theta_hat, res.ci_two_sided,
                         res.ci_lower_one_sided, res.quantile_source))
    return rows, diag.warnings + list(res.diagnostics)


def _baseline_rows(ds, args, methods):
    level = 1 - args.alpha
    rows = []

    def add(label, fn, **kw):
        two = fn(ds, args.delta, level=level, side="two", **kw)
        one = fn(ds, args.delta, level=level, side="left", **kw)
        rows.append(_Row(label, two.estimate, two.interval, one.interval))
        return two.notes

    notes = []
    if "midrank" in methods:
        add("Midrank (binomial)", baselines.midrank, ci="clopper-pearson")
        add("Midrank (Wald)", baselines.midrank, ci="wald")
    if "km" in methods:
        notes.extend(add("KM (loglog)", baselines.km_ratio,
                         transform="cloglog"))
    if "vonhoff" in methods:
        add("Von Hoff (binomial)", baselines.von_hoff)
    return rows, notes


def _rmst_rows(ds, args):
    cfg = rmst.RmstConfig(tau=args.tau, alpha=args.alpha)
    results = [rmst.asymptotic_inference(ds, cfg)]
    if args.resampling == "perm":
        results.append(rmst.permutation_inference(
            ds, cfg, args.B, np.random.default_rng([args.seed, 3])))
    elif args.resampling == "boot":
        results.append(rmst.bootstrap_inference(
            ds, cfg, args.B, np.random.default_rng([args.seed, 4])))
    tag = {"gauss": "Gauss", "permutation": "perm", "bootstrap": "boot"}
    rows, notes = [], []
    for res in results:
        t = tag[res.quantile_source]
        rows.append(_Row(f"RMST-Diff ({t})", res.diff_hat,
                         res.diff_ci_two_sided, res.diff_ci_lower_one_sided,
                         res.quantile_source))
    for res in results:
        t = tag[res.quantile_source]
        rows.append(_Row(f"RMST-Ratio ({t})", res.ratio_hat,
                         res.rat_ci_two_sided, res.rat_ci_lower_one_sided,
                         res.quantile_source))
        notes.extend(res.diagnostics)
    return rows, notes


def _fmt(v):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.3f}"


def _fmt_interval(ci):
    close = ")" if math.isinf(ci[1]) else "]"
    return f"[{_fmt(ci[0])}, {_fmt(ci[1])}{close}"


def render_table(tables, alpha):
    pct = f"{100 * (1 - alpha):g}%"
    header = ("Method (CI type)", "Estimate", f"{pct} CI (two-sided)",
              f"{pct} CI (one-sided)")
    blocks = []
    for rows in tables:
        if not rows:
            continue
        body = [(r.label, _fmt(r.estimate), _fmt_interval(r.two),
                 _fmt_interval(r.one)) for r in rows]
        widths = [max(len(line[i]) for line in [header] + body)
                  for i in range(4)]
        lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                           for i, (c, w) in enumerate(zip(line, widths)))
                 for line in [header] + body]
        rule = "-" * len(lines[0])
        blocks.append("\n".join([rule, lines[0], rule] + lines[1:] + [rule]))
    return "\n\n".join(blocks) + "\n"


def _json_number(v):
    return None if math.isinf(v) else v


def render_json(tables, settings, warnings):
    rows = [{"method": r.label, "estimate": r.estimate,
             "ci_two_sided": [_json_number(v) for v in r.two],
             "ci_one_sided": [_json_number(v) for v in r.one],
             "quantile_source": r.source}
            for rows in tables for r in rows]
    return json.dumps({"settings": settings, "rows": rows,
                       "warnings": warnings}, indent=2) + "\n"


def render_csv(tables):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "estimate", "two_sided_lower",
                     "two_sided_upper", "one_sided_lower", "one_sided_upper"])
    for rows in tables:
        for r in rows:
            writer.writerow([r.label, repr(r.estimate), *map(repr, r.two),
                             *map(repr, r.one)])
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_methods(text, allowed):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    unknown = set(methods) - set(allowed)
    if unknown:
        raise ScenarioError(f"unknown methods {sorted(unknown)}; "
                            f"choose from {', '.join(allowed)}")
    return methods


def cmd_analyze(args):
    path = args.input
    if path is None:
        path = str(example_path())
        if args.tau1 is None:
            args.tau1 = EXAMPLE_TAU1
    if args.tau1 is None:
        raise DataError("--tau1 is required")
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    ds = load_csv(path)
    methods = _parse_methods(args.methods, ANALYZE_METHODS)
    if args.tau is None:
        args.tau = args.tau1
    warnings = validate(ds, delta=args.delta)

    tables = [[], []]
    if "rte" in methods:
        rows, notes = _rte_rows(ds, args)
        tables[0].extend(rows)
        warnings += notes
    rows, notes = _baseline_rows(ds, args, methods)
    tables[0].extend(rows)
    warnings += notes
    if "rmst" in methods:
        rows, notes = _rmst_rows(ds, args)
        tables[1].extend(rows)
        warnings += notes

    settings = {"input": path, "n": ds.n, "delta": args.delta,
                "tau1": args.tau1,
                "tau2": args.tau2 if args.tau2 is not None
                else args.delta * args.tau1,
                "tau": args.tau, "alpha": args.alpha,
                "resampling": args.resampling, "B": args.B, "seed": args.seed}
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.format == "json":
        text = render_json(tables, settings, warnings)
    elif args.format == "csv":
        text = render_csv(tables)
    else:
        text = render_table(tables, args.alpha)
    _emit(text, args.out)
    return EXIT_OK


def _scenarios(args, methods=None):
    if args.full_grid:
        return harness.full_grid(methods)
    if args.scenario is None:
        raise ScenarioError("--scenario (preset name or JSON file) is required")
    if args.scenario in simgen.PRESETS:
        kw = dict(nu=args.nu, n=args.n, censoring=args.censoring,
                  delta=args.delta if args.delta is not None else 1.0)
        if args.tau1 is not None:
            kw["tau1"] = args.tau1
        if args.tau2 is not None:
            kw["tau2"] = args.tau2
        if methods:
            kw["methods"] = methods
        return [simgen.preset(args.scenario, **kw)]
    if not os.path.exists(args.scenario):
        raise ScenarioError(f"scenario not found: {args.scenario} (expected "
                            f"a preset {sorted(simgen.PRESETS)} or a JSON file)")
    scn = simgen.load_scenario(args.scenario)
    if methods:
        scn = simgen.with_updates(scn, methods=tuple(methods))
    return [scn]


def cmd_simulate(args):
    methods = (_parse_methods(args.methods, simgen.METHODS)
               if args.methods else None)
    scenarios = _scenarios(args, methods)
    n_sim = args.nsim if args.nsim is not None else harness.DESK_N_SIM
    B = args.B if args.B is not None else harness.DESK_B
    results = harness.run_grid(scenarios, n_sim, B, args.seed, args.workers,
                               band_conf=args.band_conf)
    out = args.out or "coverage.csv"
    harness.emit_report(results, out, scenarios, seed=args.seed, B=B,
                        n_sim=n_sim, extra={"band_conf": args.band_conf})
    for r in results:
        flag = "ok" if r.within_band else "OUT"
        print(f"{r.scenario_id}  {r.method:<18} {r.side:<5} "
              f"{100 * r.coverage:5.1f}%  band [{r.band_lo}, {r.band_hi}]  "
              f"{flag}" + (f"  failures={r.failures}" if r.failures else ""))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_truth(args):
    for scn in _scenarios(args):
        theta = simgen.true_theta(scn, args.N,
                                  np.random.default_rng([args.seed, 1, 0]))
        exceed = simgen.true_exceedance(
            scn, args.N, np.random.default_rng([args.seed, 1, 1]))
        p = scn.params
        mu1 = simgen.true_rmst(p.theta1, p.gamma1, scn.tau1)
        mu2 = simgen.true_rmst(p.theta2, p.gamma2, scn.tau2)
        print(f"scenario            {scn.id}")
        print(f"theta               {theta:.5f}   (N = {args.N})")
        print(f"P(T2 > delta T1)    {exceed:.5f}")
        print(f"RMST1 (tau1={scn.tau1:g})   {mu1:.5f}")
        print(f"RMST2 (tau2={scn.tau2:g})   {mu2:.5f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pairedsurv",
        description="Effect measures for paired event times with a "
                    "right-censored second time.")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyse a paired data set")
    a.add_argument("--input", help="CSV with columns id,t1[,delta1],y2,delta2 "
                                   "(default: bundled synthetic example)")
    a.add_argument("--delta", type=float, default=1.0)
    a.add_argument("--tau1", type=float)
    a.add_argument("--tau2", type=float,
                   help="horizon of the second time (default delta * tau1)")
    a.add_argument("--tau", type=float, help="RMST horizon (default tau1)")
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--methods", default=",".join(ANALYZE_METHODS),
                   help="comma-separated subset of " + ",".join(ANALYZE_METHODS))
    a.add_argument("--resampling", choices=("gauss", "perm", "boot"),
                   default="perm")
    a.add_argument("--B", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--format", choices=("table", "csv", "json"),
                   default="table")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    def scenario_args(p):
        p.add_argument("--scenario",
                       help="preset (equal, prophaz, nonprophaz) or JSON file")
        p.add_argument("--nu", type=float, default=1.0)
        p.add_argument("--n", type=int, default=100)
        p.add_argument("--censoring", default="none",
                       help="none, exp0.5, exp1, ...")
        p.add_argument("--delta", type=float)
        p.add_argument("--tau1", type=float)
        p.add_argument("--tau2", type=float)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--full-grid", action="store_true",
                       help="every preset x n x nu x censoring x delta")

    s = sub.add_parser("simulate", help="Monte Carlo coverage study")
    scenario_args(s)
    s.add_argument("--nsim", type=int, help=f"default {harness.DESK_N_SIM}")
    s.add_argument("--B", type=int, help=f"default {harness.DESK_B}")
    s.add_argument("--methods", help="comma-separated method identifiers")
    s.add_argument("--workers", type=int,
                   help="worker processes (default: CPU count, capped by "
                        "PAIRED_SURV_THREADS)")
    s.add_argument("--band-conf", type=float, default=harness.DESK_BAND_CONF)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("truth", help="true parameter values of a scenario")
    scenario_args(t)
    t.add_argument("--N", type=int, default=harness.TRUTH_N)
    t.set_defaults(func=cmd_truth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateVarianceError, PositivityError,
            RatioUndefinedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DataError, ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
