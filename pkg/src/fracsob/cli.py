"""Command-line entry point.

    fracsob sweep --config demo.json --out results/
    fracsob solve --p 2 --config tiny3.json
    fracsob selftest

Exit codes: 0 success, 1 config or usage error, 2 solver non-convergence,
3 audit or self-test violation.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys

import numpy as np

from .extremal import InvalidInitError, solve_extremal
from .limit import minimize_holder_quotient
from .nonlocal_ops import SeminormParams, holder_seminorm
from .sweep import (
    ConfigError,
    SweepError,
    audit_inequalities,
    load_config,
    run_p_sweep,
    write_csv,
    write_json,
)
from .weights import DegenerateLevelError, build_xi, k_eps, log_geometric_mean, omega_distribution

log = logging.getLogger("fracsob")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded BLAS, fixed reduction order")
    common.add_argument("--seed", type=int, help="seed for random audit fields")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fracsob", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("xi", parents=[common], help="build the admissible function xi")
    solve = sub.add_parser("solve", parents=[common], help="solve the extremal problem at one p")
    solve.add_argument("--p", type=float, required=True)
    sub.add_parser("sweep", parents=[common], help="warm-started sweep over p_list")
    sub.add_parser("limit", parents=[common], help="minimize the Hoelder quotient")
    sub.add_parser("audit", parents=[common], help="sweep, then audit the inequalities")
    sub.add_parser("selftest", parents=[common], help="compare against the reference oracles")
    return parser


def _config(args):
    if not args.config:
        raise ConfigError(f"{args.command} needs --config")
    cfg = load_config(args.config)
    if args.out:
        cfg.output = {**cfg.output, "dir": args.out}
    if args.seed is not None:
        cfg.seed = args.seed
    if args.deterministic:
        cfg.deterministic = True
    os.makedirs(cfg.output.get("dir", "."), exist_ok=True)
    return cfg


def _emit(data, path):
    write_json(data, path)
    print(json.dumps(data, sort_keys=True))


def cmd_xi(args):
    cfg = _config(args)
    d, w = cfg.build()
    xc = build_xi(w, d.delta, d, int(cfg.xi.get("n_max", 60)))
    eps = float(cfg.xi.get("eps", 0.25 * d.inradius))
    top = float(np.max(d.delta))
    ts = np.linspace(0.0, top, 11)
    coords = d.interior
    with open(cfg.output_path("xi_csv", "xi.csv"), "w") as fh:
        cols = ["x", "y"][: d.dim] + ["delta", "xi"]
        fh.write(",".join(cols) + "\n")
        for row in np.column_stack((coords, d.delta, xc.xi)):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _emit({
        "levels": list(xc.levels),
        "truncated": xc.truncated,
        "scale_k": xc.scale_k,
        "log_k_xi": log_geometric_mean(xc.xi, w),
        "sigma_samples": [[float(t), omega_distribution(w, d.delta, float(t))] for t in ts],
        "eps": eps,
        "K_eps": k_eps(w, d, eps),
    }, cfg.output_path("xi_json", "xi.json"))
    return EXIT_OK


def cmd_solve(args):
    cfg = _config(args)
    d, w = cfg.build()
    prm = SeminormParams(cfg.s, args.p)
    sol = solve_extremal(d, w, prm, cfg.extremal_options())
    _emit({
        "p": sol.p,
        "log_lambda": sol.log_lambda,
        "lambda_root": sol.lambda_root,
        "holder_of_up": holder_seminorm(sol.u_p, d, cfg.s).value,
        "el_residual": sol.el_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "degenerate": sol.degenerate,
        "u_p": sol.u_p.tolist(),
    }, cfg.output_path("solve_json", f"solve_p{args.p:g}.json"))
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_limit(args):
    cfg = _config(args)
    d, w = cfg.build()
    init = cfg.limit.get("init", "u_p_final")
    if init == "u_p_final":
        prm = SeminormParams(cfg.s, cfg.p_list[-1])
        init = solve_extremal(d, w, prm, cfg.extremal_options()).u_p
    lim = minimize_holder_quotient(d, w, cfg.s, init, cfg.limit_options())
    _emit({
        "mu": lim.mu,
        "mu_lower_bound": 1.0 / float(np.sum(d.delta**cfg.s * w.quad)),
        "residual_minus_sup": lim.residual_minus_sup,
        "sup_check_max": lim.sup_check_max,
        "min_v": float(np.min(lim.v)),
        "q_ladder_trace": [list(t) for t in lim.q_ladder_trace],
        "converged": lim.converged,
    }, cfg.output_path("limit_json", "limit.json"))
    return EXIT_OK if lim.converged else EXIT_NONCONVERGED


def _sweep(cfg):
    sweep = run_p_sweep(cfg)
    write_csv(sweep.records, cfg.output_path("csv", "sweep.csv"))
    ok = all(r.converged for r in sweep.records) and sweep.limit.converged
    return sweep, ok


def cmd_sweep(args):
    cfg = _config(args)
    sweep, ok = _sweep(cfg)
    write_json(sweep.summary(), cfg.output_path("json", "summary.json"))
    for r in sweep.records:
        flag = "" if r.converged else "  (not converged)"
        print(f"p={r.p:g}  lambda_root={r.lambda_root:.8g}  holder={r.holder_of_up:.8g}  "
              f"el_residual={r.el_residual:.2e}{flag}")
    print(f"mu={sweep.limit.mu:.10g}  k_last={sweep.k_last:.10g}  proxy_dist={sweep.proxy_distance:.3e}")
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_audit(args):
    cfg = _config(args)
    sweep, ok = _sweep(cfg)
    report = audit_inequalities(cfg, sweep)
    summary = sweep.summary()
    summary["violations"] = report.violations()
    summary["audit_passed"] = report.passed
    write_json(summary, cfg.output_path("json", "summary.json"))
    for name, c in report.checks.items():
        print(f"{'ok  ' if c.passed else 'FAIL'} {name}: max violation {c.max_violation:.3e} "
              f"(tolerance {c.tolerance:.3e}, {c.count} fields)")
    if not report.passed:
        return EXIT_VIOLATION
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest()
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(r[1] for r in results) else EXIT_VIOLATION


COMMANDS = {
    "xi": cmd_xi,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "limit": cmd_limit,
    "audit": cmd_audit,
    "selftest": cmd_selftest,
}


def _thread_guard(deterministic):
    # FRACSOB_THREADS caps BLAS threads; deterministic mode always uses one
    limit = 1 if deterministic else os.environ.get("FRACSOB_THREADS")
    if limit is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(limit))


def run_command(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_guard(args.deterministic):
            return COMMANDS[args.command](args)
    except (ConfigError, InvalidInitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SweepError, DegenerateLevelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
