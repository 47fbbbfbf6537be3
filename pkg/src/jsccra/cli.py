"""Command-line front end: generate scenarios, solve one drop, compare methods, run sweeps.

Machine-readable output goes to stdout; logs and errors go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .baselines import BASE_METHODS, Allocator, parse_method
from .capacity import save_allocation
from .errors import ConfigError, DomainError, ModelError, NotConverged, RoundingFailed, SchemaError
from .experiments import emit_csv, load_spec, run_sweep
from .psnr_model import load_model
from .scenario import SystemConfig, generate_scenario, load_config, load_scenario, save_scenario

log = logging.getLogger("jsccra")

# Failures that are the user's input or a solver giving up, reported without a traceback.
EXPECTED_ERRORS = (ConfigError, SchemaError, ModelError, DomainError, NotConverged,
                   RoundingFailed, OSError)


def cmd_generate(args):
    config = load_config(args.config) if args.config else SystemConfig()
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    scenario = generate_scenario(config)
    save_scenario(scenario, args.out)
    log.info("wrote %d users to %s", config.num_users, args.out)


def _load_inputs(args):
    scenario = load_scenario(args.scenario)
    if args.budget is not None:
        scenario = scenario.with_config(bs_power_w=args.budget)
    return scenario, load_model(args.model)


def cmd_solve(args):
    parse_method(args.method)
    scenario, model = _load_inputs(args)
    result = Allocator(scenario, model, args.backend, args.seed).run(args.method)
    print(f"J*={result.J_star} power={result.total_power_w!r}")
    if args.out:
        save_allocation(result, args.out)
        log.info("wrote allocation to %s", args.out)


def cmd_compare(args):
    methods = args.methods or list(BASE_METHODS)
    for m in methods:
        parse_method(m)
    scenario, model = _load_inputs(args)
    allocator = Allocator(scenario, model, args.backend, args.seed)
    for m in methods:
        result = allocator.run(m)
        print(f"{m} J*={result.J_star} power={result.total_power_w!r}")


def cmd_sweep(args):
    spec = load_spec(args.spec)
    result = run_sweep(spec, workers=args.workers)
    emit_csv(result, args.out)
    log.info("wrote %d rows to %s", len(result.rows), args.out)


def _add_solve_inputs(p):
    p.add_argument("--scenario", required=True, help="scenario JSON from 'generate'")
    p.add_argument("--model", default=None,
                   help="PSNR table CSV (default: the shipped synthetic table)")
    p.add_argument("--backend", choices=("flow", "lp"), default="flow")
    p.add_argument("--seed", type=int, default=0, help="pairing seed for random/uniform")
    p.add_argument("--budget", type=float, default=None, help="override the BS power in watts")


def build_parser():
    parser = argparse.ArgumentParser(prog="jsccra", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a scenario")
    p.add_argument("--config", default=None, help="system config JSON (default: built-in)")
    p.add_argument("--seed", type=int, default=None, help="override the config's rng_seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="allocate one scenario with one method")
    _add_solve_inputs(p)
    p.add_argument("--method", default="optimal",
                   help=f"one of {', '.join(BASE_METHODS)} or fixed-cr:<ratio>")
    p.add_argument("--out", default=None, help="write the allocation JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run several methods on one scenario")
    _add_solve_inputs(p)
    p.add_argument("--methods", nargs="+", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="Monte Carlo sweep from a spec file, written as CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $JSCCRA_WORKERS or 1)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except EXPECTED_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0
