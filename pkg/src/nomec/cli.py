"""Command line front end for the simulator.

Exit codes: 0 on success, 1 on bad arguments or config, 2 on runtime failure.
"""

import argparse
import sys

from .harness import (ExperimentSpec, HarnessError, emit, run_experiment,
                      summarize)
from .scenario import ConfigError, ScenarioConfig, load_config
from .schedulers import SCHEMES

_RANGE_VARS = {"task_size_range_bits"}
_INT_VARS = {"n_uds", "n_aps", "n_mecs", "rrbs_per_ap", "seed"}


def _parse_sweep(text: str):
    """Parse "var=v1,v2,..."; range-valued variables take lo:hi items."""
    if "=" not in text:
        raise ValueError("expected var=value[,value...]")
    var, _, values = text.partition("=")
    var = var.strip()
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not items:
        raise ValueError("sweep has no values")
    parsed = []
    for item in items:
        if var in _RANGE_VARS:
            lo, sep, hi = item.partition(":")
            if not sep:
                raise ValueError(f"{var} values must be lo:hi pairs, got {item!r}")
            parsed.append((float(lo), float(hi)))
        elif var in _INT_VARS:
            parsed.append(int(item))
        else:
            parsed.append(float(item))
    return var, tuple(parsed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Monte Carlo simulator for conflict-graph task offloading "
                    "in a NOMA-enabled multi-hop edge network.")
    parser.add_argument("--config", help="JSON file with scenario settings")
    parser.add_argument("--sweep", default=None, metavar="VAR=V1,V2,...",
                        help="sweep variable and values (default: n_uds at its "
                             "configured value)")
    parser.add_argument("--schemes", default=",".join(SCHEMES),
                        help=f"comma-separated subset of: {', '.join(SCHEMES)}")
    parser.add_argument("--trials", type=int, default=10,
                        help="Monte Carlo trials per sweep value")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", default="-",
                        help="output path, '-' for stdout (default)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--summary", action="store_true",
                        help="print per-(scheme, value) means to stderr")
    parser.add_argument("--workers", type=int, default=1,
                        help="process pool size for sweep values")
    parser.add_argument("--strict-cc2", action="store_true",
                        help="forbid any RRB index reuse across APs")
    parser.add_argument("--mwis-ordering", choices=("original", "modified"),
                        default="original",
                        help="greedy vertex ordering: plain or influence-scaled weights")
    parser.add_argument("--fallback-local", choices=("on", "off"), default="on",
                        help="process rejected offload groups locally (on) or "
                             "drop them (off)")
    parser.add_argument("--max-iters", type=int, default=5,
                        help="scheduling/allocation alternation limit")
    parser.add_argument("--timings", action="store_true",
                        help="record real wall times instead of 0.0")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                config = load_config(fh.read())
        else:
            config = ScenarioConfig()
        if args.sweep:
            sweep_var, sweep_values = _parse_sweep(args.sweep)
        else:
            sweep_var, sweep_values = "n_uds", (config.n_uds,)
        schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
        spec = ExperimentSpec(config=config, sweep_var=sweep_var,
                              sweep_values=sweep_values, schemes=schemes,
                              trials=args.trials, master_seed=args.seed,
                              strict_cc2=args.strict_cc2,
                              mwis_ordering=args.mwis_ordering,
                              fallback_local=args.fallback_local == "on",
                              max_iters=args.max_iters, timings=args.timings)
    except (ConfigError, HarnessError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        rows = run_experiment(spec, workers=max(1, args.workers))
        emit(rows, args.out, args.format)
        if args.summary:
            for line in summarize(rows):
                print(line, file=sys.stderr)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: unexpected failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
