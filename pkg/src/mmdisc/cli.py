"""Command line entry point.

Exit codes: 0 on success, 2 when an experiment's assertion fails, 1 on error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, UnsupportedCombinationError
from .experiments import ExperimentConfig, emit_report, load_config, run_experiment
from .partition import build_partition
from .sampling import derive_rng, iid, jittered, lattice, write_pointset
from .space import Space

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

_SUBCOMMAND_KIND = {
    "scaling": "scaling",
    "linf-scaling": "linf-scaling",
    "mz-check": "mz",
    "apriori": "apriori",
    "conditions": "conditions",
    "partition-audit": "partition-audit",
}


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _strings(text):
    return tuple(v.strip() for v in text.split(","))


def _common(parser):
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--out", default=None, help="report path (stdout summary if omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mmdisc", description="Discrepancy experiments on normalized metric measure spaces."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMAND_KIND:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        _common(p)
        p.add_argument("--config", default=None, help="JSON or YAML experiment file; flags override it")
        p.add_argument("--space", default=None, help="e.g. circle, sphere:2, torus:2 (comma list allowed)")
        p.add_argument("--measure", default=None, help="lebesgue, sincap or dirac:R0")
        p.add_argument("--sampler", choices=("jittered", "iid", "lattice"), default=None)
        p.add_argument("--N", dest="N", type=_ints, default=None, help="comma separated point counts")
        p.add_argument("--p", dest="p", type=_floats, default=None, help="comma separated exponents")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--n-q", dest="n_q", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--n-centers", dest="n_centers", type=int, default=None)
        p.add_argument("--m-schedule", dest="m_schedule", type=_strings, default=None)
        p.add_argument("--n-configs", dest="n_configs", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
    g = sub.add_parser("generate", help="write a point set as CSV")
    _common(g)
    g.add_argument("--space", required=True)
    g.add_argument("--sampler", choices=("jittered", "iid", "lattice"), default="jittered")
    g.add_argument("--N", dest="N", type=int, required=True)
    return parser


_OVERRIDES = (
    "space", "measure", "sampler", "N", "p", "trials", "n_q", "seed",
    "tolerance", "n_centers", "m_schedule", "n_configs", "workers",
)


def config_from_args(args):
    base = load_config(args.config).to_dict() if args.config else {}
    base["kind"] = _SUBCOMMAND_KIND[args.command]
    for name in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    return ExperimentConfig.from_dict(base)


def _generate(args):
    space = Space.parse(args.space)
    seed = 0 if args.seed is None else args.seed
    rng = derive_rng(seed, 0)
    if args.sampler == "jittered":
        pts = jittered(build_partition(space, args.N), rng, seed=seed)
    elif args.sampler == "iid":
        pts = iid(space, args.N, rng, seed=seed)
    else:
        pts = lattice(space, args.N)
    write_pointset(pts, args.out if args.out else sys.stdout)
    return EXIT_OK


def _experiment(args):
    config = config_from_args(args)
    config.out = None
    csv_path = args.out if args.out and args.format == "csv" else None
    report = run_experiment(config, csv_path=csv_path)
    if args.out and args.format == "json":
        emit_report(report, args.out, "json")
    if not args.out:
        print(json.dumps({"passed": report.passed, **report.summary}, sort_keys=True, indent=2, default=str))
    if report.passed is False:
        print(f"{args.command}: assertion failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return _generate(args)
        return _experiment(args)
    except (ConfigError, UnsupportedCombinationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
