"""Command line: ``kpzlab run``, ``kpzlab list`` and ``kpzlab verify-all``."""

import argparse
import sys
import time

from ..errors import DomainError, ParameterError
from .config import OUT_ENV, output_dir, read_config, split_run_keys
from .experiments import (TIERS, execute, experiment_record, format_criterion, hard_failures, load_catalog,
                          lookup, params_for, write_manifest, write_outputs)


def _run_one(name, params, seed, workers, tier, out, timing):
    start = time.perf_counter()
    outcome, ctx = execute(name, params, seed, workers, tier)
    wall = time.perf_counter() - start if timing else None
    write_outputs(out, name, outcome)
    return experiment_record(name, params, outcome, ctx, wall)


def _report(records):
    for name, rec in records.items():
        if not rec["criteria"]:
            print(f"PASS [vacuous] {name}: no draws")
        for c in rec["criteria"]:
            print(format_criterion(name, c))
    failed = hard_failures(records)
    print(f"{len(failed)} hard criteria failed" if failed else "all hard criteria passed")
    return 1 if failed else 0


def cmd_run(args):
    exp = lookup(args.experiment)
    cfg = read_config(args.config) if args.config else {}
    run, overrides = split_run_keys(cfg)
    if args.draws is not None:
        if "draws" not in exp.defaults:
            raise DomainError(f"experiment {exp.name!r} has no draws parameter")
        overrides["draws"] = args.draws
    params = params_for(exp.name, args.tier, overrides)
    if params.get("draws", 0) < 0:
        raise DomainError("draws must be non-negative")
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    workers = args.workers if args.workers is not None else int(run.get("workers", 1))
    out = output_dir(args.out)
    records = {exp.name: _run_one(exp.name, params, seed, workers, args.tier, out, args.timing)}
    write_manifest(out, seed, records, args.tier)
    return _report(records)


def cmd_list(args):
    from .catalog import ORDER
    for name in ORDER:
        print(f"{name:22s} {lookup(name).about}")
    return 0


def cmd_verify_all(args):
    from .catalog import ORDER
    out = output_dir(args.out)
    records = {}
    for name in ORDER:
        records[name] = _run_one(name, params_for(name, args.tier), args.seed, args.workers, args.tier, out,
                                 args.timing)
    write_manifest(out, args.seed, records, args.tier)
    return _report(records)


def build_parser():
    p = argparse.ArgumentParser(prog="kpzlab", description="Brownian LPP, line ensemble and jump ensemble experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./out)")
        sp.add_argument("--timing", action="store_true", help="record wall times in the manifest")

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment")
    r.add_argument("--config", help="flat key = value parameter file")
    r.add_argument("--seed", type=int)
    r.add_argument("--draws", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--tier", choices=TIERS, default="full")
    common(r)
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list", help="list registered experiments")
    ls.set_defaults(func=cmd_list)

    v = sub.add_parser("verify-all", help="run every experiment and one manifest")
    v.add_argument("--tier", choices=TIERS, default="fast")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=1)
    common(v)
    v.set_defaults(func=cmd_verify_all)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    load_catalog()
    try:
        return args.func(args)
    except (DomainError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
