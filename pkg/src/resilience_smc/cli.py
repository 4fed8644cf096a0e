"""Command-line experiment runner.

Results go to ``--out`` or, when it is omitted, to standard output. Progress
and diagnostics are written to standard error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .contract import ConfigError
from .harness import (PolicyConfig, _coerce, _replace_unchecked, config_from_mapping,
                      dumps_results, export_results, load_config, run_experiment)

log = logging.getLogger("resilience_smc")

EXIT_CONFIG = 2
EXIT_IO = 3


def _parse_sweep(text: str):
    if "=" not in text:
        raise ConfigError(f"--sweep: expected <field>=<v1,v2,...>, got {text!r}")
    name, values = text.split("=", 1)
    vals = [v for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError("--sweep: no values given")
    return name.strip(), [_coerce(name.strip(), v) for v in vals]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="resilience-smc",
        description="Estimate non-recovery probabilities of the delay-critical queue "
                    "with crude Monte Carlo or fixed-level splitting.")
    p.add_argument("--config", help="YAML experiment config (defaults apply when omitted)")
    p.add_argument("--method", choices=("mc", "smc"))
    p.add_argument("--seed", type=int, help="master seed (u64)")
    p.add_argument("--budget", type=float, help="total step budget C_T")
    p.add_argument("--sweep", help="sweep one field, e.g. lambda=0.6,0.65,0.7")
    p.add_argument("--out", help="output path (.csv or .json); standard output if omitted")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--replications", type=int)
    p.add_argument("--policy-count", type=int, help="size of the policy set (enables lookahead)")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")
    return p


def _apply_overrides(cfg, args):
    changes = {}
    if args.method is not None:
        changes["method"] = args.method
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.budget is not None:
        changes["c_t"] = _coerce("c_t", args.budget)
    if args.replications is not None:
        changes["replications"] = args.replications
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.sweep is not None:
        name, values = _parse_sweep(args.sweep)
        changes["sweep_field"] = name
        changes["sweep_values"] = tuple(values)
    if args.policy_count is not None:
        pol = cfg.policy or PolicyConfig()
        changes["policy"] = replace(pol, policy_count=args.policy_count)
    if not changes:
        return cfg
    cfg = _replace_unchecked(cfg, **changes)
    # re-run validation on the merged config
    return type(cfg)(**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config) if args.config else config_from_mapping({})
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    def progress(done, total):
        log.info("[%d/%d] points done", done, total)

    records = run_experiment(cfg, progress=progress)
    fmt = args.format
    try:
        if args.out:
            export_results(records, args.out, fmt)
            log.info("wrote %d records to %s", len(records), args.out)
        else:
            sys.stdout.write(dumps_results(records, fmt or "csv"))
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
