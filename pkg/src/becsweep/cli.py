"""Command-line entry point for reproduction runs.

Subcommands:

- run:           execute a preset or a config file, write data + manifest
- check:         run, then compare headline metrics against the preset's
                 expected intervals (exit 4 on a miss)
- list-presets:  show every built-in parameter set with its provenance note
- dump-config:   print the fully resolved configuration

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 check
mode threshold miss.
"""

import argparse
import dataclasses
import json
import sys

import scipy.fft as sfft

from .errors import ConfigurationError, ConvergenceError, PropagationError
from .experiments import (PRESETS, apply_overrides, check, list_presets,
                          parse_config_text, run)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_MISS = 4


def _load_config(args):
    if args.preset and args.config:
        raise ConfigurationError("give either --preset or --config, not both")
    if args.preset:
        if args.preset not in PRESETS:
            known = ", ".join(sorted(PRESETS))
            raise ConfigurationError(f"unknown preset {args.preset!r}; known: {known}")
        cfg = PRESETS[args.preset].config
    elif args.config:
        with open(args.config) as fh:
            cfg = parse_config_text(fh.read())
    else:
        raise ConfigurationError("one of --preset or --config is required")
    if args.output:
        cfg = dataclasses.replace(cfg, output_dir=args.output)
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg.validate()


def _add_run_args(p):
    p.add_argument("--preset", help="built-in preset name")
    p.add_argument("--config", help="path to a key = value config file")
    p.add_argument("--output", help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=1,
                   help="FFT worker threads (default 1, deterministic either way)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="becsweep",
        description="Swept-well condensate excitation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "check"):
        p = sub.add_parser(name)
        _add_run_args(p)
    sub.add_parser("list-presets")
    p = sub.add_parser("dump-config")
    _add_run_args(p)
    args = parser.parse_args(argv)

    if args.command == "list-presets":
        for preset in list_presets():
            cfg = preset.config
            print(f"{preset.name}")
            print(f"    {preset.note}")
            print(f"    kind={cfg.kind} g={cfg.g} U0={cfg.U0} sigma={cfg.sigma}"
                  f" Omega={cfg.Omega} x0={cfg.x0_start}->{cfg.x0_end}"
                  f" speed={cfg.speed} passes={cfg.passes}")
        return 0

    try:
        cfg = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "dump-config":
        print(json.dumps(dataclasses.asdict(cfg), indent=2, sort_keys=True))
        return 0

    preset_name = args.preset if args.preset else None
    try:
        with sfft.set_workers(max(1, args.threads)):
            manifest = run(cfg, preset_name=preset_name)
    except (ConvergenceError, PropagationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    print(json.dumps(manifest["metrics"], indent=2, sort_keys=True))
    print(f"manifest: {cfg.output_dir}/{cfg.label or ''}/manifest.json"
          .replace("//", "/"))

    if args.command == "check":
        if not preset_name:
            print("check mode needs --preset (expected values live there)",
                  file=sys.stderr)
            return EXIT_VALIDATION
        misses = check(manifest, PRESETS[preset_name].expected)
        if misses:
            for miss in misses:
                print(f"check miss: {miss}", file=sys.stderr)
            return EXIT_CHECK_MISS
        print(f"check ok: all {len(PRESETS[preset_name].expected)} metrics in range")
    return 0


if __name__ == "__main__":
    sys.exit(main())
