"""``spinlattice`` command-line entry point."""

from __future__ import annotations

import argparse
import dataclasses
import secrets
import sys

from .driver import Command, execute, load_config, print_error
from .errors import ParseError, ValidationError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spinlattice",
        description="Ising-model predictions, mean field and Monte Carlo on four lattices.",
    )
    p.add_argument("command", choices=[c.value for c in Command],
                   type=str.lower, help="what to run")
    p.add_argument("--config", required=True, help="key=value run configuration")
    p.add_argument("--out", help="CSV output path (a .meta.json sidecar is written next to it)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--entropy-seed", action="store_true",
                   help="draw the seed from the OS entropy pool")
    p.add_argument("--ungated", action="store_true",
                   help="evaluate Union Jack closed forms without the validity gates")
    p.add_argument("--points", type=int, help="override the number of temperatures")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, Command(args.command))
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.entropy_seed:
            changes["seed"] = secrets.randbits(64)
        if args.ungated:
            changes["gated"] = False
        if args.points is not None:
            if args.points < 2:
                raise ValidationError("points >= 2 violated")
            changes["points"] = args.points
        if "seed" in changes and not 0 <= changes["seed"] < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        cfg = dataclasses.replace(cfg, **changes)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    outcome = execute(cfg, args.out)
    if outcome.exit_code:
        print_error(outcome)
        return outcome.exit_code
    if cfg.command is Command.CLASSIFY or not args.out:
        sys.stdout.write(outcome.text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
