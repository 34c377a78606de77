"""Command-line entry point: ``topofunnel <command> --config <path> [options]``.

Exit status: 0 ok, 1 usage or configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .pipeline import COMMANDS, EXIT_USAGE, run_pipeline


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2, which we reserve for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topofunnel", description="Reconstruct an AS-level topology and measure funnelling.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="INI configuration file")
    parser.add_argument("--target-time", help="capture instant, ISO 8601 UTC (overrides the config)")
    parser.add_argument("--country", nargs="+", metavar="ALPHA2", help="restrict analysis to these countries")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=_seed, help="layout seed")
    parser.add_argument("--strict", action="store_true", default=None,
                        help="fail when record-level errors exceed the configured budget")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config).with_overrides(
            target_time=args.target_time, countries=args.country, out_dir=args.out, seed=args.seed,
            strict=args.strict,
        )
    except (ConfigError, ValueError) as exc:
        print(f"topofunnel: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run_pipeline(cfg, args.command)


if __name__ == "__main__":
    sys.exit(main())
