"""Command-line front end.

Subcommands: ``converge``, ``search``, ``bounds``, ``sphere``, ``kh-check``
(all take ``--config``), and ``plot`` (CSV in, SVG out).  Exit codes:
0 success, 2 config error, 3 numerical-certificate failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import CertificateError, ConfigError, SchemaError, ToleranceError
from .experiments import run_experiment
from .plotting import emit_plot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcqmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("converge", "search", "bounds", "sphere", "kh-check"):
        p = sub.add_parser(name, help=f"run the {name} experiment from a config file")
        p.add_argument("--config", required=True, help="experiment config (INI)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0 = auto); results are identical regardless")
    p = sub.add_parser("plot", help="render an experiment CSV as a deterministic SVG")
    p.add_argument("csv", help="input CSV produced by an experiment run")
    p.add_argument("--kind", choices=("loglog", "bracket"), default="loglog")
    p.add_argument("--out", required=True, help="output SVG path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            out = emit_plot(args.csv, args.kind, args.out)
            print(out)
            return EXIT_OK
        cfg = load_config(args.config, seed_override=args.seed)
        expected = args.command if args.command != "kh-check" else "kh-check"
        if cfg.kind != expected:
            raise ConfigError(
                f"config declares kind = {cfg.kind!r} but the {args.command!r} subcommand was invoked"
            )
        threads = args.threads if args.threads > 0 else 1
        out = run_experiment(cfg, args.out, threads=threads)
        print(out)
        return EXIT_OK
    except (ConfigError, SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CertificateError, ToleranceError) as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
