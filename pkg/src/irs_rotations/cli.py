"""Command line entry point: ``irs-rotations {sumrate,ee,validate,geometry-dump}``.

Exit codes: 0 success, 1 failed validation checks, 2 configuration error,
3 numerical guard trip (search budget, degenerate spectrum, bracketing).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness

EXIT_OK = 0
EXIT_CHECKS = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; output is identical for any value")
    p = argparse.ArgumentParser(prog="irs-rotations", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sumrate", parents=[common], help="Monte Carlo sum-rate curves")
    sub.add_parser("ee", parents=[common], help="energy-efficiency optima per P_max")
    sub.add_parser("validate", parents=[common], help="closed-form oracle checks")
    sub.add_parser("geometry-dump", parents=[common], help="element positions and H1")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise harness.ConfigError("seed must be nonnegative")
        if args.threads < 1:
            raise harness.ConfigError("threads must be >= 1")
        cfg = harness.load_config(args.config, seed=args.seed)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with np.errstate(over="raise", invalid="raise"):
            if args.command == "sumrate":
                path = harness.write_sumrate(harness.run_sumrate(cfg, args.threads), args.out, args.format)
            elif args.command == "ee":
                path = harness.write_ee(harness.run_ee(cfg), args.out, args.format)
            elif args.command == "geometry-dump":
                path = ", ".join(harness.write_geometry(cfg, args.out, args.format))
            else:
                checks = harness.run_validation(cfg)
                for c in checks:
                    status = "PASS" if c.passed else "FAIL"
                    print(f"{status} {c.name}: {c.value:.3e} (threshold {c.threshold:.1e})")
                return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECKS
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
