"""Command-line harness.

    pdem run <scenario-file> [--out DIR] [--overwrite] [--grid-scale F]
    pdem check-all [DIR] [--out DIR] [--overwrite] [--grid-scale F]

Exit status: 0 when every requested check passes, 1 when a check fails,
2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from .errors import ConfigError, PDEMError
from .runner import OUT_ENV, run_scenario
from .scenario import load

log = logging.getLogger("pdem")


def bundled_scenarios() -> Path:
    return Path(str(resources.files("pdem") / "scenarios"))


def _run_one(path, args) -> int:
    try:
        s = load(path)
        if args.grid_scale != 1.0:
            s = s.scaled(args.grid_scale)
    except ConfigError as exc:
        print(f"{path}: config error: {exc}", file=sys.stderr)
        return 2
    try:
        result, written = run_scenario(s, out=args.out, overwrite=args.overwrite)
    except FileExistsError as exc:
        print(f"{s.name}: {exc}", file=sys.stderr)
        return 2
    except PDEMError as exc:
        print(f"{s.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    status = "PASS" if result.passed else f"FAIL (first failing check: {result.first_failure})"
    print(f"{s.name}: {status}")
    for p in written:
        print(f"  wrote {p}")
    return 0 if result.passed else 1


def cmd_run(args) -> int:
    return _run_one(args.scenario, args)


def cmd_check_all(args) -> int:
    d = Path(args.directory) if args.directory else bundled_scenarios()
    files = sorted(d.glob("*.cfg"))
    if not files:
        print(f"no *.cfg scenarios in {d}", file=sys.stderr)
        return 2
    codes = [_run_one(f, args) for f in files]
    passed = sum(c == 0 for c in codes)
    print(f"{passed}/{len(codes)} scenarios passed")
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdem",
        description="Position-dependent-mass so(2,1) potentials: scenario runner and verifier.",
        epilog=f"Default output directory: ${OUT_ENV}, else ./pdem_out.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log each check")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory (overrides config and env)")
        p.add_argument("--overwrite", action="store_true", help="replace existing artifact files")
        p.add_argument("--grid-scale", type=float, default=1.0,
                       help="multiply the number of grid intervals by F")

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_all = sub.add_parser("check-all", help="run every *.cfg in a directory (default: bundled)")
    p_all.add_argument("directory", nargs="?", default=None)
    common(p_all)
    p_all.set_defaults(func=cmd_check_all)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.grid_scale <= 0:
        print("--grid-scale must be positive", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
