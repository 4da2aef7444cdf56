#!/usr/bin/env python3
"""Run every shipped config through the CLI, one output directory per config.

The subcommand is the config file name up to the first underscore.
"""
import argparse
import sys
from pathlib import Path

from l1rates import cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs", help="parent output directory")
    args = ap.parse_args()
    failed = []
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        command = path.stem.split("_")[0]
        out = Path(args.out) / path.stem
        print(f"== {path.stem} ({command}) -> {out}")
        code = cli.main([command, "--config", str(path), "--out", str(out)])
        if code:
            failed.append((path.stem, code))
    for name, code in failed:
        print(f"{name}: exit code {code}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
