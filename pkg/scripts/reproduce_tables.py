"""Rerun the built-in price tables and write comparison CSVs.

Usage: python3 scripts/reproduce_tables.py [--out results] [t1 t2 t3]
"""

import argparse
import sys
from pathlib import Path

from mgbarrier.cli import main


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("tables", nargs="*", default=["t1", "t2", "t3"])
    p.add_argument("--out", default="results")
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for t in args.tables:
        print(f"== {t}")
        worst = max(worst, main(["reproduce", t, "--out", str(out / f"{t}.csv")]))
    return worst


if __name__ == "__main__":
    sys.exit(run())
