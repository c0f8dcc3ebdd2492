"""Reproduce the fault-clearing table for the reference test case.

    python scripts/table1.py [--out results/table1]
"""

import argparse
import sys

from pllgss.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/table1")
    args = ap.parse_args()
    sys.exit(main(["fault", "--table1", "--out", args.out]))
