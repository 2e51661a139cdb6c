#!/usr/bin/env python3
"""Welfare-vs-temperature sweep on the shipped 9-user configuration.
Writes gamma_sweep.csv under out/sweep.

Usage: python3 scripts/run_gamma_sweep.py [--config PATH] [--seed N]
"""

import argparse
import sys
from pathlib import Path

from specaccess.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "learning_9user.json"))
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    sys.exit(cli_main([
        "gamma-sweep", args.config,
        "--seed", str(args.seed), "--out", args.out, "--jobs", str(args.jobs),
    ]))
