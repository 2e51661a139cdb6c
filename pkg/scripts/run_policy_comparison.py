#!/usr/bin/env python3
"""Paired-seed comparison of distributed learning vs random access on the
shipped 9-user configuration. Writes comparison CSVs under out/comparison.

Usage: python3 scripts/run_policy_comparison.py [--config PATH] [--seed N]
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
    ap.add_argument("--out", default="out/comparison")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    sys.exit(cli_main([
        "compare", args.config,
        "--seed", str(args.seed), "--out", args.out, "--jobs", str(args.jobs),
    ]))
