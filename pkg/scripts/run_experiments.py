"""Run experiment files through the CLI.

Usage: python scripts/run_experiments.py [--threads N] [FILE ...]
With no files, every experiment under experiments/ is run.
"""

import argparse
import sys
from pathlib import Path

from bistatic_crb.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("files", nargs="*")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()
    files = args.files or sorted(str(p) for p in (ROOT / "experiments").glob("*.toml"))
    status = 0
    for f in files:
        print(f"== {f}", flush=True)
        out = ROOT / "results" / (Path(f).stem + ".csv")
        rc = cli_main(["run", f, "--out", str(out), "--threads", str(args.threads)])
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
