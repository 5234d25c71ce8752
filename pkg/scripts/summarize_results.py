"""Print compact tables from CSV files written by the experiment runner.

CRB tables are pivoted to one line per (regime, clutter mode, parameter);
SE tables report the mean sum SE of every (series, sweep value) cell.
"""

import csv
import sys
from collections import defaultdict

import numpy as np


def summarize(path: str) -> None:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return
    print(f"# {path}")
    if "crb_value" in rows[0]:
        curves = defaultdict(list)
        for r in rows:
            curves[(r["regime"], r["clutter_mode"], r["parameter_name"])].append(
                (float(r["sweep_variable"]), float(r["crb_value"])))
        for key, pts in curves.items():
            print(" ".join(key), " ".join(f"{x:g}:{y:.3g}" for x, y in pts))
    elif "sum_se_bits_per_hz" in rows[0]:
        cells = defaultdict(list)
        for r in rows:
            cells[(r["series"], r["sweep_variable"])].append(float(r["sum_se_bits_per_hz"]))
        for (series, value), xs in cells.items():
            print(f"series {series} value {value}: mean sum SE {np.mean(xs):.4f} (n={len(xs)})")


if __name__ == "__main__":
    for p in sys.argv[1:]:
        summarize(p)
