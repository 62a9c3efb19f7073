"""Sweep the electrolyser heat efficiency on the linked case and write CSV.

    python3 scripts/sweep_heat_efficiency.py [--out sweep.csv] [--num 11]

Gas output falls and heat output rises linearly with eta_h, while the
electrical input stays put. The sweep starts above zero because at
eta_h = 0 no heat is delivered and the heat network has no flow to solve for.
"""
import argparse
import csv
import sys

import numpy as np

from mcflow.cli import sweep_rows
from mcflow.documents import load_fixture

COLUMNS = ["P[0e-0c]", "q[0c-0g]", "dphi[0c-0h]", "m[0c-0h]", "T_s[1h]", "T_r[0c-0h]"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV path (stdout if omitted)")
    ap.add_argument("--num", type=int, default=11)
    args = ap.parse_args(argv)

    scenario = load_fixture("fig4_known_eff")
    header, rows = sweep_rows(scenario, "eta_h", np.linspace(0.05, 0.5, args.num), COLUMNS)
    with (open(args.out, "w", newline="") if args.out else sys.stdout) as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


if __name__ == "__main__":
    main()
