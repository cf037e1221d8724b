#!/usr/bin/env python3
"""Zero-hopping lobe boundaries swept along one model parameter.

Prints (and optionally writes) the chemical potentials at which the
on-site ground state switches between integer excitation sectors, as a
function of delta1, delta2, omega or g.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from nvlattice.equilibrium import lobe_boundaries
from nvlattice.qspace import ModelParams

AXES = ("delta1", "delta2", "omega", "g")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--axis", choices=AXES, default="delta1")
    ap.add_argument("--range", nargs=2, type=float, default=(0.5, 8.0))
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--n-list", nargs="+", type=int, default=[0, 1, 2, 3])
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = []
    for value in np.linspace(*args.range, args.count):
        kwargs = {args.axis: float(value)}
        if args.axis == "g" and value <= 0:
            kwargs["g"] = 1e-12
        params = ModelParams(**kwargs)
        for b in lobe_boundaries(params, args.n_list):
            rows.append([float(value), b.charge_low, b.mu_boundary])

    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["axis_value", "N", "mu_boundary"])
            w.writerows(rows)
        print(f"wrote {path} ({len(rows)} rows)")
    else:
        print(f"{'axis_value':>12} {'N':>3} {'mu_boundary':>14}")
        for value, charge, mu in rows:
            print(f"{value:12.5f} {charge:3d} {mu:14.8f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
