#!/usr/bin/env python3
"""Equilibrium mean-field phase diagram over the (mu, k) plane.

Writes phase_diagram.csv (+ meta.json) with psi, phase label, photon
statistics and the perturbative boundary overlay.  Equivalent to
`nvlattice phase-diagram`, exposed here with direct knobs for quick
experiments.
"""

import argparse
import sys

from nvlattice.cli import run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/phase_diagram")
    ap.add_argument("--config", default=None, help="key=value config file")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    argv = ["phase-diagram", "--out", args.out]
    if args.config:
        argv += ["--config", args.config]
    if args.workers:
        argv += ["--workers", str(args.workers)]
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
