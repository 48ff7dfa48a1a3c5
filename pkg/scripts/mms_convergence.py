#!/usr/bin/env python3
"""Manufactured-solution convergence study.

Runs the h-refinement sweep (fixed degrees, refined meshes) and the
p-refinement sweep (fixed mesh, increasing degree) and writes one CSV
per sweep.  The p-sweep error is measured with over-integrated
quadrature so the reported error includes the between-node
interpolation error at every degree.
"""
import argparse
import csv
import time
from pathlib import Path

import numpy as np

from semwave.cli import mms_single
from semwave.newmark import NewmarkConfig


def h_sweep(out: Path) -> None:
    cfg = NewmarkConfig(dt=1e-4, t_final=0.05)
    with open(out / "mms_h_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "divisions", "ndof", "E2", "observed_order", "runtime_s"])
        for r in (1, 2, 3):
            prev = None
            for n in (4, 8, 16):
                t0 = time.perf_counter()
                err, ndof = mms_single(n, r, cfg)
                order = "" if prev is None else f"{np.log2(prev / err):.3f}"
                w.writerow([r, n, ndof, f"{err:.6e}", order, f"{time.perf_counter() - t0:.1f}"])
                print(f"h-sweep r={r} n={n}: E2={err:.3e} order={order or '-'}")
                prev = err


def p_sweep(out: Path) -> None:
    cfg = NewmarkConfig(dt=1e-5, t_final=0.02)
    with open(out / "mms_p_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "ndof", "E2", "drop", "runtime_s"])
        prev = None
        for r in (1, 2, 3, 4, 5):
            t0 = time.perf_counter()
            err, ndof = mms_single(4, r, cfg, points=10)
            drop = "" if prev is None else f"{prev / err:.2f}"
            w.writerow([r, ndof, f"{err:.6e}", drop, f"{time.perf_counter() - t0:.1f}"])
            print(f"p-sweep r={r}: E2={err:.3e} drop={drop or '-'}")
            prev = err


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="mms_results", help="output directory")
    ap.add_argument("--sweep", choices=["h", "p", "both"], default="both")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.sweep in ("h", "both"):
        h_sweep(out)
    if args.sweep in ("p", "both"):
        p_sweep(out)


if __name__ == "__main__":
    main()
