#!/usr/bin/env python3
"""Absorbing-boundary test: a Gaussian plane pulse travels down a duct
whose outflow carries the characteristic impedance Z = rho0 c0.  The
mid-duct probe sees the pulse once; any later excursion is reflection.
Prints the reflected/incident amplitude ratio and writes the probe CSV.
"""
import argparse
from pathlib import Path

import numpy as np

from semwave.cli import run_solve


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="duct_results", help="output directory")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rho0, c0 = 1.204, 343.0
    cfg = {
        "version": "1", "rho0": rho0, "c0": c0, "degree": 2,
        "mesh": {"generator": {"box": [[0, 1], [0, 0.1], [0, 0.1]], "div": [50, 5, 5]}},
        "time": {"dt": 5e-6, "t_final": 4e-3, "beta": 0.0, "gamma": 0.5},
        "impedance": {"xmax": rho0 * c0},
        "initial": {"type": "gaussian_plane", "axis": 0, "center": 0.3, "sigma": 0.05, "direction": 1.0},
        "probes": {"mid": [0.5, 0.05, 0.05]},
    }
    result, _ = run_solve(cfg, out, run_name="duct")
    t = result.times
    p = np.abs(result.probe_values[:, 0])
    incident = p[t < 1.5e-3].max()
    reflected = p[t > 2.8e-3].max()
    print(f"incident amplitude : {incident:.6e}")
    print(f"reflected amplitude: {reflected:.6e}")
    print(f"reflection ratio   : {reflected / incident:.4%}")


if __name__ == "__main__":
    main()
