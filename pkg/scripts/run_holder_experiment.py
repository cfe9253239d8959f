#!/usr/bin/env python3
"""Regularity-exponent experiment at acceptance scale (n = 4096, 64 replicas).

Runs the colored (alpha = 0.5) and white-noise configurations and gates the
estimates against their theory bands.  Expect a few minutes per run.
"""

import sys

from spdelab.cli import main

COMMON = [
    "holder",
    "--set", "grid.n=4096",
    "--set", "grid.l=1.0",
    "--set", "grid.t_end=0.0002384185791015625",  # 4000 h^2
    "--set", "grid.t_min=0.0000238418579101562",
    "--set", "sigma.kind=lipschitz-linear",
    "--set", "u0.kind=constant",
    "--set", "u0.value=1.0",
    "--set", "holder.lags=8,16,32,64",
    "--set", "holder.tsteps=64,128,256,512,1024",
    "--set", "holder.order=2",
    "--set", "holder.snap_every=16",
    "--replicas", "64",
    "--gated",
]

RUNS = [
    (["--set", "kernel.kind=riesz", "--set", "kernel.alpha=0.5",
      "--set", "holder.gate_space=0.65,0.85", "--set", "holder.gate_time=0.30,0.45",
      "--out", "out_holder/riesz_05"], "riesz alpha=0.5"),
    (["--set", "kernel.kind=white",
      "--set", "holder.gate_space=0.43,0.57", "--set", "holder.gate_time=0.20,0.30",
      "--out", "out_holder/white"], "white noise"),
]

if __name__ == "__main__":
    rc = 0
    for extra, label in RUNS:
        print(f"== {label}")
        rc |= main(COMMON + extra)
    sys.exit(rc)
