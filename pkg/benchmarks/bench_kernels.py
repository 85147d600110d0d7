#!/usr/bin/env python3
"""Time the compiled kernels against the uncompiled fallback.

Each backend runs in its own interpreter because the choice is made at
import time through GRADCAV_NUMBA. Compilation happens in a warm-up call
and is reported separately.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from gradcav._jit import backend
from gradcav.bessel import bessel_jy, jy_scaled_array, cross_product_tilde
from gradcav.spectrum import CavityGeometry, DielectricProfile, enumerate_modes

repeat = int(sys.argv[1])
rng = np.random.default_rng(1)
nus = rng.uniform(0, 60, 400)
xs = rng.uniform(0.05, 120, 400)
grid = np.linspace(0.1, 80, 2000)
geom = CavityGeometry(1.0, 1.0, 1.0)
prof = DielectricProfile(beta=1.0, alpha=1.0)

def scalar():
    for nu, x in zip(nus, xs):
        bessel_jy(nu, x)

def array():
    for nu in (0.5, 7.0, 33.3):
        jy_scaled_array(nu, grid)

def cross():
    for nu, x in zip(nus, xs):
        cross_product_tilde(nu, x, 1.7 * x)

def spectrum():
    enumerate_modes(geom, prof, 12.0)

out = {"backend": backend(), "cases": {}}
for name, fn in [("bessel_jy x400", scalar), ("jy_scaled_array 3x2000", array),
                 ("cross_product_tilde x400", cross), ("enumerate_modes omega_max=12", spectrum)]:
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["cases"][name] = {"first": first, "best": best}
print(json.dumps(out))
"""


def run_backend(flag, repeat):
    env = dict(os.environ, GRADCAV_NUMBA=flag)
    r = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                       check=True)
    return json.loads(r.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    fast = run_backend("1", args.repeat)
    slow = run_backend("0", args.repeat)
    print(f"{'case':32s} {'numba [s]':>11s} {'python [s]':>11s} {'speed-up':>9s} {'first call':>11s}")
    for name, f in fast["cases"].items():
        s = slow["cases"][name]
        print(f"{name:32s} {f['best']:11.4f} {s['best']:11.4f} {s['best'] / f['best']:8.1f}x {f['first']:10.3f}s")


if __name__ == "__main__":
    main()
