#!/usr/bin/env python
"""Compiled kernels vs their plain fallback.

The backend is chosen when hslab is imported, so each backend runs in its
own child process.  Usage:  python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def child(repeat):
    import numpy as np

    from hslab import _accel, kernels
    from hslab.core import make_params
    from hslab.fem2d import domain_gallery
    from hslab.radial import _Shooter

    sh = _Shooter(make_params(3, s=1.0), tol=1e-8)
    dom = domain_gallery("kidney", 256)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.9, 0.9, size=(20000, 2))

    def shoot_once():
        return sh.run(2.5, store=True).steps

    def dist_once():
        return kernels.polygon_distance(pts[:, 0], pts[:, 1], dom.vertices[:, 0], dom.vertices[:, 1])

    # first call compiles (or warms caches); it is excluded from timing
    shoot_once()
    ref = dist_once()
    out = {"numba": _accel.USE_NUMBA, "checksum": float(ref.sum())}
    for name, fn in (("shoot_trajectory", shoot_once), ("polygon_distance_20k_x_256", dist_once)):
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        out[name] = min(times)
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.repeat)
        return
    results = {}
    for label, flag in (("numba", "0"), ("fallback", "1")):
        env = dict(os.environ, HSLAB_DISABLE_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])
    a, b = results["numba"], results["fallback"]
    if abs(a["checksum"] - b["checksum"]) > 1e-9 * abs(a["checksum"]):
        sys.exit("backends disagree on polygon distances")
    print(f"{'kernel':30s} {'numba [s]':>12s} {'fallback [s]':>13s} {'speedup':>8s}")
    for k in ("shoot_trajectory", "polygon_distance_20k_x_256"):
        print(f"{k:30s} {a[k]:12.5f} {b[k]:13.5f} {b[k] / a[k]:8.1f}")


if __name__ == "__main__":
    main()
