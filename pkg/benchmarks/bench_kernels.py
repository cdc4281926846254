#!/usr/bin/env python3
"""Time the loop kernels under the compiled and the interpreted backend.

Each backend runs in its own subprocess because the choice is made at import
time from MAJOLOOP_PURE.  Prints a small table and optionally writes JSON.

    python3 benchmarks/bench_kernels.py --L 16 --repeats 3 --json bench.json
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from majoloop import BACKEND
from majoloop.lattice import build_lattice
from majoloop.loopstate import make_layer, compose, close_boundary
from majoloop.rng import stream

L, repeats = int(sys.argv[1]), int(sys.argv[2])
spec = build_lattice("honeycomb", L)
warm = compose(make_layer(spec, stream(0, 0)), make_layer(spec, stream(0, 1)))
close_boundary(warm, "pure-both")

def best(fn):
    out = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)

layers = [make_layer(spec, stream(1, i)) for i in range(8)]
res = {
    "backend": BACKEND,
    "make_layer": best(lambda: make_layer(spec, stream(2, 0))),
    "compose": best(lambda: compose(layers[0], layers[1], 1, 0)),
    "close": best(lambda: close_boundary(layers[2], "mixed-bottom")),
}
print(json.dumps(res))
"""


def run_backend(pure: bool, L: int, repeats: int) -> dict:
    env = dict(os.environ, MAJOLOOP_PURE="1" if pure else "0")
    t = time.perf_counter()
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(L), str(repeats)], env=env, capture_output=True, text=True, check=True
    )
    res = json.loads(out.stdout.strip().splitlines()[-1])
    res["wall"] = time.perf_counter() - t
    return res


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)

    fast = run_backend(False, args.L, args.repeats)
    slow = run_backend(True, args.L, args.repeats)
    print(f"honeycomb L={args.L}, best of {args.repeats}")
    print(f"{'kernel':<12}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for k in ("make_layer", "compose", "close"):
        print(f"{k:<12}{fast[k] * 1e3:>10.3f}ms{slow[k] * 1e3:>10.3f}ms{slow[k] / fast[k]:>10.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"L": args.L, "results": [fast, slow]}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
