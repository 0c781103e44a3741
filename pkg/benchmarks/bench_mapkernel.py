"""Time the compiled and pure-Python map kernels side by side.

Usage: ``python benchmarks/bench_mapkernel.py [--repeat N] [--points N]``.
Reports the best of ``N`` runs for batched forward evaluation, batched
Newton inversion and a loop of scalar inversions.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from bentguide import conformal


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--scalar", type=int, default=200, help="number of scalar inversions")
    p.add_argument("--q", type=float, default=0.5)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    z = rng.uniform(0.0, math.pi, args.points) + 1j * rng.uniform(0.0, 8.0, args.points)
    q = args.q
    previous = conformal.get_backend()
    rows = []
    for name in conformal.available_backends():
        conformal.set_backend(name)
        xi = conformal.forward_map(q, z)
        scalars = [complex(v) for v in xi[: args.scalar]]
        fwd = best_of(lambda: conformal.forward_map(q, z), args.repeat)
        inv = best_of(lambda: conformal.inverse_map(q, xi), args.repeat)
        one = best_of(lambda: [conformal.inverse_map(q, s) for s in scalars], args.repeat)
        rows.append((name, fwd, inv, one / len(scalars)))
    conformal.set_backend(previous)

    print(f"q={q}, {args.points} points, best of {args.repeat}")
    print(f"{'backend':8s} {'forward [ms]':>13s} {'inverse [ms]':>13s} {'scalar inverse [us]':>20s}")
    for name, fwd, inv, one in rows:
        print(f"{name:8s} {1e3 * fwd:13.2f} {1e3 * inv:13.2f} {1e6 * one:20.1f}")
    if len(rows) == 2:
        (_, f0, i0, s0), (_, f1, i1, s1) = rows
        print(f"speed-up of {rows[0][0]} over {rows[1][0]}: forward {f1 / f0:.2f}x, "
              f"inverse {i1 / i0:.2f}x, scalar inverse {s1 / s0:.2f}x")


if __name__ == "__main__":
    main()
