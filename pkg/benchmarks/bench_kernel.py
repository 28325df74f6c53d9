"""Compiled kernel against the pure-Python twin on hit-space builds.

    python benchmarks/bench_kernel.py            # (4,41), (5,18), (5,30)
    python benchmarks/bench_kernel.py --large    # also (5,41)
"""

from __future__ import annotations

import argparse
import time

from sq2hit import backend
from sq2hit.hitengine import hit_space


def bench(m: int, n: int, kernel: str, repeat: int) -> tuple:
    best = float("inf")
    rank = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        hs = hit_space(m, n, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
        rank = hs.codimension
    return best, rank


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--large", action="store_true", help="include the (5,41) case")
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args()
    if backend.compiled is None:
        print("compiled kernel is not built; nothing to compare")
        return 1
    cases = [(4, 41), (5, 18), (5, 30)] + ([(5, 41)] if args.large else [])
    print("%-8s %10s %10s %8s %6s" % ("(m,n)", "python s", "compiled s", "speedup", "dim"))
    for m, n in cases:
        tp, dp = bench(m, n, "python", args.repeat)
        tc, dc = bench(m, n, "compiled", args.repeat)
        assert dp == dc, "backends disagree"
        print("%-8s %10.2f %10.2f %7.1fx %6d" % ("(%d,%d)" % (m, n), tp, tc, tp / tc, dc))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
