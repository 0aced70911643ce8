"""Compare the compiled and pure-Python linearizability search.

    python benchmarks/bench_kernels.py [--histories N] [--methods M]

Histories are drawn at random and are mostly non-linearizable, which forces
the search to exhaust the (done-set, state) space.
"""

from __future__ import annotations

import argparse
import random
import time

from lpv import _pykernels

try:
    from lpv import _ckernels
except ImportError:
    _ckernels = None


def random_instance(rng: random.Random, n: int, keys: int):
    ops = [rng.randrange(3) for _ in range(n)]
    kbits = [rng.randrange(keys) for _ in range(n)]
    results = [rng.random() < 0.5 for _ in range(n)]
    # sparse real-time constraints: i before j only for a few j > i
    preds = [0] * n
    for j in range(n):
        for i in range(j):
            if rng.random() < 0.1:
                preds[j] |= 1 << i
    return ops, kbits, results, preds, rng.randrange(1 << keys)


def bench(fn, instances) -> tuple[float, int]:
    start = time.perf_counter()
    found = 0
    for inst in instances:
        found += fn(*inst)[0]
    return time.perf_counter() - start, found


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--histories", type=int, default=2000)
    ap.add_argument("--methods", type=int, default=10)
    ap.add_argument("--keys", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    instances = [random_instance(rng, args.methods, args.keys) for _ in range(args.histories)]
    py_t, py_found = bench(_pykernels.linearize, instances)
    print(f"python  {py_t:8.3f}s  linearizable={py_found}/{len(instances)}")
    if _ckernels is None:
        print("cython  not built")
        return
    c_t, c_found = bench(_ckernels.linearize, instances)
    assert c_found == py_found
    print(f"cython  {c_t:8.3f}s  linearizable={c_found}/{len(instances)}  speedup x{py_t / c_t:.1f}")


if __name__ == "__main__":
    main()
