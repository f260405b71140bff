"""Compare the compiled and pure-Python trace-matrix kernels.

Runs two workloads with each kernel:

* ``compose``: random packed matrices of a few hundred entries, composed
  pairwise;
* ``progress``: the full progress check on translated corpus proofs, whose
  loops are long enough for matrix closure to dominate.

Usage: ``python3 benchmarks/bench_compose.py [--repeat N]``.
"""
from __future__ import annotations

import argparse
import random
import statistics
import time

from mulj import _kernel_py, progress
from mulj.library import addition_program, list_stream_concat, multiplication_program
from mulj.negtrans import simulate_in_negative, trans_coderivation

try:
    from mulj import _kernel
except ImportError:  # pragma: no cover
    _kernel = None


def random_matrix(rng: random.Random, width: int, entries: int, labels: int = 12) -> frozenset:
    out = set()
    while len(out) < entries:
        i, j, lab = rng.randrange(width), rng.randrange(width), rng.randrange(labels)
        out.add(((i + 1) << 32) | ((j + 1) << 16) | lab)
    return frozenset(out)


def time_compose(compose, pairs, repeat: int) -> float:
    runs = []
    for _ in range(repeat):
        t = time.perf_counter()
        for a, b in pairs:
            compose(a, b)
        runs.append(time.perf_counter() - t)
    return statistics.median(runs)


def time_progress(compose, proofs, repeat: int) -> float:
    saved = progress.compose
    progress.compose = compose
    try:
        runs = []
        for _ in range(repeat):
            t = time.perf_counter()
            for c in proofs:
                progress.is_progressing(c)
            runs.append(time.perf_counter() - t)
        return statistics.median(runs)
    finally:
        progress.compose = saved


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    pairs = [(random_matrix(rng, 24, 200), random_matrix(rng, 24, 200)) for _ in range(200)]
    proofs = [
        trans_coderivation(list_stream_concat()),
        simulate_in_negative(addition_program()),
        simulate_in_negative(multiplication_program()),
    ]
    kernels = {"python": _kernel_py.compose}
    if _kernel is not None:
        kernels["cython"] = _kernel.compose
    else:
        print("compiled kernel not built; timing the fallback only")

    for a, b in pairs[:20]:  # both kernels must agree before timing
        results = {k: f(a, b) for k, f in kernels.items()}
        assert len(set(results.values())) == 1, "kernels disagree"

    print(f"{'workload':<10} {'kernel':<8} {'median s':>10}")
    rows = {}
    for name, fn in kernels.items():
        rows[("compose", name)] = time_compose(fn, pairs, args.repeat)
        rows[("progress", name)] = time_progress(fn, proofs, args.repeat)
    for (work, name), sec in sorted(rows.items()):
        print(f"{work:<10} {name:<8} {sec:>10.4f}")
    if "cython" in kernels:
        for work in ("compose", "progress"):
            print(f"speedup {work}: {rows[(work, 'python')] / rows[(work, 'cython')]:.2f}x")


if __name__ == "__main__":
    main()
