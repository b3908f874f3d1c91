"""Compare the numba kernels with their interpreted and numpy fallbacks.

Three hot paths are timed: the ring walks (compiled vs interpreted, same
source), the query-by-train distance matrix (compiled loop vs chunked numpy
broadcast) and the all-k vote sweep (compiled incremental leader vs cumsum).

    python3 benchmarks/bench_backends.py [--reps 5] [--ring-D 300]

Each row checks that both sides return the same result before timing them.
"""

import argparse
import time

import numpy as np

from mcdist._accel import USE_NUMBA, python_impl
from mcdist.grid import _NO_BUF, KERNELS
from mcdist.knn import sweep_votes_loop, sweep_votes_numpy
from mcdist.metrics import DistanceSpec
from mcdist.pairwise import pairwise_loop, pairwise_numpy


def best_of(fn, reps):
    fn()  # warm-up, includes compilation
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def ring_rows(D, reps):
    for fam, kernel in KERNELS.items():
        slow = python_impl(kernel)
        fast_out = kernel(1, D, _NO_BUF, False)
        assert slow(1, D, _NO_BUF, False) == fast_out
        yield (
            f"rings/{fam.value} D={D}",
            best_of(lambda: kernel(1, D, _NO_BUF, False), reps),
            best_of(lambda: slow(1, D, _NO_BUF, False), max(1, reps // 2)),
        )


def pairwise_rows(n_query, n_train, n_feat, reps, rng):
    Q = rng.normal(size=(n_query, n_feat))
    T = rng.normal(size=(n_train, n_feat))
    for text in ("euclidean", "canberra", "minkowski:p=0.5", "rodrigues:p=2"):
        params = DistanceSpec.parse(text).params()
        np.testing.assert_allclose(pairwise_loop(Q, T, *params), pairwise_numpy(Q, T, *params), rtol=1e-12)
        yield (
            f"pairwise/{text} {n_query}x{n_train}x{n_feat}",
            best_of(lambda: pairwise_loop(Q, T, *params), reps),
            best_of(lambda: pairwise_numpy(Q, T, *params), reps),
        )


def vote_rows(m, k_max, n_classes, reps, rng):
    ranked = rng.integers(0, n_classes, size=(m, k_max))
    assert np.array_equal(sweep_votes_loop(ranked, n_classes, k_max), sweep_votes_numpy(ranked, n_classes, k_max))
    yield (
        f"votes m={m} k={k_max} C={n_classes}",
        best_of(lambda: sweep_votes_loop(ranked, n_classes, k_max), reps),
        best_of(lambda: sweep_votes_numpy(ranked, n_classes, k_max), reps),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument("--ring-D", type=int, default=300, help="kept small: the interpreted walk is slow")
    args = parser.parse_args()
    if not USE_NUMBA:
        print("numba is disabled; both columns will run uncompiled code")
    rng = np.random.default_rng(0)
    rows = list(ring_rows(args.ring_D, args.reps))
    rows += pairwise_rows(200, 1800, 8, args.reps, rng)
    rows += vote_rows(2000, 200, 5, args.reps, rng)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba s':>10}  {'fallback s':>11}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<{width}}  {fast:>10.5f}  {slow:>11.5f}  {slow / fast:>7.1f}x")


if __name__ == "__main__":
    main()
