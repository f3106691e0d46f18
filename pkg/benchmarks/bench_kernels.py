"""Compare the compiled string-metric kernels against the pure-Python twins.

Usage: python benchmarks/bench_kernels.py [--pairs N] [--max-len L]
"""

import argparse
import random
import time

from soundlaw import _native, kernels


def make_pairs(n, max_len, seed=0):
    rng = random.Random(seed)
    alphabet = ["a", "e", "i", "o", "u", "p", "t", "k", "m", "n", "s", "l", "r", "tʰ", "kʷ"]
    return [
        (
            tuple(rng.choice(alphabet) for _ in range(rng.randrange(1, max_len + 1))),
            tuple(rng.choice(alphabet) for _ in range(rng.randrange(1, max_len + 1))),
        )
        for _ in range(n)
    ]


def bench(fn, pairs):
    start = time.perf_counter()
    acc = 0
    for a, b in pairs:
        result = fn(a, b)
        acc += len(result) if isinstance(result, tuple) else result
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=20_000)
    parser.add_argument("--max-len", type=int, default=10)
    parser.add_argument("--bruteforce-pairs", type=int, default=500)
    args = parser.parse_args()

    if kernels.BACKEND != "cython":
        print("compiled backend not available; timing the pure backend against itself")

    pairs = make_pairs(args.pairs, args.max_len)
    small = make_pairs(args.bruteforce_pairs, 6, seed=1)

    rows = [
        ("levenshtein", kernels.levenshtein, _native.levenshtein, pairs),
        ("lcs_pair", kernels.lcs_pair, _native.lcs_pair, pairs),
        ("levenshtein_bruteforce", kernels.levenshtein_bruteforce, _native.levenshtein_bruteforce, small),
        ("lcs_len_bruteforce", kernels.lcs_len_bruteforce, _native.lcs_len_bruteforce, small),
    ]
    print(f"{'kernel':28s} {'n pairs':>8s} {'compiled':>10s} {'pure':>10s} {'speedup':>8s}")
    for name, fast, pure, data in rows:
        # agreement spot check before timing
        for a, b in data[:200]:
            assert fast(a, b) == pure(a, b), name
        t_fast = bench(fast, data)
        t_pure = bench(pure, data)
        ratio = t_pure / t_fast if t_fast else float("inf")
        print(f"{name:28s} {len(data):8d} {t_fast:9.3f}s {t_pure:9.3f}s {ratio:7.1f}x")


if __name__ == "__main__":
    main()
