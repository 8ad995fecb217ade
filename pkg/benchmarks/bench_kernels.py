"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Workloads match what the library does in practice: jet products at the
orders used by decompose and the models, and trace-word evaluation over the
necklace words used for fingerprints and basic invariants.
"""
import argparse
import timeit

import numpy as np

from opequiv import kernels
from opequiv.invariants import encode_words, necklace_words
from opequiv.jets import _product_table, n_monomials


def conv_case(n, K, m, rng):
    M = n_monomials(n, K)
    x, y = rng.normal(size=(M, m, m)), rng.normal(size=(M, m, m))
    table = _product_table(n, K)
    return f"conv_matmul n={n} K={K} m={m}", lambda b: kernels.conv_matmul(x, y, *table, backend=b)


def words_case(letters, max_len, m, rng):
    mats = rng.normal(size=(letters, m, m))
    arr, lengths = encode_words(necklace_words(letters, max_len))
    label = f"trace_words {len(lengths)} words (<= {max_len}) m={m}"
    return label, lambda b: kernels.trace_words(mats, arr, lengths, backend=b)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    cases = [conv_case(2, 3, 3, rng), conv_case(3, 4, 3, rng), conv_case(3, 5, 2, rng),
             words_case(4, 3, 3, rng), words_case(4, 4, 3, rng), words_case(7, 4, 3, rng)]
    backends = kernels.available_backends()
    print(f"default backend: {kernels.BACKEND}; available: {', '.join(backends)}")
    print(f"{'workload':44s}" + "".join(f"{b:>14s}" for b in backends) + "     speedup")
    for label, fn in cases:
        times = {}
        for b in backends:
            fn(b)  # warm-up
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        row = f"{label:44s}" + "".join(f"{times[b] * 1e3:11.3f} ms" for b in backends)
        if "compiled" in times:
            row += f"  {times['python'] / times['compiled']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
