#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_backends.py [--n 60] [--trees 200] [--repeats 3]

Covers the three hot paths: leaf-sum extraction, batched prediction, and
per-sample reweighting terms. Run after `pip install -e .` so the compiled
extension exists; the script reports whichever backends are importable.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from coalint import Coalition, GbtConfig, IndexSpec, fit_gbt
from coalint._backend import available_backends
from coalint.bitset import all_subsets_up_to_order, masks_to_words
from coalint.extraction import lambda_table
from coalint.indices import p_weight


def build_ensemble(n: int, n_trees: int, rows: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    masks = [int.from_bytes(rng.bytes((n + 7) // 8), "little") & ((1 << n) - 1) for _ in range(rows)]
    values = rng.normal(size=rows)
    data = [(Coalition(m, n), float(v)) for m, v in zip(masks, values)]
    config = GbtConfig(n_estimators=n_trees, max_depth=6, seed=seed)
    return fit_gbt(data, config)


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=60)
    parser.add_argument("--trees", type=int, default=200)
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--order", type=int, default=2)
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(sorted(backends))}")
    ensemble = build_ensemble(args.n, args.trees, args.rows)
    l_words, r_words, values, l_sizes, r_sizes = ensemble.packed_leaves()
    print(f"ensemble: {args.trees} trees, {ensemble.n_leaves} leaves, n={args.n}")

    spec = IndexSpec("SII")
    targets = all_subsets_up_to_order(args.n, args.order)
    target_words = np.vstack([t.to_words() for t in targets])
    target_sizes = np.array([len(t) for t in targets], dtype=np.int64)
    table = lambda_table(spec, args.n, int(l_sizes.max()), int(r_sizes.max()), args.order)

    rng = np.random.default_rng(1)
    pred_masks = [
        int.from_bytes(rng.bytes((args.n + 7) // 8), "little") & ((1 << args.n) - 1)
        for _ in range(args.rows)
    ]
    pred_words = masks_to_words(pred_masks, args.n)

    sample_masks = [
        int.from_bytes(rng.bytes((args.n + 7) // 8), "little") & ((1 << args.n) - 1)
        for _ in range(args.samples)
    ]
    sample_words = masks_to_words(sample_masks, args.n)
    sample_values = rng.normal(size=args.samples)
    inv_probs = 1.0 / rng.uniform(0.1, 1.0, size=args.samples)
    s = 2
    p_col = np.array([p_weight(spec, args.n, s, t) for t in range(args.n - s + 1)])
    target = Coalition.of([0, 1], args.n).to_words()

    cases = {
        f"extract ({len(targets)} targets x {ensemble.n_leaves} leaves)": lambda k: k.extract_interactions(
            l_words, r_words, values, l_sizes, r_sizes, target_words, target_sizes, table
        ),
        f"predict ({args.rows} coalitions)": lambda k: k.predict_coalitions(
            l_words, r_words, values, pred_words, 0.0
        ),
        f"reweighted terms ({args.samples} samples)": lambda k: k.weighted_index_terms(
            sample_words, sample_values, inv_probs, p_col, s, target
        ),
    }

    print(f"\n{'case':<46} " + " ".join(f"{name:>12}" for name in sorted(backends)) + "  speedup")
    for label, runner in cases.items():
        row = {}
        for name, module in backends.items():
            row[name] = best_of(lambda: runner(module), args.repeats)
        cells = " ".join(f"{row[name]:>11.4f}s" for name in sorted(backends))
        if "compiled" in row and "python" in row:
            speedup = f"{row['python'] / row['compiled']:>7.1f}x"
        else:
            speedup = "      --"
        print(f"{label:<46} {cells} {speedup}")


if __name__ == "__main__":
    main()
