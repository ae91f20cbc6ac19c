"""Benchmark the compiled co-occurrence kernel against the pure-Python fallback.

Training is quadratic in tokens per text and scoring is context x queries,
so these two loops dominate runtime on real corpora; everything else in
the toolkit is linear string/IO work.

Usage:
    python benchmarks/bench_kernels.py            # default sizes
    python benchmarks/bench_kernels.py --quick    # smoke-test sizes
"""

from __future__ import annotations

import argparse
import time

from mremix._kernels import CompiledCoocTable, PurePythonCoocTable
from mremix.rng import SplitMix64


def make_corpus(n_texts: int, words_per_text: int, vocab_size: int, seed: int = 1):
    rng = SplitMix64(seed)
    return [
        [rng.randbelow(vocab_size) for _ in range(words_per_text)] for _ in range(n_texts)
    ]


def bench_train(table_cls, corpus):
    table = table_cls()
    start = time.perf_counter()
    for ids in corpus:
        table.observe(ids)
    return time.perf_counter() - start, table


def bench_score(table, prompts, queries):
    start = time.perf_counter()
    sink = 0
    for context in prompts:
        sink += table.context_sums(context, queries)[0]
    return time.perf_counter() - start, sink


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--texts", type=int, default=2000)
    parser.add_argument("--words-per-text", type=int, default=60)
    parser.add_argument("--vocab", type=int, default=5000)
    parser.add_argument("--prompts", type=int, default=1000)
    parser.add_argument("--queries", type=int, default=500)
    parser.add_argument("--quick", action="store_true", help="tiny sizes, sanity only")
    args = parser.parse_args()

    if args.quick:
        args.texts, args.words_per_text, args.prompts, args.queries = 200, 30, 100, 100

    corpus = make_corpus(args.texts, args.words_per_text, args.vocab)
    prompt_rng = SplitMix64(2)
    prompts = [
        [prompt_rng.randbelow(args.vocab) for _ in range(args.words_per_text)]
        for _ in range(args.prompts)
    ]
    queries = [prompt_rng.randbelow(args.vocab) for _ in range(args.queries)]

    backends = [("pure", PurePythonCoocTable)]
    if CompiledCoocTable is not None:
        backends.append(("compiled", CompiledCoocTable))
    else:
        print("compiled kernel not built; benchmarking the pure backend only\n")

    print(
        f"corpus: {args.texts} texts x {args.words_per_text} tokens, "
        f"vocab {args.vocab}; scoring: {args.prompts} prompts x {args.queries} queries"
    )
    print(f"{'backend':<10} {'train (s)':>10} {'score (s)':>10}")
    results = {}
    checks = {}
    for name, cls in backends:
        train_s, table = bench_train(cls, corpus)
        score_s, sink = bench_score(table, prompts, queries)
        results[name] = (train_s, score_s)
        checks[name] = (table.num_pairs(), sink)
        print(f"{name:<10} {train_s:>10.3f} {score_s:>10.3f}")

    if len(results) == 2:
        if checks["pure"] != checks["compiled"]:
            raise SystemExit("backend results diverge; the benchmark is void")
        t_pure, s_pure = results["pure"]
        t_comp, s_comp = results["compiled"]
        print(f"\nspeedup: train {t_pure / t_comp:.1f}x, score {s_pure / s_comp:.1f}x")


if __name__ == "__main__":
    main()
