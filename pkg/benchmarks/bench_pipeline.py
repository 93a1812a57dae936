"""Time the rerank stage on synthetic data for a few worker counts.

    python benchmarks/bench_pipeline.py --examples 10000 --workers 1 2 4
"""

import argparse
import os
import time

from maars.reranker import RerankConfig
from maars.pipeline import run_rerank
from maars.synth import make_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--examples", type=int, default=10_000)
    parser.add_argument("--candidates", type=int, default=40)
    parser.add_argument("--n", type=int, default=10)
    parser.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    t0 = time.perf_counter()
    examples, nbest = make_dataset(args.examples, args.candidates, seed=args.seed)
    print(f"generated {len(examples)} examples in {time.perf_counter() - t0:.2f}s (cpus={os.cpu_count()})")

    reference = None
    for workers in args.workers:
        t0 = time.perf_counter()
        predictions, _ = run_rerank(examples, nbest, RerankConfig(args.n), workers=workers)
        elapsed = time.perf_counter() - t0
        same = reference is None or predictions == reference
        reference = reference or predictions
        print(f"workers={workers:<3d} {elapsed:7.2f}s  {len(examples) / elapsed:9.0f} ex/s  identical={same}")


if __name__ == "__main__":
    main()
