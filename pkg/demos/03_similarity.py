"""Retrieving knowledge for a graph the bank has never seen.

We hold dataset d3 out of the bundled bank and pretend it is new: its
property vector is the only thing the engine may use. Confidence is rebuilt
on the remaining datasets, sources are ranked by confidence-weighted
property closeness, and the most similar sources contribute their best
recorded architectures to a knowledge pool.

Because the bank's latent coordinates are [1, 2, 4, 8, 16] (d3 sits at 4),
the right answer is unambiguous: d2 (at 2) is closest, then d1, then d4.
"""

from pathlib import Path

from gnarch.knowledge_base import attach_properties, build_confidence, read_bench_csv
from gnarch.similarity import build_pool, rank_sources, uniform_weights

BANK = Path(__file__).resolve().parents[1] / "data" / "synth_bank"


def main():
    table = read_bench_csv(BANK / "bench.csv")
    attach_properties(table, BANK / "properties")

    held_out = table.property_vectors["d3"]
    view = table.exclude_dataset("d3")

    conf = build_confidence(view, n_f=8, n_m=30)
    ranking = rank_sources(held_out, view, conf, uniform_weights(list(conf.selected)))

    print("similarity of each bank dataset to the held-out graph:")
    for i, score in enumerate(ranking, start=1):
        print(f"  {i}. {score.source}  score {score.score:.4f}")

    pool = build_pool(ranking, view, n_s=3, n_m=5)
    print("\nknowledge pool (top 3 sources, their 5 best recorded models):")
    for entry in pool.entries:
        print(f"  from {entry.source} (similarity {entry.similarity:.4f}):")
        for key, perf in entry.top_models:
            print(f"    {perf:.4f}  {key}")

    print()
    print("The ranking follows the latent gaps exactly. The pool is what the")
    print("design loop starts from: its entries seed the initial proposals")
    print("and later serve as crossover co-parents during refinement.")


if __name__ == "__main__":
    main()
