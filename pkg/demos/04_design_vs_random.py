"""Does transferred knowledge actually buy anything?

A planted search space: 200 architectures whose performance on the unseen
dataset u0 decays with edit distance from a hidden optimum, and three source
datasets whose own optima sit one gene away from it. A method that uses the
sources well should walk to the optimum in a handful of evaluations; random
search has to stumble onto it.

We run the full design loop (stub meta-controller, lookup evaluation) for
five seeds and print guided vs random best-so-far curves.
"""

import logging

from gnarch.pipeline import PipelineConfig, random_search_baseline, run_design
from gnarch.search_space import format_key, hamming, parse_key
from gnarch.synth import make_planted_space

CHECKPOINTS = [1, 5, 10, 20, 30]


def main():
    # the planted space records 200 of 59049 keys, so proposals routinely
    # miss the table and fall back; that churn is expected, not news
    logging.getLogger("gnarch").setLevel(logging.ERROR)
    planted = make_planted_space(seed=0)
    print(f"space: {len(planted.space)} architectures, optimum {format_key(planted.optimum)}\n")

    rows = []
    for seed in range(5):
        cfg = PipelineConfig(seed=seed, leave_one_out="u0", allow_simulation=True)
        _, trajectory, _ = run_design("u0", planted.table, cfg)
        guided = trajectory.best_so_far()
        random_curve = random_search_baseline(planted.table, "u0", 30, seed=500 + seed)
        dist = hamming(planted.optimum, parse_key(trajectory.best().arch_key))
        rows.append((seed, guided, random_curve, dist))

    header = f"{'seed':<6}{'method':<9}" + "".join(f"@{t:<7}" for t in CHECKPOINTS) + "gap"
    print(header)
    print("-" * len(header))
    for seed, guided, random_curve, dist in rows:
        g = "".join(f"{guided[t - 1]:<8.4f}" for t in CHECKPOINTS)
        r = "".join(f"{random_curve[t - 1]:<8.4f}" for t in CHECKPOINTS)
        print(f"{seed:<6}{'guided':<9}{g}{dist}")
        print(f"{'':<6}{'random':<9}{r}")

    print()
    print("'gap' is the guided run's final Hamming distance from the planted")
    print("optimum. Guided search starts near the answer (the sources' best")
    print("models are one gene off) and closes the gap within a few trials;")
    print("random search at trial 30 usually still trails guided at trial 10.")


if __name__ == "__main__":
    main()
