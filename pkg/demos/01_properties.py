"""What the engine sees in a graph.

Every dataset is reduced to 16 scalar properties before anything else
happens: structural statistics (clustering, centralities, diameter, ...),
plain counts, and task signals like feature diversity and label homophily.
Expensive path-based statistics are estimated on a seeded node sample, so
the vector is cheap even when the graph is not.

This script builds two small synthetic graphs with opposite character, a
homophilous one and a heterophilous one, and prints their vectors side by
side so the discriminating entries stand out.
"""

from gnarch.properties import PROPERTY_NAMES, compute_properties
from gnarch.synth import make_random_dataset


def main():
    cliquey = make_random_dataset("cliquey", num_nodes=120, avg_degree=6.0, homophily=0.9, seed=1)
    mixed = make_random_dataset("mixed", num_nodes=120, avg_degree=6.0, homophily=0.1, seed=1)

    vec_a = compute_properties(cliquey)
    vec_b = compute_properties(mixed)

    print(f"{'property':<22}{'homophilous':>14}{'heterophilous':>16}")
    print("-" * 52)
    for name in PROPERTY_NAMES:
        print(f"{name:<22}{vec_a.values[name]:>14.4f}{vec_b.values[name]:>16.4f}")

    print()
    print("label_homophily separates the two immediately; the structural")
    print("entries barely move because both graphs share size and degree.")
    print("That asymmetry is exactly what the confidence filter later learns")
    print("to exploit: properties that track transfer get selected, inert")
    print("ones get dropped.")


if __name__ == "__main__":
    main()
