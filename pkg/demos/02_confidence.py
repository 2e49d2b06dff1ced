"""Which properties actually predict architecture transfer?

The bundled synthetic bank is built so that exactly one property (density)
encodes each dataset's latent coordinate, and recorded performance transfers
between datasets in proportion to that coordinate's gap. The other fifteen
properties are random noise.

Confidence scoring should therefore hand density a perfect score: for every
anchor dataset, ranking the others by density distance reproduces ranking
them by how well their best architectures transfer. The noise properties
land wherever chance puts them.
"""

from pathlib import Path

from gnarch.knowledge_base import attach_properties, build_confidence, read_bench_csv
from gnarch.properties import PROPERTY_NAMES

BANK = Path(__file__).resolve().parents[1] / "data" / "synth_bank"


def main():
    table = read_bench_csv(BANK / "bench.csv")
    attach_properties(table, BANK / "properties")
    print(f"bank: {len(table.datasets)} datasets, {table.num_records} recorded architectures\n")

    conf = build_confidence(table, n_f=8, n_m=30)

    print(f"{'property':<22}{'confidence':>12}  selected")
    print("-" * 44)
    order = sorted(range(16), key=lambda k: -(conf.averaged[k] if conf.averaged[k] == conf.averaged[k] else -9))
    for k in order:
        mark = "  *" if k in conf.selected else ""
        print(f"{PROPERTY_NAMES[k]:<22}{conf.averaged[k]:>12.4f}{mark}")

    print()
    print("density scores exactly 1.0: a perfect rank agreement on every")
    print("anchor. The noise properties hover near zero and only fill the")
    print("remaining selection slots. Downstream, similarity is computed")
    print("over the selected properties only, weighted by these scores.")


if __name__ == "__main__":
    main()
