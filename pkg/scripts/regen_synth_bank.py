"""Regenerate the bundled synthetic benchmark under data/synth_bank/.

The bank is deterministic, so rerunning this script must leave git clean.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from gnarch.synth import make_synth_bank, write_bank

out = pathlib.Path(__file__).resolve().parents[1] / "data" / "synth_bank"
bank = make_synth_bank()
write_bank(bank.table, out)
print(f"wrote {bank.table.num_records} records for {len(bank.table.datasets)} datasets to {out}")
