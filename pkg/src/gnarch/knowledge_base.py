"""Benchmark tables and the confidence machinery built on them.

A BenchmarkTable holds recorded (dataset, architecture) -> performance rows
plus per-dataset property vectors. From it we derive, per anchor dataset:

- a *statistical ranking* of the other datasets by property-value distance,
- an *empirical ranking* by how well their top architectures transfer,

and score each property by the Kendall rank correlation between the two.
Averaging those correlations over anchors yields a per-property confidence,
and the top ``n_f`` properties become the retrieval filter.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from filelock import FileLock
from scipy.stats import rankdata

from .errors import DataError, FileFormatError, RecordMissingError
from .graph_data import DatasetMeta
from .properties import NUM_PROPERTIES, PROPERTY_NAMES, PropertyVector
from .search_space import Architecture, format_key, parse_key, validate

log = logging.getLogger(__name__)

BENCH_HEADER = ("dataset", "macro", "ops", "valid_perf", "test_perf")

ER_MODES = ("best", "mean")


class PerfRecord(NamedTuple):
    valid_perf: float
    test_perf: float


def kendall_tau(rank_a, rank_b) -> float:
    """Tie-corrected Kendall correlation (tau-b) of two paired value lists.

    Accepts raw scores or rank positions; only the order relations matter.
    Returns NaN when either list is constant (tau undefined) or shorter
    than two entries. Raises on length mismatch or non-finite input.
    """
    x = np.asarray(rank_a, dtype=np.float64)
    y = np.asarray(rank_b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"kendall_tau needs two equal-length 1-d lists, got {x.shape} vs {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("kendall_tau input contains non-finite values")
    n = len(x)
    if n < 2:
        return float("nan")
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(n, k=1)
    s = float(np.sum(sx[iu] * sy[iu]))  # concordant minus discordant
    n0 = n * (n - 1) / 2.0
    tx = n0 - float(np.sum(sx[iu] != 0))  # tied pairs in x
    ty = n0 - float(np.sum(sy[iu] != 0))
    denom = np.sqrt((n0 - tx) * (n0 - ty))
    if denom == 0.0:
        return float("nan")
    return s / denom


@dataclass
class BenchmarkTable:
    """Recorded performances plus dataset metadata and property vectors."""

    datasets: dict[str, DatasetMeta] = field(default_factory=dict)
    property_vectors: dict[str, PropertyVector] = field(default_factory=dict)
    records: dict[str, dict[str, PerfRecord]] = field(default_factory=dict)

    def dataset_names(self) -> list[str]:
        return sorted(self.datasets)

    @property
    def num_records(self) -> int:
        return sum(len(r) for r in self.records.values())

    def add_dataset(self, meta: DatasetMeta, properties: PropertyVector | None = None):
        self.datasets[meta.name] = meta
        self.records.setdefault(meta.name, {})
        if properties is not None:
            if properties.dataset != meta.name:
                raise DataError(
                    f"property vector for {properties.dataset!r} attached to {meta.name!r}"
                )
            self.property_vectors[meta.name] = properties

    def set_properties(self, vector: PropertyVector):
        if vector.dataset not in self.datasets:
            raise DataError(f"unknown dataset {vector.dataset!r}")
        self.property_vectors[vector.dataset] = vector

    def add_record(self, dataset: str, arch: Architecture, valid_perf: float, test_perf: float, *, on_duplicate: str = "error"):
        if dataset not in self.datasets:
            self.add_dataset(DatasetMeta(name=dataset))
        problems = validate(arch)
        if problems:
            raise DataError(f"invalid architecture for {dataset!r}: {'; '.join(problems)}")
        for label, value in (("valid_perf", valid_perf), ("test_perf", test_perf)):
            if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                raise DataError(f"{label} {value!r} outside [0, 1] for {dataset!r}")
        key = format_key(arch)
        bucket = self.records[dataset]
        if key in bucket and on_duplicate == "error":
            raise DataError(f"duplicate record for {key} on dataset {dataset!r}")
        bucket[key] = PerfRecord(float(valid_perf), float(test_perf))

    def has_record(self, dataset: str, arch_key: str) -> bool:
        return arch_key in self.records.get(dataset, {})

    def get_perf(self, dataset: str, arch_key: str) -> PerfRecord:
        if dataset not in self.datasets:
            raise DataError(f"unknown dataset {dataset!r}")
        try:
            return self.records[dataset][arch_key]
        except KeyError:
            raise RecordMissingError(dataset, arch_key) from None

    def records_for(self, dataset: str) -> dict[str, PerfRecord]:
        if dataset not in self.datasets:
            raise DataError(f"unknown dataset {dataset!r}")
        return dict(self.records[dataset])

    def top_architectures(self, dataset: str, n: int) -> list[tuple[str, float]]:
        """Top-n recorded architectures of a dataset by valid_perf, ties by key."""
        rows = self.records_for(dataset)
        ordered = sorted(rows.items(), key=lambda kv: (-kv[1].valid_perf, kv[0]))
        return [(key, rec.valid_perf) for key, rec in ordered[:n]]

    def exclude_dataset(self, name: str) -> "BenchmarkTable":
        """A new table without ``name``; the original is untouched."""
        if name not in self.datasets:
            raise DataError(f"unknown dataset {name!r}")
        return BenchmarkTable(
            datasets={k: v for k, v in self.datasets.items() if k != name},
            property_vectors={k: v for k, v in self.property_vectors.items() if k != name},
            records={k: dict(v) for k, v in self.records.items() if k != name},
        )


def read_bench_csv(path) -> BenchmarkTable:
    """Load a bench.csv: header ``dataset,macro,ops,valid_perf,test_perf``,
    macro like ``0-0-1-3``, ops like ``gcn-gat-sage-gin``."""
    p = Path(path)
    if not p.is_file():
        raise FileFormatError(p, "file not found")
    table = BenchmarkTable()
    with p.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError(p, "empty file") from None
        if tuple(h.strip() for h in header) != BENCH_HEADER:
            raise FileFormatError(p, f"header must be {','.join(BENCH_HEADER)}, got {','.join(header)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise FileFormatError(p, f"expected 5 columns, got {len(row)}", lineno)
            dataset, macro_s, ops_s, valid_s, test_s = (c.strip() for c in row)
            if not dataset:
                raise FileFormatError(p, "empty dataset name", lineno)
            try:
                macro = tuple(int(t) for t in macro_s.split("-"))
            except ValueError:
                raise FileFormatError(p, f"malformed macro {macro_s!r}", lineno)
            ops = tuple(ops_s.split("-"))
            arch = Architecture(macro, ops)  # type: ignore[arg-type]
            problems = validate(arch)
            if problems:
                raise FileFormatError(p, f"invalid architecture: {'; '.join(problems)}", lineno)
            try:
                valid_perf = float(valid_s)
                test_perf = float(test_s)
            except ValueError:
                raise FileFormatError(p, f"non-numeric performance in {row!r}", lineno)
            try:
                table.add_record(dataset, arch, valid_perf, test_perf)
            except DataError as exc:
                raise FileFormatError(p, str(exc), lineno) from None
    return table


def write_bench_csv(table: BenchmarkTable, path):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_HEADER)
        for dataset in table.dataset_names():
            for key in sorted(table.records[dataset]):
                arch = parse_key(key)
                rec = table.records[dataset][key]
                writer.writerow(
                    [
                        dataset,
                        "-".join(str(i) for i in arch.macro),
                        "-".join(arch.ops),
                        repr(rec.valid_perf),
                        repr(rec.test_perf),
                    ]
                )
    return p


def attach_properties(table: BenchmarkTable, properties_dir):
    """Load properties/<dataset>.json for every dataset that has one."""
    from .properties import load_properties

    root = Path(properties_dir)
    if not root.is_dir():
        raise FileFormatError(root, "properties directory not found")
    for name in table.dataset_names():
        path = root / f"{name}.json"
        if path.is_file():
            table.set_properties(load_properties(path))
        else:
            log.warning("no property vector file for dataset %r", name)
    return table


def _normalized_values(table: BenchmarkTable, k: int) -> dict[str, float]:
    """Min-max normalized value of property k per dataset (NaN preserved)."""
    name = PROPERTY_NAMES[k]
    raw = {d: table.property_vectors[d].values[name] for d in table.property_vectors}
    finite = [v for v in raw.values() if np.isfinite(v)]
    if not finite:
        return {d: float("nan") for d in raw}
    lo, hi = min(finite), max(finite)
    span = hi - lo
    out = {}
    for d, v in raw.items():
        if not np.isfinite(v):
            out[d] = float("nan")
        elif span == 0.0:
            out[d] = 0.0
        else:
            out[d] = (v - lo) / span
    return out


def statistical_ranking(anchor: str, k: int, table: BenchmarkTable) -> list[str]:
    """Other datasets ordered by closeness to the anchor in property k.

    Distances use min-max normalized values over the table. Datasets whose
    value is NaN are left out (with a warning); a NaN anchor value is an error.
    """
    if not 0 <= k < NUM_PROPERTIES:
        raise DataError(f"property index {k} outside [0, {NUM_PROPERTIES})")
    if anchor not in table.property_vectors:
        raise DataError(f"no property vector for anchor {anchor!r}")
    norm = _normalized_values(table, k)
    if not np.isfinite(norm[anchor]):
        raise DataError(f"anchor {anchor!r} has NaN value for property {PROPERTY_NAMES[k]}")
    others = []
    for name in sorted(table.property_vectors):
        if name == anchor:
            continue
        if not np.isfinite(norm[name]):
            log.warning(
                "dataset %r excluded from statistical ranking on %s: NaN value",
                name,
                PROPERTY_NAMES[k],
            )
            continue
        others.append(name)
    return sorted(others, key=lambda d: (abs(norm[d] - norm[anchor]), d))


def transfer_scores(anchor: str, table: BenchmarkTable, n_m: int, er_mode: str = "best") -> dict[str, float]:
    """Transfer score of each source onto the anchor.

    A source's top-n_m architectures (by its own valid_perf) are looked up on
    the anchor; the score is their best (or mean) anchor valid_perf. A missing
    anchor record is an error naming the architecture.
    """
    if er_mode not in ER_MODES:
        raise DataError(f"er_mode must be one of {ER_MODES}, got {er_mode!r}")
    if n_m < 1:
        raise DataError(f"n_m must be >= 1, got {n_m}")
    scores = {}
    for source in table.dataset_names():
        if source == anchor:
            continue
        top = table.top_architectures(source, n_m)
        if not top:
            log.warning("source %r has no records; skipped in empirical ranking", source)
            continue
        perfs = [table.get_perf(anchor, key).valid_perf for key, _ in top]
        scores[source] = max(perfs) if er_mode == "best" else float(np.mean(perfs))
    return scores


def empirical_ranking(anchor: str, table: BenchmarkTable, n_m: int, er_mode: str = "best") -> list[str]:
    """Sources ordered by how well their top architectures transfer to the anchor."""
    scores = transfer_scores(anchor, table, n_m, er_mode)
    return sorted(scores, key=lambda d: (-scores[d], d))


@dataclass
class ConfidenceTable:
    """Per-anchor and averaged property confidences plus the selected filter."""

    per_anchor: dict[tuple[str, int], float]
    averaged: list[float]
    selected: list[int]
    n_f: int
    n_m: int
    er_mode: str = "best"

    def selected_names(self) -> list[str]:
        return [PROPERTY_NAMES[k] for k in self.selected]

    def to_json(self) -> dict:
        return {
            "n_f": self.n_f,
            "n_m": self.n_m,
            "er_mode": self.er_mode,
            "property_names": list(PROPERTY_NAMES),
            "averaged": [_json_float(v) for v in self.averaged],
            "selected": list(self.selected),
            "per_anchor": {
                f"{d}:{k}": _json_float(v) for (d, k), v in sorted(self.per_anchor.items())
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConfidenceTable":
        try:
            per_anchor = {}
            for key, val in obj["per_anchor"].items():
                d, _, k = key.rpartition(":")
                per_anchor[(d, int(k))] = _parse_float(val)
            return cls(
                per_anchor=per_anchor,
                averaged=[_parse_float(v) for v in obj["averaged"]],
                selected=[int(k) for k in obj["selected"]],
                n_f=int(obj["n_f"]),
                n_m=int(obj["n_m"]),
                er_mode=str(obj.get("er_mode", "best")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed confidence table object: {exc}") from exc


def _json_float(v: float):
    return "NaN" if not np.isfinite(v) else float(v)


def _parse_float(v) -> float:
    return float("nan") if v == "NaN" else float(v)


def save_confidence(conf: ConfidenceTable, path):
    Path(path).write_text(json.dumps(conf.to_json(), indent=2) + "\n")


def load_confidence(path) -> ConfidenceTable:
    p = Path(path)
    if not p.is_file():
        raise FileFormatError(p, "file not found")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(p, f"invalid JSON: {exc}") from exc
    return ConfidenceTable.from_json(obj)


def build_confidence(table: BenchmarkTable, n_f: int, n_m: int, er_mode: str = "best") -> ConfidenceTable:
    """Score every property by rank agreement between property distance and
    empirical transferability, averaged over anchors; select the top n_f.

    Per anchor and property, the correlation is tau-b between each source's
    rank by normalized property distance (ascending) and its rank in the
    empirical transfer ordering (descending performance). Anchors where the
    correlation is undefined contribute NaN and are skipped in the average;
    ties in the averaged scores break toward the lower property index.
    """
    if not 1 <= n_f <= NUM_PROPERTIES:
        raise DataError(f"n_f must be in [1, {NUM_PROPERTIES}], got {n_f}")
    anchors = [
        d for d in table.dataset_names() if d in table.property_vectors and table.records.get(d)
    ]
    if len(anchors) < 3:
        raise DataError(f"need at least 3 datasets with properties and records, got {len(anchors)}")

    per_anchor: dict[tuple[str, int], float] = {}
    for anchor in anchors:
        scores = transfer_scores(anchor, table, n_m, er_mode)
        sources = [d for d in anchors if d != anchor and d in scores]
        for k in range(NUM_PROPERTIES):
            norm = _normalized_values(table, k)
            usable = [d for d in sources if np.isfinite(norm[d])]
            if not np.isfinite(norm[anchor]) or len(usable) < 2:
                per_anchor[(anchor, k)] = float("nan")
                continue
            dists = np.array([abs(norm[d] - norm[anchor]) for d in usable])
            perfs = np.array([scores[d] for d in usable])
            # rank positions: ascending distance vs position in the
            # descending-performance empirical ordering
            per_anchor[(anchor, k)] = kendall_tau(rankdata(dists), rankdata(-perfs))

    averaged = []
    for k in range(NUM_PROPERTIES):
        vals = [per_anchor[(a, k)] for a in anchors if np.isfinite(per_anchor[(a, k)])]
        averaged.append(float(np.mean(vals)) if vals else float("nan"))

    # rank properties by averaged confidence, NaN last, ties to the lower index
    order = sorted(
        range(NUM_PROPERTIES),
        key=lambda k: (-(averaged[k] if np.isfinite(averaged[k]) else -np.inf), k),
    )
    return ConfidenceTable(
        per_anchor=per_anchor,
        averaged=averaged,
        selected=order[:n_f],
        n_f=n_f,
        n_m=n_m,
        er_mode=er_mode,
    )


class HitRateResult(NamedTuple):
    rate: float
    num_anchors: int


def hit_rate(
    table: BenchmarkTable,
    similarity_fn: Callable[[str, str], float],
    n_s: int,
    n_m: int = 30,
    er_mode: str = "best",
) -> HitRateResult:
    """Leave-one-out fraction of anchors whose empirically best source lands
    in the top-n_s of ``similarity_fn(anchor, source)``.

    The anchor's own records are read only to find its best source (that is
    the measurement); what the similarity closure may see is up to the caller.
    """
    anchors = [d for d in table.dataset_names() if table.records.get(d)]
    if n_s < 1 or n_s > len(anchors) - 1:
        raise DataError(f"n_s must be in [1, {len(anchors) - 1}], got {n_s}")
    hits = 0
    for anchor in anchors:
        scores = transfer_scores(anchor, table, n_m, er_mode)
        if not scores:
            continue
        best_source = min(scores, key=lambda d: (-scores[d], d))
        sims = {src: similarity_fn(anchor, src) for src in scores}
        top = sorted(sims, key=lambda d: (-sims[d], d))[:n_s]
        if best_source in top:
            hits += 1
    return HitRateResult(hits / len(anchors), len(anchors))


@dataclass
class BankEntry:
    properties: PropertyVector
    observed: dict[str, float] = field(default_factory=dict)


@dataclass
class SelfEvalBank:
    """Measured (properties, architecture performance) pairs from own runs."""

    entries: dict[str, BankEntry] = field(default_factory=dict)

    def upsert(self, dataset: str, properties: PropertyVector, observations: list[tuple[str, float]]):
        entry = self.entries.get(dataset)
        if entry is None:
            entry = BankEntry(properties=properties)
            self.entries[dataset] = entry
        else:
            entry.properties = properties
        for key, perf in observations:
            parse_key(key)  # validates
            entry.observed[key] = float(perf)

    def to_json(self) -> dict:
        return {
            "entries": {
                name: {
                    "properties": entry.properties.to_json(),
                    "observed": {k: entry.observed[k] for k in sorted(entry.observed)},
                }
                for name, entry in sorted(self.entries.items())
            }
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SelfEvalBank":
        bank = cls()
        try:
            for name, raw in obj.get("entries", {}).items():
                bank.entries[name] = BankEntry(
                    properties=PropertyVector.from_json(raw["properties"]),
                    observed={k: float(v) for k, v in raw.get("observed", {}).items()},
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed self-eval bank object: {exc}") from exc
        return bank


def save_bank(bank: SelfEvalBank, path):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(str(p) + ".lock"):
        p.write_text(json.dumps(bank.to_json(), indent=2) + "\n")


def load_bank(path) -> SelfEvalBank:
    p = Path(path)
    if not p.is_file():
        return SelfEvalBank()
    with FileLock(str(p) + ".lock"):
        try:
            obj = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise FileFormatError(p, f"invalid JSON: {exc}") from exc
    return SelfEvalBank.from_json(obj)
