"""Property-based task similarity and knowledge-pool assembly.

A source dataset's similarity to the unseen graph averages, over the
selected properties, the confidence-weighted closeness term

    weight_k * confidence_k / (1 + distance_k)

where distance_k is the absolute difference of min-max normalized property
values (bounds spanning the bank plus the unseen vector). Terms whose
weight, confidence or either value is NaN are skipped and the denominator
shrinks accordingly.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataError, FileFormatError
from .knowledge_base import BenchmarkTable, ConfidenceTable, build_confidence
from .properties import PROPERTY_NAMES, PropertyVector

log = logging.getLogger(__name__)


@dataclass
class WeightVector:
    """Per-selected-property weights in [0, 1] with their provenance."""

    weights: dict[int, float]
    source: str = "uniform"  # "uniform" | "llm"
    raw_response: str | None = None

    def __post_init__(self):
        clamped = {}
        for k, w in self.weights.items():
            w = float(w)
            if not np.isfinite(w):
                raise DataError(f"weight for property {k} is not finite")
            clamped[int(k)] = min(1.0, max(0.0, w))
        self.weights = clamped


def uniform_weights(selected: list[int]) -> WeightVector:
    return WeightVector(weights={k: 1.0 for k in selected}, source="uniform")


class PropertyTerm(NamedTuple):
    index: int
    name: str
    weight: float
    confidence: float
    distance: float
    term: float


@dataclass
class SimilarityScore:
    source: str
    score: float
    terms: list[PropertyTerm]
    skipped: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "score": _json_float(self.score),
            "skipped": list(self.skipped),
            "terms": [
                {
                    "index": t.index,
                    "name": t.name,
                    "weight": t.weight,
                    "confidence": t.confidence,
                    "distance": t.distance,
                    "term": t.term,
                }
                for t in self.terms
            ],
        }


def _json_float(v: float):
    return "NaN" if not np.isfinite(v) else float(v)


def combine_terms(weights, confidences, distances) -> tuple[float, list[float]]:
    """The bare aggregation: mean over k of w_k * c_k / (1 + d_k)."""
    weights = list(weights)
    confidences = list(confidences)
    distances = list(distances)
    if not (len(weights) == len(confidences) == len(distances)):
        raise DataError("combine_terms needs three equal-length lists")
    if not weights:
        raise DataError("combine_terms needs at least one property term")
    terms = [w * c / (1.0 + d) for w, c, d in zip(weights, confidences, distances)]
    return float(np.mean(terms)), terms


def norm_bounds(table: BenchmarkTable, extra: PropertyVector | None = None) -> dict[int, tuple[float, float]]:
    """Per-property (min, max) over the bank's vectors plus an optional extra."""
    vectors = list(table.property_vectors.values())
    if extra is not None:
        vectors.append(extra)
    if not vectors:
        raise DataError("no property vectors available for normalization bounds")
    bounds = {}
    for k, name in enumerate(PROPERTY_NAMES):
        vals = [v.values[name] for v in vectors if np.isfinite(v.values[name])]
        bounds[k] = (min(vals), max(vals)) if vals else (float("nan"), float("nan"))
    return bounds


def _normalize(value: float, lo: float, hi: float) -> float:
    if not np.isfinite(value) or not np.isfinite(lo) or not np.isfinite(hi):
        return float("nan")
    if hi == lo:
        return 0.0
    return (value - lo) / (hi - lo)


def similarity_score(
    unseen: PropertyVector,
    source: PropertyVector,
    conf: ConfidenceTable,
    weights: WeightVector,
    bounds: dict[int, tuple[float, float]],
) -> SimilarityScore:
    """Score one source against the unseen vector over the selected properties."""
    if not conf.selected:
        raise DataError("confidence table selects no properties")
    terms: list[PropertyTerm] = []
    skipped: list[int] = []
    for k in conf.selected:
        name = PROPERTY_NAMES[k]
        w = weights.weights.get(k)
        c = conf.averaged[k]
        lo, hi = bounds[k]
        nu = _normalize(unseen.values[name], lo, hi)
        ns = _normalize(source.values[name], lo, hi)
        if w is None or not np.isfinite(c) or not np.isfinite(nu) or not np.isfinite(ns):
            skipped.append(k)
            log.warning(
                "similarity term for property %s skipped on source %r "
                "(weight/confidence/value unavailable)",
                name,
                source.dataset,
            )
            continue
        d = abs(nu - ns)
        terms.append(PropertyTerm(k, name, w, c, d, w * c / (1.0 + d)))
    if not terms:
        log.warning("no usable similarity terms for source %r; score is NaN", source.dataset)
        return SimilarityScore(source.dataset, float("nan"), [], skipped)
    score = float(np.mean([t.term for t in terms]))
    return SimilarityScore(source.dataset, score, terms, skipped)


def rank_sources(
    unseen: PropertyVector,
    table: BenchmarkTable,
    conf: ConfidenceTable,
    weights: WeightVector | None = None,
) -> list[SimilarityScore]:
    """All bank datasets scored against the unseen vector, best first.

    The unseen dataset must not itself be in the table (leave-one-out views
    are built with exclude_dataset before ranking). Ties break alphabetically.
    """
    if unseen.dataset in table.datasets:
        raise DataError(
            f"unseen dataset {unseen.dataset!r} is still present in the table; "
            "exclude it before ranking"
        )
    sources = [d for d in table.dataset_names() if d in table.property_vectors]
    if not sources:
        raise DataError("table has no datasets with property vectors")
    if weights is None:
        weights = uniform_weights(list(conf.selected))
    bounds = norm_bounds(table, extra=unseen)
    scores = [
        similarity_score(unseen, table.property_vectors[d], conf, weights, bounds)
        for d in sources
    ]
    def sort_key(s: SimilarityScore):
        return (-(s.score if np.isfinite(s.score) else -np.inf), s.source)
    return sorted(scores, key=sort_key)


def loo_property_similarity(table: BenchmarkTable, n_f: int = 8, n_m: int = 30, er_mode: str = "best"):
    """A (anchor, source) -> score closure for retrieval evaluation.

    Each anchor is held out of the table, confidence is rebuilt on the rest,
    and sources are scored with uniform weights. Results are cached per
    anchor so an n-anchor sweep builds n views, not n*(n-1).
    """
    cache: dict[str, dict[str, float]] = {}

    def fn(anchor: str, source: str) -> float:
        if anchor not in cache:
            view = table.exclude_dataset(anchor)
            conf = build_confidence(view, n_f, n_m, er_mode)
            ranking = rank_sources(table.property_vectors[anchor], view, conf)
            cache[anchor] = {s.source: s.score for s in ranking}
        return cache[anchor][source]

    return fn


@dataclass
class PoolEntry:
    source: str
    similarity: float
    top_models: list[tuple[str, float]]  # (arch key, source valid_perf), best first


@dataclass
class KnowledgePool:
    entries: list[PoolEntry]

    def to_json(self) -> dict:
        return {
            "entries": [
                {
                    "source": e.source,
                    "similarity": _json_float(e.similarity),
                    "top_models": [
                        {"arch": key, "valid_perf": perf} for key, perf in e.top_models
                    ],
                }
                for e in self.entries
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KnowledgePool":
        try:
            entries = [
                PoolEntry(
                    source=e["source"],
                    similarity=float("nan") if e["similarity"] == "NaN" else float(e["similarity"]),
                    top_models=[(m["arch"], float(m["valid_perf"])) for m in e["top_models"]],
                )
                for e in obj["entries"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed pool object: {exc}") from exc
        return cls(entries)


def build_pool(ranking: list[SimilarityScore], table: BenchmarkTable, n_s: int, n_m: int) -> KnowledgePool:
    """Top-n_s ranked sources, each carrying its top-n_m recorded models."""
    if n_s < 1:
        raise DataError(f"n_s must be >= 1, got {n_s}")
    if n_m < 1:
        raise DataError(f"n_m must be >= 1, got {n_m}")
    if len(ranking) < n_s:
        log.warning("only %d ranked sources available for n_s=%d; using all", len(ranking), n_s)
    entries = []
    for score in ranking[:n_s]:
        top = table.top_architectures(score.source, n_m)
        if len(top) < n_m:
            log.warning(
                "source %r has only %d recorded architectures (n_m=%d)",
                score.source,
                len(top),
                n_m,
            )
        if not top:
            raise DataError(f"source {score.source!r} has no records to pool")
        entries.append(PoolEntry(source=score.source, similarity=score.score, top_models=top))
    return KnowledgePool(entries)


def save_pool(pool: KnowledgePool, path):
    Path(path).write_text(json.dumps(pool.to_json(), indent=2) + "\n")


def load_pool(path) -> KnowledgePool:
    p = Path(path)
    if not p.is_file():
        raise FileFormatError(p, "file not found")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(p, f"invalid JSON: {exc}") from exc
    return KnowledgePool.from_json(obj)
