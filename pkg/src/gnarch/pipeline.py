"""The design pipeline: retrieve knowledge, propose, evaluate, refine.

Phases, in order:

1. properties + confidence filter on the (optionally leave-one-out) bank,
2. similarity ranking with elicited property weights, pool assembly,
3. one initial proposal per pool entry, each distinct proposal evaluated once,
4. refinement: re-rank the pool by the initial proposals' measured
   performance, then per iteration crossover the incumbent with co-parents
   from the lower-ranked entries, promote the child the best-matching
   source's records endorse, let the meta-controller mutate it, and spend
   exactly one evaluation.

With the stub backend and a lookup evaluator the run is a pure function of
(bank, config, seed). In leave-one-out simulation every artifact refers to
the held-out dataset as UNSEEN; its real name never leaves the process.
"""

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, RecordMissingError
from .evaluator import (
    EvalRequest,
    ExternalEvaluator,
    LookupEvaluator,
    TrainerConfig,
)
from .graph_data import GraphDataset
from .knowledge_base import (
    BenchmarkTable,
    ConfidenceTable,
    SelfEvalBank,
    build_confidence,
    load_bank,
    save_bank,
)
from .llm_bridge import LlmBackend, LlmLog, elicit_weights, refine_mutate, suggest_initial
from .properties import (
    PROPERTY_NAMES,
    PropertyVector,
    SamplingConfig,
    compute_properties,
    property_lines,
)
from .search_space import Architecture, crossover, format_key, parse_key, validate
from .seeding import fold_seed
from .similarity import KnowledgePool, SimilarityScore, build_pool, rank_sources

log = logging.getLogger(__name__)

ANON_LABEL = "UNSEEN"


@dataclass
class PipelineConfig:
    n_f: int = 8
    n_s: int = 3
    n_m: int = 30
    n_c: int = 30
    max_trials: int = 30
    er_mode: str = "best"
    seed: int = 0
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    backend: LlmBackend = field(default_factory=LlmBackend)
    leave_one_out: str | None = None
    allow_simulation: bool = False
    trainer: TrainerConfig | None = None
    dataset_path: str | None = None
    bank_path: str | None = None

    def validate(self):
        if self.max_trials < self.n_s:
            raise DataError(
                f"max_trials ({self.max_trials}) must be >= n_s ({self.n_s}): "
                "initial proposals already spend one trial each"
            )
        for label, v in (("n_f", self.n_f), ("n_s", self.n_s), ("n_m", self.n_m), ("n_c", self.n_c)):
            if v < 1:
                raise DataError(f"{label} must be >= 1, got {v}")
        return self


@dataclass
class TrajectoryEntry:
    trial: int
    arch_key: str
    valid_perf: float
    origin: str  # "initial" | "refined"


@dataclass
class Trajectory:
    entries: list[TrajectoryEntry] = field(default_factory=list)
    eval_count: int = 0

    def keys(self) -> set[str]:
        return {e.arch_key for e in self.entries}

    def best(self) -> TrajectoryEntry:
        if not self.entries:
            raise DataError("empty trajectory has no best entry")
        return max(self.entries, key=lambda e: (e.valid_perf, -e.trial))

    def best_so_far(self) -> list[float]:
        out, cur = [], -np.inf
        for e in self.entries:
            cur = max(cur, e.valid_perf)
            out.append(cur)
        return out

    def render_for_prompt(self):
        return [(e.trial, e.arch_key, e.valid_perf) for e in self.entries]

    def to_jsonl(self, path):
        with Path(path).open("w") as fh:
            for e in self.entries:
                fh.write(
                    json.dumps(
                        {
                            "trial": e.trial,
                            "arch": e.arch_key,
                            "valid_perf": e.valid_perf,
                            "origin": e.origin,
                        }
                    )
                    + "\n"
                )

    @classmethod
    def from_jsonl(cls, path) -> "Trajectory":
        entries = []
        with Path(path).open() as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    entries.append(
                        TrajectoryEntry(
                            int(obj["trial"]), obj["arch"], float(obj["valid_perf"]), obj["origin"]
                        )
                    )
        return cls(entries=entries, eval_count=len(entries))


@dataclass
class EvalContext:
    """Process-internal evaluation handle; knows the real dataset name even
    when artifacts are anonymized."""

    evaluator: object
    real_name: str
    dataset_path: str | None
    lookup_table: BenchmarkTable | None

    def can_lookup(self, arch: Architecture) -> bool:
        if self.lookup_table is None:
            return True
        return self.lookup_table.has_record(self.real_name, format_key(arch))

    def recorded_keys(self) -> list[str]:
        if self.lookup_table is None:
            return []
        return sorted(self.lookup_table.records_for(self.real_name))


@dataclass
class InitialResult:
    initials: list[tuple[Architecture, float]]
    pool: KnowledgePool
    confidence: ConfidenceTable
    ranking: list[SimilarityScore]
    weights: object
    properties: PropertyVector
    unseen_text: str
    trajectory: Trajectory
    label: str
    ctx: EvalContext


def _resolve_unseen(unseen, table: BenchmarkTable, cfg: PipelineConfig):
    """Work out the exclusion view, the anonymization label and the property
    vector for either a live GraphDataset or a named in-bank simulation."""
    if isinstance(unseen, str):
        excluded = cfg.leave_one_out or unseen
        if excluded != unseen:
            raise DataError(
                f"simulated unseen {unseen!r} conflicts with leave_one_out={cfg.leave_one_out!r}"
            )
        if unseen not in table.property_vectors:
            raise DataError(f"simulated unseen {unseen!r} has no property vector in the table")
        real_name = unseen
        stored = table.property_vectors[unseen]
        props = PropertyVector(
            dataset=ANON_LABEL, values=dict(stored.values), seed=stored.seed,
            sample_size=stored.sample_size,
        )
    else:
        real_name = unseen.name
        excluded = cfg.leave_one_out
        props = compute_properties(unseen, cfg.sampling)
        if excluded:
            props = PropertyVector(
                dataset=ANON_LABEL, values=dict(props.values), seed=props.seed,
                sample_size=props.sample_size,
            )
    view = table.exclude_dataset(excluded) if excluded else table
    if not excluded and real_name in table.datasets:
        raise DataError(
            f"dataset {real_name!r} appears in the bank; pass leave_one_out to exclude it"
        )
    label = ANON_LABEL if excluded else real_name
    return view, excluded, label, real_name, props


def _make_ctx(table: BenchmarkTable, cfg: PipelineConfig, excluded: str | None, real_name: str) -> EvalContext:
    if cfg.trainer is not None:
        return EvalContext(
            evaluator=ExternalEvaluator(cfg.trainer),
            real_name=real_name,
            dataset_path=cfg.dataset_path,
            lookup_table=None,
        )
    evaluator = LookupEvaluator(
        table,
        allow_simulation=cfg.allow_simulation,
        excluded={excluded} if excluded else frozenset(),
    )
    return EvalContext(
        evaluator=evaluator, real_name=real_name, dataset_path=None, lookup_table=table
    )


def run_initial(
    unseen,
    table: BenchmarkTable,
    cfg: PipelineConfig,
    llm_log: LlmLog | None = None,
    self_eval_bank: SelfEvalBank | None = None,
) -> InitialResult:
    """Phases 1-3: filter, rank, pool, one evaluated proposal per pool entry.

    ``unseen`` is a GraphDataset, or the name of a bank dataset to hold out
    and simulate. Duplicate suggestions across pool entries are evaluated
    once and share the measured performance.
    """
    cfg.validate()
    view, excluded, label, real_name, props = _resolve_unseen(unseen, table, cfg)
    forbidden = (excluded,) if excluded else ()

    conf = build_confidence(view, cfg.n_f, cfg.n_m, cfg.er_mode)
    unseen_text = property_lines(props.values)
    weights = elicit_weights(conf.selected, unseen_text, cfg.backend, llm_log, forbidden=forbidden)
    ranking = rank_sources(props, view, conf, weights)
    pool = build_pool(ranking, view, cfg.n_s, cfg.n_m)

    ctx = _make_ctx(table, cfg, excluded, real_name)
    trajectory = Trajectory()
    measured: dict[str, float] = {}
    initials: list[tuple[Architecture, float]] = []
    for entry in pool.entries:
        arch = suggest_initial(entry, unseen_text, cfg.backend, llm_log, forbidden=forbidden)
        key = format_key(arch)
        if key not in measured:
            result = ctx.evaluator.evaluate(
                EvalRequest(
                    dataset=real_name,
                    arch=arch,
                    seed=fold_seed(cfg.seed, "initial", len(measured)),
                    dataset_path=ctx.dataset_path,
                )
            )
            measured[key] = result.valid_perf
            trajectory.entries.append(
                TrajectoryEntry(len(trajectory.entries) + 1, key, result.valid_perf, "initial")
            )
        else:
            log.info("pool entry %r repeated an initial proposal; evaluation reused", entry.source)
        initials.append((arch, measured[key]))
    trajectory.eval_count = ctx.evaluator.eval_count if hasattr(ctx.evaluator, "eval_count") else len(measured)

    if self_eval_bank is None and cfg.bank_path:
        self_eval_bank = load_bank(cfg.bank_path)
    if self_eval_bank is not None:
        self_eval_bank.upsert(label, props, [(k, p) for k, p in measured.items()])
        if cfg.bank_path:
            save_bank(self_eval_bank, cfg.bank_path)

    return InitialResult(
        initials=initials,
        pool=pool,
        confidence=conf,
        ranking=ranking,
        weights=weights,
        properties=props,
        unseen_text=unseen_text,
        trajectory=trajectory,
        label=label,
        ctx=ctx,
    )


def promote(candidates: list[Architecture], k1_source: str, table: BenchmarkTable, seed: int = 0) -> Architecture | None:
    """The candidate the best-matching source's records endorse.

    Candidates without a record on that source are skipped; if none has one,
    a seeded random candidate is returned with a warning. Ties break by
    lexicographic architecture key. None when there are no candidates.
    """
    if not candidates:
        return None
    scored = []
    for arch in candidates:
        key = format_key(arch)
        if table.has_record(k1_source, key):
            scored.append((table.get_perf(k1_source, key).valid_perf, key, arch))
    if not scored:
        log.warning(
            "no candidate has a record on source %r; falling back to a seeded random candidate",
            k1_source,
        )
        rng = random.Random(seed)
        return rng.choice(sorted(candidates, key=format_key))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored[0][2]


def _fallback_candidate(ctx: EvalContext, evaluated: set[str], rng: random.Random) -> Architecture:
    if ctx.lookup_table is not None:
        available = [k for k in ctx.recorded_keys() if k not in evaluated]
        if not available:
            raise DataError(
                f"lookup table for the unseen dataset is exhausted after {len(evaluated)} evaluations"
            )
        return parse_key(rng.choice(available))
    from .search_space import MACRO_PATTERNS, OPERATIONS

    for _ in range(10000):
        arch = Architecture(
            rng.choice(MACRO_PATTERNS), tuple(rng.choice(OPERATIONS) for _ in range(4))
        )
        if format_key(arch) not in evaluated:
            return arch
    raise DataError("could not draw an unevaluated architecture")


def run_refinement(
    initial: InitialResult,
    table: BenchmarkTable,
    cfg: PipelineConfig,
    llm_log: LlmLog | None = None,
) -> Trajectory:
    """Phase 4: iterate crossover -> promote -> mutate -> evaluate until the
    trial budget is spent. Exactly one evaluation per iteration."""
    cfg.validate()
    trajectory = initial.trajectory
    if not trajectory.entries:
        raise DataError("run_refinement needs at least one evaluated initial proposal")

    # re-rank pool entries by their own proposal's measured performance
    order = sorted(
        range(len(initial.pool.entries)),
        key=lambda i: (-initial.initials[i][1], i),
    )
    ranked_entries = [initial.pool.entries[i] for i in order]
    k1 = ranked_entries[0]
    co_parent_keys: list[str] = []
    for entry in ranked_entries[1:]:
        for key, _ in entry.top_models:
            if key not in co_parent_keys:
                co_parent_keys.append(key)
    if not co_parent_keys:
        log.warning("no co-parents available (n_s=1); refinement mutates the incumbent directly")

    best_key, best_perf = max(
        ((e.arch_key, e.valid_perf) for e in trajectory.entries), key=lambda t: (t[1], t[0])
    )
    incumbent = parse_key(best_key)
    evaluated = trajectory.keys()
    forbidden = tuple(n for n in (initial.ctx.real_name,) if initial.label == ANON_LABEL)

    for trial in range(len(trajectory.entries) + 1, cfg.max_trials + 1):
        rng = random.Random(fold_seed(cfg.seed, "iter", trial))
        candidates: list[Architecture] = []
        seen = set(evaluated)
        parents = list(co_parent_keys)
        rng.shuffle(parents)
        for idx, parent_key in enumerate(parents):
            need = cfg.n_c - len(candidates)
            if need <= 0:
                break
            children = crossover(
                incumbent, parse_key(parent_key), need, fold_seed(cfg.seed, "cx", trial, idx)
            )
            for child in children:
                key = format_key(child)
                if key not in seen:
                    seen.add(key)
                    candidates.append(child)

        promoted = promote(candidates, k1.source, table, seed=fold_seed(cfg.seed, "promote", trial))
        if promoted is None:
            promoted = _fallback_candidate(initial.ctx, evaluated, rng)
            log.warning("trial %d: empty candidate set; seeded fallback candidate used", trial)

        mutated = refine_mutate(
            promoted,
            trajectory.render_for_prompt(),
            k1,
            cfg.backend,
            avoid=evaluated,
            llm_log=llm_log,
            unseen_text=initial.unseen_text,
            forbidden=forbidden,
        )

        chosen = None
        for candidate in (mutated, promoted):
            key = format_key(candidate)
            if validate(candidate) or key in evaluated:
                continue
            if not initial.ctx.can_lookup(candidate):
                log.warning(
                    "trial %d: proposal %s has no record for the unseen dataset; "
                    "falling back to the promoted candidate",
                    trial,
                    key,
                )
                continue
            chosen = candidate
            break
        if chosen is None:
            chosen = _fallback_candidate(initial.ctx, evaluated, rng)
            log.warning("trial %d: proposals unevaluable; seeded fallback candidate used", trial)

        result = initial.ctx.evaluator.evaluate(
            EvalRequest(
                dataset=initial.ctx.real_name,
                arch=chosen,
                seed=fold_seed(cfg.seed, "eval", trial),
                dataset_path=initial.ctx.dataset_path,
            )
        )
        key = format_key(chosen)
        evaluated.add(key)
        trajectory.entries.append(TrajectoryEntry(trial, key, result.valid_perf, "refined"))
        if result.valid_perf > best_perf:
            best_perf = result.valid_perf
            incumbent = chosen

    trajectory.eval_count = (
        initial.ctx.evaluator.eval_count
        if hasattr(initial.ctx.evaluator, "eval_count")
        else len(trajectory.entries)
    )
    return trajectory


def rank_percentile(table: BenchmarkTable, dataset: str, valid_perf: float) -> float:
    """Share of recorded architectures strictly better than valid_perf, in %."""
    records = table.records_for(dataset)
    if not records:
        raise DataError(f"dataset {dataset!r} has no records to rank against")
    better = sum(1 for rec in records.values() if rec.valid_perf > valid_perf)
    return 100.0 * better / len(records)


def random_search_baseline(table: BenchmarkTable, dataset: str, trials: int, seed: int) -> list[float]:
    """Best-so-far curve of uniform sampling without replacement over the
    dataset's recorded architectures."""
    keys = sorted(table.records_for(dataset))
    if trials > len(keys):
        raise DataError(f"{trials} trials exceed {len(keys)} recorded architectures")
    rng = random.Random(seed)
    picks = rng.sample(keys, trials)
    best, out = -np.inf, []
    for key in picks:
        best = max(best, table.get_perf(dataset, key).valid_perf)
        out.append(best)
    return out


def report(
    trajectory: Trajectory,
    pool: KnowledgePool,
    conf: ConfidenceTable,
    ranking: list[SimilarityScore],
    out_dir,
    *,
    cfg: PipelineConfig,
    label: str,
    weights=None,
    table: BenchmarkTable | None = None,
    simulated_name: str | None = None,
) -> dict:
    """Write the run bundle and return the report summary.

    Files: report.json, trajectory.jsonl, best_so_far.csv, similarity.csv,
    confidence.csv, pool.json, run_config.json, similarity_report.json.
    In leave-one-out mode ``label`` is the anonymized token and nothing in
    the bundle names the held-out dataset (percentiles are computed through
    the process-internal name, which is not written).
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    trajectory.to_jsonl(root / "trajectory.jsonl")

    with (root / "best_so_far.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "arch", "valid_perf", "best_so_far", "origin"])
        for entry, best in zip(trajectory.entries, trajectory.best_so_far()):
            writer.writerow([entry.trial, entry.arch_key, repr(entry.valid_perf), repr(best), entry.origin])

    with (root / "similarity.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "source", "score"])
        for i, s in enumerate(ranking, start=1):
            writer.writerow([i, s.source, "NaN" if not np.isfinite(s.score) else repr(s.score)])

    with (root / "confidence.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "property", "averaged_confidence", "selected"])
        for k, name in enumerate(PROPERTY_NAMES):
            val = conf.averaged[k]
            writer.writerow(
                [k, name, "NaN" if not np.isfinite(val) else repr(val), int(k in conf.selected)]
            )

    (root / "pool.json").write_text(json.dumps(pool.to_json(), indent=2) + "\n")

    sim_report = {
        "unseen": label,
        "weights": {
            str(k): w for k, w in (weights.weights.items() if weights is not None else [])
        },
        "weight_source": getattr(weights, "source", "uniform"),
        "selected_properties": conf.selected_names(),
        "ranking": [s.to_json() for s in ranking],
    }
    (root / "similarity_report.json").write_text(json.dumps(sim_report, indent=2) + "\n")

    run_config = {
        "unseen": label,
        "leave_one_out": label == ANON_LABEL,
        "seed": cfg.seed,
        "n_f": cfg.n_f,
        "n_s": cfg.n_s,
        "n_m": cfg.n_m,
        "n_c": cfg.n_c,
        "max_trials": cfg.max_trials,
        "er_mode": cfg.er_mode,
        "backend": cfg.backend.kind,
        "evaluator": "trainer" if cfg.trainer is not None else "lookup",
    }
    (root / "run_config.json").write_text(json.dumps(run_config, indent=2) + "\n")

    best = trajectory.best()
    initial_entries = [e for e in trajectory.entries if e.origin == "initial"]
    initial_best = max(initial_entries, key=lambda e: (e.valid_perf, -e.trial)) if initial_entries else None
    summary = {
        "unseen": label,
        "best": {"arch": best.arch_key, "valid_perf": best.valid_perf, "trial": best.trial},
        "initial_best": (
            {"arch": initial_best.arch_key, "valid_perf": initial_best.valid_perf}
            if initial_best
            else None
        ),
        "eval_count": trajectory.eval_count,
        "trials": len(trajectory.entries),
    }
    if table is not None and simulated_name is not None:
        summary["rank_percentile_final"] = rank_percentile(table, simulated_name, best.valid_perf)
        if initial_best is not None:
            summary["rank_percentile_initial"] = rank_percentile(
                table, simulated_name, initial_best.valid_perf
            )
    (root / "report.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def run_design(
    unseen,
    table: BenchmarkTable,
    cfg: PipelineConfig,
    out_dir=None,
    init_only: bool = False,
):
    """Convenience wrapper: run_initial, optionally run_refinement, report."""
    llm_log = LlmLog(Path(out_dir) / "llm_log.jsonl" if out_dir else None)
    initial = run_initial(unseen, table, cfg, llm_log=llm_log)
    trajectory = initial.trajectory if init_only else run_refinement(initial, table, cfg, llm_log=llm_log)
    summary = None
    if out_dir is not None:
        simulated = initial.ctx.real_name if isinstance(unseen, str) else None
        summary = report(
            trajectory,
            initial.pool,
            initial.confidence,
            initial.ranking,
            out_dir,
            cfg=cfg,
            label=initial.label,
            weights=initial.weights,
            table=table if simulated else None,
            simulated_name=simulated,
        )
    if isinstance(initial.ctx.evaluator, ExternalEvaluator):
        initial.ctx.evaluator.close()
    return initial, trajectory, summary
