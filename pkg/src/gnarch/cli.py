"""Command line front end.

Subcommands: properties, confidence, similar, design, reeval, import-bench.
Exit codes: 0 success, 1 usage error, 2 data/format error, 3 backend error.
Flag precedence: built-in defaults < --config JSON < explicit flags.
"""

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

from .errors import BackendError, DataError, GnarchError
from .evaluator import (
    EvalRequest,
    LookupEvaluator,
    TrainerConfig,
    evaluate_external,
)
from .graph_data import load_dataset
from .knowledge_base import (
    BenchmarkTable,
    attach_properties,
    build_confidence,
    load_confidence,
    read_bench_csv,
    save_confidence,
    write_bench_csv,
)
from .llm_bridge import LlmBackend
from .pipeline import PipelineConfig, run_design
from .properties import (
    SamplingConfig,
    compute_properties,
    load_properties,
    property_lines,
    save_properties,
)
from .search_space import parse_key
from .seeding import fold_seed
from .similarity import rank_sources, uniform_weights

log = logging.getLogger(__name__)

# config keys a --config file may set; anything else is rejected loudly
CONFIG_KEYS = {
    "n_f", "n_s", "n_m", "n_c", "max_trials", "er_mode", "seed",
    "sample_nodes", "pair_samples", "backend", "model", "endpoint",
    "temperature", "trainer_command", "trainer_url", "out_dir",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_config(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError(f"config {path} must hold a JSON object")
    unknown = sorted(set(obj) - CONFIG_KEYS)
    if unknown:
        raise DataError(f"config {path} has unknown keys: {', '.join(unknown)}")
    return obj


def _merge(args, config: dict, key: str, default):
    """Explicit flag wins, then config file, then the default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in config:
        return config[key]
    return default


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    p.add_argument("--config", default=None, help="JSON file with defaults for tuning knobs")
    p.add_argument("--out-dir", default=None, help="directory for output artifacts")


def _backend_from(args, config) -> LlmBackend:
    kind = _merge(args, config, "backend", "stub")
    return LlmBackend(
        kind=kind,
        model=_merge(args, config, "model", "stub"),
        endpoint=_merge(args, config, "endpoint", None),
        temperature=float(_merge(args, config, "temperature", 0.0)),
        seed=_merge(args, config, "seed", 0),
    )


def _sampling_from(args, config) -> SamplingConfig:
    return SamplingConfig(
        max_nodes=int(_merge(args, config, "sample_nodes", 1000)),
        pair_samples=int(_merge(args, config, "pair_samples", 10000)),
        seed=int(_merge(args, config, "seed", 0)),
    )


def _load_table(bench_path, properties_dir=None) -> BenchmarkTable:
    table = read_bench_csv(bench_path)
    if properties_dir:
        attach_properties(table, properties_dir)
    return table


def build_parser() -> _Parser:
    parser = _Parser(prog="gnarch", description="knowledge-guided GNN architecture design")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("properties", parents=[], help="compute the 16 graph properties of a dataset")
    p.add_argument("dataset", help="dataset directory (meta.json, edges.tsv, ...)")
    p.add_argument("--sample-nodes", type=int, default=None, dest="sample_nodes")
    p.add_argument("--pair-samples", type=int, default=None, dest="pair_samples")
    _add_common(p)

    p = sub.add_parser("confidence", help="score how well each property predicts transfer")
    p.add_argument("bench", help="benchmark CSV (dataset,macro,ops,valid_perf,test_perf)")
    p.add_argument("--properties-dir", required=True, help="directory of <dataset>.json property files")
    p.add_argument("--n-f", type=int, default=None, dest="n_f")
    p.add_argument("--n-m", type=int, default=None, dest="n_m")
    p.add_argument("--er-mode", choices=("best", "mean"), default=None, dest="er_mode")
    _add_common(p)

    p = sub.add_parser("similar", help="rank bank datasets by similarity to an unseen one")
    p.add_argument("bench")
    p.add_argument("--properties-dir", required=True)
    p.add_argument("--unseen", required=True, help="properties JSON of the unseen dataset")
    p.add_argument("--confidence", default=None, help="reuse a stored confidence JSON")
    p.add_argument("--n-f", type=int, default=None, dest="n_f")
    p.add_argument("--n-m", type=int, default=None, dest="n_m")
    p.add_argument("--n-s", type=int, default=None, dest="n_s")
    p.add_argument("--er-mode", choices=("best", "mean"), default=None, dest="er_mode")
    _add_common(p)

    p = sub.add_parser("design", help="run the full design loop for an unseen dataset")
    p.add_argument("bench")
    p.add_argument("--properties-dir", required=True)
    p.add_argument("--dataset", default=None, help="dataset directory of the unseen graph")
    p.add_argument(
        "--simulate",
        default=None,
        metavar="NAME",
        help="leave this bank dataset out and design for it against its own records",
    )
    p.add_argument("--n-f", type=int, default=None, dest="n_f")
    p.add_argument("--n-s", type=int, default=None, dest="n_s")
    p.add_argument("--n-m", type=int, default=None, dest="n_m")
    p.add_argument("--n-c", type=int, default=None, dest="n_c")
    p.add_argument("--max-trials", type=int, default=None, dest="max_trials")
    p.add_argument("--er-mode", choices=("best", "mean"), default=None, dest="er_mode")
    p.add_argument("--backend", choices=("stub", "http"), default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--trainer-command", default=None, dest="trainer_command",
                   help="spawn this command and evaluate over the stdio protocol")
    p.add_argument("--trainer-url", default=None, dest="trainer_url",
                   help="evaluate via HTTP POST to this endpoint")
    p.add_argument("--bank", default=None, help="self-evaluation bank JSON to update")
    p.add_argument("--init-only", action="store_true", help="stop after the initial proposals")
    _add_common(p)

    p = sub.add_parser("reeval", help="evaluate one architecture on one dataset")
    p.add_argument("arch", help="architecture key, e.g. \"macro:[0,0,1,3]|ops:[gcn,gat,sage,gin]\"")
    p.add_argument("--dataset-name", required=True, dest="dataset_name")
    p.add_argument("--bench", default=None, help="lookup mode: benchmark CSV holding the record")
    p.add_argument("--dataset", default=None, help="trainer mode: dataset directory")
    p.add_argument("--trainer-command", default=None, dest="trainer_command")
    p.add_argument("--trainer-url", default=None, dest="trainer_url")
    _add_common(p)

    p = sub.add_parser("import-bench", help="validate and normalize a benchmark CSV")
    p.add_argument("src", help="CSV to import")
    p.add_argument("dest", help="normalized CSV to write")
    _add_common(p)

    return parser


def _cmd_properties(args, config) -> int:
    dataset = load_dataset(args.dataset)
    sampling = _sampling_from(args, config)
    vec = compute_properties(dataset, sampling)
    print(property_lines(vec.values))
    out_dir = _merge(args, config, "out_dir", None)
    if out_dir:
        path = Path(out_dir) / f"{dataset.name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_properties(vec, path)
        print(f"wrote {path}")
    return 0


def _cmd_confidence(args, config) -> int:
    table = _load_table(args.bench, args.properties_dir)
    conf = build_confidence(
        table,
        n_f=int(_merge(args, config, "n_f", 8)),
        n_m=int(_merge(args, config, "n_m", 30)),
        er_mode=_merge(args, config, "er_mode", "best"),
    )
    for k, name in zip(conf.selected, conf.selected_names()):
        print(f"{name}: {conf.averaged[k]:.6f}")
    out_dir = _merge(args, config, "out_dir", None)
    if out_dir:
        path = Path(out_dir) / "confidence.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_confidence(conf, path)
        print(f"wrote {path}")
    return 0


def _cmd_similar(args, config) -> int:
    table = _load_table(args.bench, args.properties_dir)
    unseen = load_properties(args.unseen)
    if args.confidence:
        conf = load_confidence(args.confidence)
    else:
        view = table.exclude_dataset(unseen.dataset) if unseen.dataset in table.datasets else table
        conf = build_confidence(
            view,
            n_f=int(_merge(args, config, "n_f", 8)),
            n_m=int(_merge(args, config, "n_m", 30)),
            er_mode=_merge(args, config, "er_mode", "best"),
        )
    if unseen.dataset in table.datasets:
        table = table.exclude_dataset(unseen.dataset)
    ranking = rank_sources(unseen, table, conf, uniform_weights(list(conf.selected)))
    n_s = int(_merge(args, config, "n_s", 3))
    for i, score in enumerate(ranking, start=1):
        marker = " *" if i <= n_s else ""
        val = "NaN" if not np.isfinite(score.score) else f"{score.score:.6f}"
        print(f"{i}. {score.source}: {val}{marker}")
    out_dir = _merge(args, config, "out_dir", None)
    if out_dir:
        path = Path(out_dir) / "similarity.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps([s.to_json() for s in ranking], indent=2) + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_design(args, config) -> int:
    if (args.dataset is None) == (args.simulate is None):
        raise DataError("design needs exactly one of --dataset or --simulate")
    table = _load_table(args.bench, args.properties_dir)
    trainer = None
    cmd = _merge(args, config, "trainer_command", None)
    url = _merge(args, config, "trainer_url", None)
    if cmd or url:
        trainer = TrainerConfig(command=shlex.split(cmd) if cmd else None, url=url)

    cfg = PipelineConfig(
        n_f=int(_merge(args, config, "n_f", 8)),
        n_s=int(_merge(args, config, "n_s", 3)),
        n_m=int(_merge(args, config, "n_m", 30)),
        n_c=int(_merge(args, config, "n_c", 30)),
        max_trials=int(_merge(args, config, "max_trials", 30)),
        er_mode=_merge(args, config, "er_mode", "best"),
        seed=int(_merge(args, config, "seed", 0)),
        sampling=_sampling_from(args, config),
        backend=_backend_from(args, config),
        trainer=trainer,
        bank_path=args.bank,
        dataset_path=args.dataset,
    )
    if args.simulate:
        if trainer is not None:
            raise DataError("--simulate runs against recorded results; drop the trainer flags")
        cfg.leave_one_out = args.simulate
        cfg.allow_simulation = True
        unseen = args.simulate
    else:
        if trainer is None:
            raise DataError(
                "a live dataset needs --trainer-command or --trainer-url; "
                "use --simulate NAME to replay a dataset already in the bench"
            )
        unseen = load_dataset(args.dataset)
        if unseen.name in table.datasets:
            cfg.leave_one_out = unseen.name

    out_dir = _merge(args, config, "out_dir", "runs/design")
    _, trajectory, summary = run_design(unseen, table, cfg, out_dir=out_dir, init_only=args.init_only)
    best = trajectory.best()
    print(f"best architecture: {best.arch_key}")
    print(f"valid_perf: {best.valid_perf:.6f} (trial {best.trial} of {len(trajectory.entries)})")
    if summary and "rank_percentile_final" in summary:
        print(f"rank percentile: {summary['rank_percentile_final']:.2f}%")
    print(f"artifacts in {out_dir}")
    return 0


def _cmd_reeval(args, config) -> int:
    arch = parse_key(args.arch)
    if args.bench:
        table = read_bench_csv(args.bench)
        evaluator = LookupEvaluator(table)
        result = evaluator.evaluate(EvalRequest(dataset=args.dataset_name, arch=arch))
    elif args.trainer_command or args.trainer_url:
        if not args.dataset:
            raise DataError("trainer mode needs --dataset")
        trainer = TrainerConfig(
            command=shlex.split(args.trainer_command) if args.trainer_command else None,
            url=args.trainer_url,
        )
        seed = int(_merge(args, config, "seed", 0))
        result = evaluate_external(
            EvalRequest(
                dataset=args.dataset_name,
                arch=arch,
                seed=fold_seed(seed, "reeval"),
                dataset_path=args.dataset,
            ),
            trainer,
        )
    else:
        raise DataError("reeval needs --bench (lookup) or a trainer flag")
    print(f"valid_perf: {result.valid_perf:.6f}")
    print(f"test_perf: {result.test_perf:.6f}")
    return 0


def _cmd_import_bench(args, config) -> int:
    table = read_bench_csv(args.src)
    write_bench_csv(table, args.dest)
    print(f"{table.num_records} records across {len(table.datasets)} datasets -> {args.dest}")
    return 0


_COMMANDS = {
    "properties": _cmd_properties,
    "confidence": _cmd_confidence,
    "similar": _cmd_similar,
    "design": _cmd_design,
    "reeval": _cmd_reeval,
    "import-bench": _cmd_import_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _load_config(args.config) if getattr(args, "config", None) else {}
        return _COMMANDS[args.command](args, config)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except GnarchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
