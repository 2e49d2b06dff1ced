"""Architecture evaluation: recorded-table lookup or an external trainer.

The lookup evaluator answers from a BenchmarkTable and never trains. When a
dataset is marked excluded (leave-one-out), reading its records requires the
explicit ``allow_simulation`` flag and every such read is counted and logged.

The external evaluator speaks a line-delimited JSON protocol to a trainer
process over stdio, or the same bodies over HTTP POST:

  request  {"id", "dataset_path", "macro", "ops", "seed", "hyperparams"}
  response {"id", "valid_perf", "test_perf", "duration_s"}
        or {"id", "error"}
"""

import json
import logging
import os
import select
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .errors import BackendError, DataError, LeakageGuardError, TrainerProtocolError
from .knowledge_base import BenchmarkTable, PerfRecord
from .search_space import Architecture, check_valid, format_key

log = logging.getLogger(__name__)

# Per-dataset training hyperparameters used when a request does not override
# them: (pre_layers, post_layers, dimension, dropout, optimizer, lr,
# weight_decay, epochs), keyed by lowercase dataset name.
DATASET_HYPERPARAMS: dict[str, dict] = {
    "cora": {"pre_layers": 0, "post_layers": 1, "dimension": 256, "dropout": 0.7, "optimizer": "sgd", "lr": 0.1, "weight_decay": 0.0005, "epochs": 400},
    "citeseer": {"pre_layers": 0, "post_layers": 1, "dimension": 256, "dropout": 0.7, "optimizer": "sgd", "lr": 0.2, "weight_decay": 0.0005, "epochs": 400},
    "pubmed": {"pre_layers": 0, "post_layers": 0, "dimension": 128, "dropout": 0.3, "optimizer": "sgd", "lr": 0.2, "weight_decay": 0.0005, "epochs": 500},
    "cs": {"pre_layers": 1, "post_layers": 0, "dimension": 128, "dropout": 0.6, "optimizer": "sgd", "lr": 0.5, "weight_decay": 0.0005, "epochs": 400},
    "physics": {"pre_layers": 1, "post_layers": 1, "dimension": 256, "dropout": 0.4, "optimizer": "sgd", "lr": 0.01, "weight_decay": 0.0, "epochs": 200},
    "photo": {"pre_layers": 1, "post_layers": 0, "dimension": 128, "dropout": 0.7, "optimizer": "adam", "lr": 0.0002, "weight_decay": 0.0005, "epochs": 500},
    "computers": {"pre_layers": 1, "post_layers": 1, "dimension": 64, "dropout": 0.1, "optimizer": "adam", "lr": 0.005, "weight_decay": 0.0005, "epochs": 500},
    "ogbn-arxiv": {"pre_layers": 0, "post_layers": 1, "dimension": 128, "dropout": 0.2, "optimizer": "adam", "lr": 0.002, "weight_decay": 0.0, "epochs": 500},
    "ogbn-proteins": {"pre_layers": 1, "post_layers": 1, "dimension": 256, "dropout": 0.0, "optimizer": "adam", "lr": 0.01, "weight_decay": 0.0005, "epochs": 500},
    "dblp": {"pre_layers": 1, "post_layers": 1, "dimension": 256, "dropout": 0.5, "optimizer": "sgd", "lr": 0.1, "weight_decay": 0.0005, "epochs": 300},
    "flickr": {"pre_layers": 1, "post_layers": 1, "dimension": 128, "dropout": 0.5, "optimizer": "adam", "lr": 0.001, "weight_decay": 0.0005, "epochs": 300},
    "actor": {"pre_layers": 1, "post_layers": 1, "dimension": 128, "dropout": 0.5, "optimizer": "adam", "lr": 0.005, "weight_decay": 0.0005, "epochs": 400},
}

GENERIC_HYPERPARAMS = {
    "pre_layers": 1,
    "post_layers": 1,
    "dimension": 64,
    "dropout": 0.5,
    "optimizer": "adam",
    "lr": 0.01,
    "weight_decay": 0.0005,
    "epochs": 200,
}


def hyperparams_for(dataset: str) -> dict:
    """Training hyperparameters for a dataset name, generic when unknown."""
    return dict(DATASET_HYPERPARAMS.get(dataset.lower(), GENERIC_HYPERPARAMS))


@dataclass
class EvalRequest:
    dataset: str
    arch: Architecture
    seed: int = 0
    dataset_path: str | None = None
    hyperparams: dict | None = None


@dataclass
class EvalResult:
    valid_perf: float
    test_perf: float
    duration_s: float = 0.0
    source: str = "lookup"


class LookupEvaluator:
    """Answers evaluation requests from recorded rows.

    ``excluded`` names leave-one-out datasets; reading their rows without
    ``allow_simulation`` raises, and with it every read is logged and counted
    so simulation runs stay auditable.
    """

    def __init__(self, table: BenchmarkTable, *, allow_simulation: bool = False, excluded=frozenset()):
        self.table = table
        self.allow_simulation = allow_simulation
        self.excluded = frozenset(excluded)
        self.eval_count = 0
        self.simulation_reads = 0

    def has_record(self, dataset: str, arch: Architecture) -> bool:
        return self.table.has_record(dataset, format_key(arch))

    def evaluate(self, request: EvalRequest) -> EvalResult:
        check_valid(request.arch)
        if request.dataset in self.excluded:
            if not self.allow_simulation:
                raise LeakageGuardError(
                    f"dataset {request.dataset!r} is excluded; lookup requires the "
                    "explicit simulation flag"
                )
            self.simulation_reads += 1
            log.info(
                "simulation read %d: excluded dataset record served for %s",
                self.simulation_reads,
                format_key(request.arch),
            )
        record: PerfRecord = self.table.get_perf(request.dataset, format_key(request.arch))
        self.eval_count += 1
        return EvalResult(record.valid_perf, record.test_perf, 0.0, "lookup")


def evaluate_lookup(
    request: EvalRequest,
    table: BenchmarkTable,
    *,
    allow_simulation: bool = False,
    excluded=frozenset(),
) -> EvalResult:
    """One-shot lookup evaluation (see LookupEvaluator for the guard rules)."""
    return LookupEvaluator(
        table, allow_simulation=allow_simulation, excluded=excluded
    ).evaluate(request)


@dataclass
class TrainerConfig:
    """How to reach an external trainer: a stdio command or an HTTP URL."""

    command: list[str] | None = None
    url: str | None = None
    timeout_s: float = 600.0
    env: dict = field(default_factory=dict)

    def __post_init__(self):
        if bool(self.command) == bool(self.url):
            raise DataError("trainer config needs exactly one of command or url")


def _wire_request(request: EvalRequest, request_id: str) -> dict:
    if request.dataset_path is None:
        raise DataError("external evaluation needs dataset_path on the request")
    hyperparams = request.hyperparams
    if hyperparams is None:
        hyperparams = hyperparams_for(request.dataset)
    return {
        "id": request_id,
        "dataset_path": str(request.dataset_path),
        "macro": list(request.arch.macro),
        "ops": list(request.arch.ops),
        "seed": int(request.seed),
        "hyperparams": hyperparams,
    }


def _validate_response(obj, request_id: str) -> EvalResult:
    if not isinstance(obj, dict):
        raise TrainerProtocolError(f"trainer response is not an object: {obj!r}")
    if obj.get("id") != request_id:
        raise TrainerProtocolError(
            f"trainer response id {obj.get('id')!r} does not match request id {request_id!r}"
        )
    if "error" in obj:
        raise BackendError(f"trainer reported an error: {obj['error']}")
    try:
        valid_perf = float(obj["valid_perf"])
        test_perf = float(obj["test_perf"])
        duration_s = float(obj.get("duration_s", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise TrainerProtocolError(f"trainer response malformed: {obj!r}") from exc
    for label, value in (("valid_perf", valid_perf), ("test_perf", test_perf)):
        if not np.isfinite(value) or not 0.0 <= value <= 1.0:
            raise TrainerProtocolError(f"trainer {label} {value!r} outside [0, 1]")
    return EvalResult(valid_perf, test_perf, duration_s, "trainer")


class ExternalEvaluator:
    """Client for a trainer speaking the wire protocol.

    Stdio mode keeps one trainer subprocess alive across requests; HTTP mode
    POSTs each request body. Requests are serialized (one in flight).
    """

    def __init__(self, config: TrainerConfig):
        self.config = config
        self._proc: subprocess.Popen | None = None
        self._stderr_file = None
        self._counter = 0

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is not None and self._proc.poll() is None:
            return self._proc
        self._stderr_file = tempfile.NamedTemporaryFile(
            mode="w+", prefix="gnarch-trainer-", suffix=".log", delete=False
        )
        env = dict(os.environ)
        env.update(self.config.env)
        self._proc = subprocess.Popen(
            self.config.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=self._stderr_file,
            env=env,
        )
        return self._proc

    def _stderr_tail(self) -> str:
        if self._stderr_file is None:
            return ""
        try:
            with open(self._stderr_file.name) as fh:
                return "".join(fh.readlines()[-20:])
        except OSError:
            return ""

    def _read_line(self, proc: subprocess.Popen, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        chunks = []
        fd = proc.stdout.fileno()
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                proc.kill()
                raise BackendError(
                    f"trainer timed out after {timeout}s; stderr tail:\n{self._stderr_tail()}"
                )
            ready, _, _ = select.select([fd], [], [], min(remaining, 1.0))
            if not ready:
                continue
            byte = os.read(fd, 1)
            if not byte:
                raise TrainerProtocolError(
                    f"trainer closed its output stream; stderr tail:\n{self._stderr_tail()}"
                )
            if byte == b"\n":
                return b"".join(chunks)
            chunks.append(byte)

    def evaluate(self, request: EvalRequest) -> EvalResult:
        self._counter += 1
        request_id = f"q{self._counter}"
        body = _wire_request(request, request_id)
        if self.config.url:
            try:
                resp = requests.post(self.config.url, json=body, timeout=self.config.timeout_s)
            except requests.RequestException as exc:
                raise BackendError(f"trainer endpoint unreachable: {exc}") from exc
            if resp.status_code != 200:
                raise BackendError(f"trainer endpoint returned HTTP {resp.status_code}")
            try:
                obj = resp.json()
            except ValueError as exc:
                raise TrainerProtocolError(f"trainer response is not JSON: {exc}") from exc
            return _validate_response(obj, request_id)

        proc = self._ensure_proc()
        try:
            proc.stdin.write((json.dumps(body) + "\n").encode())
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(
                f"trainer process not accepting input: {exc}; stderr tail:\n{self._stderr_tail()}"
            ) from exc
        line = self._read_line(proc, self.config.timeout_s)
        try:
            obj = json.loads(line.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise TrainerProtocolError(f"trainer wrote a non-JSON line: {line!r}") from exc
        return _validate_response(obj, request_id)

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def evaluate_external(request: EvalRequest, config: TrainerConfig) -> EvalResult:
    """One-shot external evaluation over a fresh trainer connection."""
    with ExternalEvaluator(config) as ev:
        return ev.evaluate(request)
