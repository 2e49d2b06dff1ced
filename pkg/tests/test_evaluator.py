import sys

import pytest

import gnarch.evaluator as ev
from gnarch.errors import (
    BackendError,
    DataError,
    LeakageGuardError,
    RecordMissingError,
    TrainerProtocolError,
)
from gnarch.evaluator import (
    DATASET_HYPERPARAMS,
    EvalRequest,
    ExternalEvaluator,
    GENERIC_HYPERPARAMS,
    LookupEvaluator,
    TrainerConfig,
    evaluate_lookup,
    hyperparams_for,
)
from gnarch.graph_data import DatasetMeta
from gnarch.knowledge_base import BenchmarkTable
from gnarch.search_space import Architecture

ARCH = Architecture((0, 0, 1, 3), ("gcn", "gat", "sage", "gin"))
OTHER = Architecture((0, 0, 0, 0), ("fc", "fc", "fc", "fc"))

# A minimal trainer: reads one request per line, answers with valid_perf set
# to the request's learning rate and duration_s counting served requests.
ECHO_TRAINER = """
import json, sys
n = 0
for line in sys.stdin:
    req = json.loads(line)
    n += 1
    out = {"id": req["id"], "valid_perf": req["hyperparams"]["lr"],
           "test_perf": 0.5, "duration_s": float(n)}
    sys.stdout.write(json.dumps(out) + "\\n")
    sys.stdout.flush()
"""


def trainer_command(script):
    return [sys.executable, "-c", script]


def small_table():
    table = BenchmarkTable()
    table.add_dataset(DatasetMeta(name="known", num_classes=2))
    table.add_dataset(DatasetMeta(name="held_out", num_classes=2))
    table.add_record("known", ARCH, 0.8, 0.75)
    table.add_record("held_out", ARCH, 0.9, 0.85)
    return table


# ------------------------------------------------------------- hyperparams


def test_hyperparams_frozen_rows():
    assert DATASET_HYPERPARAMS["cora"] == {
        "pre_layers": 0, "post_layers": 1, "dimension": 256, "dropout": 0.7,
        "optimizer": "sgd", "lr": 0.1, "weight_decay": 0.0005, "epochs": 400,
    }
    assert DATASET_HYPERPARAMS["pubmed"]["epochs"] == 500
    assert DATASET_HYPERPARAMS["photo"]["optimizer"] == "adam"
    assert len(DATASET_HYPERPARAMS) == 12


def test_hyperparams_lookup_is_case_insensitive_with_generic_fallback():
    assert hyperparams_for("Cora") == DATASET_HYPERPARAMS["cora"]
    assert hyperparams_for("never-seen") == GENERIC_HYPERPARAMS
    # callers get a copy, not the shared dict
    got = hyperparams_for("never-seen")
    got["lr"] = 99
    assert GENERIC_HYPERPARAMS["lr"] != 99


# ------------------------------------------------------------- lookup


def test_lookup_counts_and_answers():
    table = small_table()
    looker = LookupEvaluator(table)
    got = looker.evaluate(EvalRequest(dataset="known", arch=ARCH))
    assert (got.valid_perf, got.test_perf, got.source) == (0.8, 0.75, "lookup")
    looker.evaluate(EvalRequest(dataset="known", arch=ARCH))
    assert looker.eval_count == 2
    assert looker.simulation_reads == 0


def test_lookup_missing_record():
    looker = LookupEvaluator(small_table())
    with pytest.raises(RecordMissingError):
        looker.evaluate(EvalRequest(dataset="known", arch=OTHER))
    with pytest.raises(DataError):
        looker.evaluate(EvalRequest(dataset="known", arch=Architecture((9, 9, 9, 9), ("gcn",) * 4)))


def test_lookup_leakage_guard():
    table = small_table()
    guarded = LookupEvaluator(table, excluded={"held_out"})
    with pytest.raises(LeakageGuardError):
        guarded.evaluate(EvalRequest(dataset="held_out", arch=ARCH))
    assert guarded.eval_count == 0

    allowed = LookupEvaluator(table, allow_simulation=True, excluded={"held_out"})
    got = allowed.evaluate(EvalRequest(dataset="held_out", arch=ARCH))
    assert got.valid_perf == 0.9
    assert allowed.simulation_reads == 1
    allowed.evaluate(EvalRequest(dataset="known", arch=ARCH))
    assert allowed.simulation_reads == 1  # non-excluded reads are not simulation


def test_evaluate_lookup_one_shot():
    got = evaluate_lookup(EvalRequest(dataset="known", arch=ARCH), small_table())
    assert got.valid_perf == 0.8


# ------------------------------------------------------------- trainer config


def test_trainer_config_needs_exactly_one_transport():
    with pytest.raises(DataError):
        TrainerConfig()
    with pytest.raises(DataError):
        TrainerConfig(command=["x"], url="http://y")
    TrainerConfig(command=["x"])
    TrainerConfig(url="http://y")


# ------------------------------------------------------------- stdio trainer


def test_external_stdio_round_trip(tmp_path):
    config = TrainerConfig(command=trainer_command(ECHO_TRAINER), timeout_s=20)
    with ExternalEvaluator(config) as runner:
        got = runner.evaluate(
            EvalRequest(dataset="cora", arch=ARCH, seed=3, dataset_path=str(tmp_path))
        )
        # default hyperparams were injected: cora's lr is 0.1
        assert got.valid_perf == pytest.approx(0.1)
        assert got.source == "trainer"
        again = runner.evaluate(
            EvalRequest(dataset="unknown-name", arch=ARCH, dataset_path=str(tmp_path))
        )
        # duration counts requests inside one process: the trainer persisted
        assert again.duration_s == 2.0
        assert again.valid_perf == pytest.approx(GENERIC_HYPERPARAMS["lr"])


def test_external_needs_dataset_path():
    config = TrainerConfig(command=trainer_command(ECHO_TRAINER))
    with ExternalEvaluator(config) as runner:
        with pytest.raises(DataError):
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH))


def test_external_rejects_wrong_id(tmp_path):
    script = ECHO_TRAINER.replace('req["id"]', '"bogus"')
    config = TrainerConfig(command=trainer_command(script), timeout_s=20)
    with ExternalEvaluator(config) as runner:
        with pytest.raises(TrainerProtocolError):
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))


def test_external_surfaces_trainer_error(tmp_path):
    script = (
        "import json, sys\n"
        "for line in sys.stdin:\n"
        "    req = json.loads(line)\n"
        "    sys.stdout.write(json.dumps({'id': req['id'], 'error': 'bad macro'}) + '\\n')\n"
        "    sys.stdout.flush()\n"
    )
    config = TrainerConfig(command=trainer_command(script), timeout_s=20)
    with ExternalEvaluator(config) as runner:
        with pytest.raises(BackendError) as err:
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))
        assert "bad macro" in str(err.value)


def test_external_rejects_out_of_range_perf(tmp_path):
    script = ECHO_TRAINER.replace('req["hyperparams"]["lr"]', "1.5")
    config = TrainerConfig(command=trainer_command(script), timeout_s=20)
    with ExternalEvaluator(config) as runner:
        with pytest.raises(TrainerProtocolError):
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))


def test_external_rejects_non_json_line(tmp_path):
    script = (
        "import sys\n"
        "sys.stdin.readline()\n"
        "sys.stdout.write('not json\\n')\n"
        "sys.stdout.flush()\n"
        "sys.stdin.read()\n"
    )
    config = TrainerConfig(command=trainer_command(script), timeout_s=20)
    with ExternalEvaluator(config) as runner:
        with pytest.raises(TrainerProtocolError):
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))


def test_external_detects_dead_trainer(tmp_path):
    config = TrainerConfig(command=[sys.executable, "-c", "pass"], timeout_s=20)
    with ExternalEvaluator(config) as runner:
        with pytest.raises((TrainerProtocolError, BackendError)):
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))


def test_external_times_out(tmp_path):
    script = "import time, sys\nsys.stdin.readline()\ntime.sleep(60)\n"
    config = TrainerConfig(command=trainer_command(script), timeout_s=0.8)
    with ExternalEvaluator(config) as runner:
        with pytest.raises(BackendError) as err:
            runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))
        assert "timed out" in str(err.value)


# ------------------------------------------------------------- http trainer


class FakeResponse:
    def __init__(self, obj, status=200):
        self.status_code = status
        self._obj = obj

    def json(self):
        return self._obj


def test_external_http_round_trip(monkeypatch, tmp_path):
    def fake_post(url, json=None, timeout=None):
        return FakeResponse(
            {"id": json["id"], "valid_perf": 0.7, "test_perf": 0.65, "duration_s": 1.0}
        )

    monkeypatch.setattr(ev.requests, "post", fake_post)
    runner = ExternalEvaluator(TrainerConfig(url="http://trainer.invalid/run"))
    got = runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))
    assert (got.valid_perf, got.test_perf) == (0.7, 0.65)


def test_external_http_error_status(monkeypatch, tmp_path):
    monkeypatch.setattr(ev.requests, "post", lambda *a, **k: FakeResponse({}, status=503))
    runner = ExternalEvaluator(TrainerConfig(url="http://trainer.invalid/run"))
    with pytest.raises(BackendError):
        runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))


def test_external_http_unreachable(monkeypatch, tmp_path):
    def boom(*a, **k):
        raise ev.requests.ConnectionError("refused")

    monkeypatch.setattr(ev.requests, "post", boom)
    runner = ExternalEvaluator(TrainerConfig(url="http://trainer.invalid/run"))
    with pytest.raises(BackendError):
        runner.evaluate(EvalRequest(dataset="cora", arch=ARCH, dataset_path=str(tmp_path)))
