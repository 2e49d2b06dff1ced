"""LLM meta-controller bridge.

Two interchangeable backends drive the three design decisions (property
weights, initial suggestions, refinement mutations):

- ``stub``: deterministic local rules, so the whole pipeline runs offline
  and bit-reproducibly. Weights are uniform 1.0; the initial suggestion is
  the pool entry's best recorded architecture verbatim; the refinement step
  is a seeded single-gene mutation that avoids the trajectory when possible.
- ``http``: an OpenAI-style chat-completions endpoint. Responses are parsed
  strictly; parse failures retry and then fall back to the stub behavior.

Prompts are assembled from the bundled templates and never contain the name
of a dataset marked excluded; the unseen graph is always called UNSEEN.
"""

import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import requests

from .errors import BackendError, DataError
from .properties import PROPERTY_NAMES
from .search_space import (
    Architecture,
    MACRO_PATTERNS,
    OPERATIONS,
    format_key,
    mutate_one,
    parse_key,
    validate,
)
from .seeding import fold_seed
from .similarity import PoolEntry, WeightVector

log = logging.getLogger(__name__)

BACKEND_KINDS = ("stub", "http")

TEMPLATE_PLACEHOLDERS = {
    "weight_elicit": ("{UNSEEN_PROPERTIES}", "{SELECTED_PROPERTIES}"),
    "initial_suggest": ("{UNSEEN_PROPERTIES}", "{SEARCH_SPACE}", "{POOL_MODELS}"),
    "refine_mutate": ("{UNSEEN_PROPERTIES}", "{SEARCH_SPACE}", "{POOL_MODELS}", "{TRAJECTORY}"),
}

_ARCH_RE = re.compile(
    r"architecture\s*:\s*\[\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\]\s*"
    r"[,;]?\s*operations\s*:\s*\[\s*'?\"?([a-z]+)'?\"?\s*,\s*'?\"?([a-z]+)'?\"?\s*,"
    r"\s*'?\"?([a-z]+)'?\"?\s*,\s*'?\"?([a-z]+)'?\"?\s*\]",
    re.IGNORECASE,
)


@dataclass
class LlmBackend:
    kind: str = "stub"
    endpoint: str | None = None
    model: str | None = None
    temperature: float = 0.0
    timeout_s: float = 30.0
    max_retries: int = 2
    api_key_env: str = "GNARCH_API_KEY"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise DataError(f"backend kind must be one of {BACKEND_KINDS}, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise DataError("http backend needs an endpoint URL")


@dataclass
class PromptBundle:
    role: str
    system: str
    user: str


class LlmLog:
    """Append-only JSONL log of every bridge decision (no timestamps, so
    artifact bytes stay reproducible)."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.records: list[dict] = []
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def write(self, record: dict):
        record = {"seq": len(self.records), **record}
        self.records.append(record)
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(record) + "\n")


def load_template(name: str) -> str:
    return resources.files("gnarch").joinpath(f"prompts/{name}.txt").read_text()


def search_space_text() -> str:
    macros = ", ".join("[" + ",".join(str(i) for i in m) + "]" for m in MACRO_PATTERNS)
    ops = ", ".join(OPERATIONS)
    return (
        f"macro patterns (entry i = input stage of layer i): {macros}\n"
        f"operation tags for each of the 4 layers: {ops}"
    )


def render_pool_models(entry: PoolEntry) -> str:
    lines = [
        f"{i + 1}. {key} (valid_perf {perf:.4f})"
        for i, (key, perf) in enumerate(entry.top_models)
    ]
    return "\n".join(lines)


def render_trajectory(entries) -> str:
    lines = [
        f"trial {trial}: {key} valid_perf {perf:.4f}" for trial, key, perf in entries
    ]
    return "\n".join(lines) if lines else "(no trials yet)"


def build_prompt(role: str, replacements: dict[str, str], forbidden=()) -> PromptBundle:
    """Fill a template's placeholders and scrub forbidden dataset names.

    Any occurrence of a forbidden name (case-insensitive) is replaced with
    UNSEEN and logged; the assembled prompt is then asserted clean.
    """
    if role not in TEMPLATE_PLACEHOLDERS:
        raise DataError(f"unknown prompt role {role!r}")
    text = load_template(role)
    for placeholder in TEMPLATE_PLACEHOLDERS[role]:
        key = placeholder.strip("{}")
        if key not in replacements:
            raise DataError(f"prompt role {role!r} needs replacement {key!r}")
        text = text.replace(placeholder, str(replacements[key]))
    system = load_template("system")
    for name in forbidden:
        if not name:
            continue
        pattern = re.compile(re.escape(name), re.IGNORECASE)
        new_text, hits = pattern.subn("UNSEEN", text)
        if hits:
            log.warning("scrubbed %d occurrence(s) of excluded dataset name from prompt", hits)
            text = new_text
    for name in forbidden:
        if name and name.lower() in text.lower():
            raise DataError("excluded dataset name survived prompt scrubbing")
    return PromptBundle(role=role, system=system, user=text)


def parse_weight_lines(text: str, selected: list[int]) -> dict[int, float]:
    """Pull ``property_name: number`` lines out of a response.

    Missing or malformed lines fall back to weight 1.0 with a warning;
    values are clamped to [0, 1].
    """
    weights = {}
    for k in selected:
        name = PROPERTY_NAMES[k]
        match = re.search(rf"^\s*{re.escape(name)}\s*:\s*([-+0-9.eE]+)\s*$", text, re.MULTILINE)
        if match is None:
            log.warning("no weight line for property %s; defaulting to 1.0", name)
            weights[k] = 1.0
            continue
        try:
            value = float(match.group(1))
        except ValueError:
            log.warning("malformed weight for property %s: %r; defaulting to 1.0", name, match.group(1))
            weights[k] = 1.0
            continue
        weights[k] = min(1.0, max(0.0, value))
    return weights


def parse_architecture(text: str) -> Architecture:
    """Parse the last ``Architecture: [...] Operations: [...]`` in a response."""
    matches = list(_ARCH_RE.finditer(text))
    if not matches:
        raise DataError("response contains no architecture line")
    groups = matches[-1].groups()
    macro = tuple(int(g) for g in groups[:4])
    ops = tuple(g.lower() for g in groups[4:])
    arch = Architecture(macro, ops)  # type: ignore[arg-type]
    problems = validate(arch)
    if problems:
        raise DataError(f"response architecture invalid: {'; '.join(problems)}")
    return arch


def _chat(backend: LlmBackend, bundle: PromptBundle) -> str:
    payload = {
        "model": backend.model or "default",
        "messages": [
            {"role": "system", "content": bundle.system},
            {"role": "user", "content": bundle.user},
        ],
        "temperature": backend.temperature,
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(backend.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last_error = None
    for attempt in range(backend.max_retries + 1):
        try:
            resp = requests.post(
                backend.endpoint, json=payload, headers=headers, timeout=backend.timeout_s
            )
            if resp.status_code != 200:
                raise BackendError(f"LLM endpoint returned HTTP {resp.status_code}")
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as exc:
            last_error = exc
            log.warning("LLM call failed (attempt %d/%d): %s", attempt + 1, backend.max_retries + 1, exc)
            if attempt < backend.max_retries:
                time.sleep(0.1 * (attempt + 1))
        except BackendError as exc:
            last_error = exc
            log.warning("LLM call failed (attempt %d/%d): %s", attempt + 1, backend.max_retries + 1, exc)
            if attempt < backend.max_retries:
                time.sleep(0.1 * (attempt + 1))
    raise BackendError(f"LLM endpoint unreachable after {backend.max_retries + 1} attempts: {last_error}")


def elicit_weights(
    selected: list[int],
    unseen_text: str,
    backend: LlmBackend,
    llm_log: LlmLog | None = None,
    forbidden=(),
) -> WeightVector:
    """Ask for per-property weights; stub and every failure path are uniform 1.0."""
    if backend.kind == "stub":
        if llm_log:
            llm_log.write({"role": "weight_elicit", "backend": "stub", "parsed": "uniform"})
        return WeightVector(weights={k: 1.0 for k in selected}, source="uniform")
    selected_text = "\n".join(PROPERTY_NAMES[k] for k in selected)
    bundle = build_prompt(
        "weight_elicit",
        {"UNSEEN_PROPERTIES": unseen_text, "SELECTED_PROPERTIES": selected_text},
        forbidden=forbidden,
    )
    try:
        raw = _chat(backend, bundle)
    except BackendError as exc:
        log.warning("weight elicitation failed (%s); falling back to uniform weights", exc)
        if llm_log:
            llm_log.write({"role": "weight_elicit", "backend": "http", "error": str(exc), "parsed": "uniform"})
        return WeightVector(weights={k: 1.0 for k in selected}, source="uniform")
    weights = parse_weight_lines(raw, selected)
    if llm_log:
        llm_log.write(
            {
                "role": "weight_elicit",
                "backend": "http",
                "prompt_system": bundle.system,
                "prompt_user": bundle.user,
                "response": raw,
                "parsed": {str(k): w for k, w in weights.items()},
            }
        )
    return WeightVector(weights=weights, source="llm", raw_response=raw)


def suggest_initial(
    entry: PoolEntry,
    unseen_text: str,
    backend: LlmBackend,
    llm_log: LlmLog | None = None,
    forbidden=(),
) -> Architecture:
    """One initial architecture grounded in a pool entry's top models.

    The stub returns the entry's best recorded architecture verbatim, which
    is also the fallback when the endpoint fails or keeps answering with
    unparseable or invalid architectures.
    """
    if not entry.top_models:
        raise DataError(f"pool entry for {entry.source!r} has no models")
    fallback = parse_key(entry.top_models[0][0])
    if backend.kind == "stub":
        if llm_log:
            llm_log.write(
                {
                    "role": "initial_suggest",
                    "backend": "stub",
                    "pool_source": entry.source,
                    "parsed": format_key(fallback),
                }
            )
        return fallback
    bundle = build_prompt(
        "initial_suggest",
        {
            "UNSEEN_PROPERTIES": unseen_text,
            "SEARCH_SPACE": search_space_text(),
            "POOL_MODELS": render_pool_models(entry),
        },
        forbidden=forbidden,
    )
    for attempt in range(backend.max_retries + 1):
        try:
            raw = _chat(backend, bundle)
            arch = parse_architecture(raw)
        except (BackendError, DataError) as exc:
            log.warning("initial suggestion attempt %d failed: %s", attempt + 1, exc)
            continue
        if llm_log:
            llm_log.write(
                {
                    "role": "initial_suggest",
                    "backend": "http",
                    "pool_source": entry.source,
                    "prompt_user": bundle.user,
                    "response": raw,
                    "parsed": format_key(arch),
                }
            )
        return arch
    log.warning(
        "initial suggestion for source %r fell back to its best recorded architecture",
        entry.source,
    )
    if llm_log:
        llm_log.write(
            {
                "role": "initial_suggest",
                "backend": "http",
                "pool_source": entry.source,
                "parsed": format_key(fallback),
                "note": "fallback",
            }
        )
    return fallback


def refine_mutate(
    candidate: Architecture,
    trajectory_entries,
    k1_entry: PoolEntry,
    backend: LlmBackend,
    avoid: set[str] | None = None,
    llm_log: LlmLog | None = None,
    unseen_text: str = "",
    forbidden=(),
) -> Architecture:
    """Propose a variation of the promoted candidate.

    The stub applies a single-gene mutation seeded by (backend seed,
    trajectory length), retrying seeds until the proposal is outside
    ``avoid``; if every attempt collides it returns the candidate unchanged
    with a warning. The http path parses the response and falls back to the
    stub rule on failure.
    """
    avoid = avoid or set()

    def stub_mutation() -> Architecture:
        for attempt in range(32):
            seed = fold_seed(backend.seed, "refine", len(list(trajectory_entries)), attempt)
            proposal = mutate_one(candidate, seed)
            if format_key(proposal) not in avoid:
                return proposal
        log.warning("mutation could not leave the trajectory; returning candidate unchanged")
        return candidate

    if backend.kind == "stub":
        arch = stub_mutation()
        if llm_log:
            llm_log.write({"role": "refine_mutate", "backend": "stub", "parsed": format_key(arch)})
        return arch
    bundle = build_prompt(
        "refine_mutate",
        {
            "UNSEEN_PROPERTIES": unseen_text,
            "SEARCH_SPACE": search_space_text(),
            "POOL_MODELS": render_pool_models(k1_entry),
            "TRAJECTORY": render_trajectory(trajectory_entries),
        },
        forbidden=forbidden,
    )
    for attempt in range(backend.max_retries + 1):
        try:
            raw = _chat(backend, bundle)
            arch = parse_architecture(raw)
        except (BackendError, DataError) as exc:
            log.warning("refinement attempt %d failed: %s", attempt + 1, exc)
            continue
        if format_key(arch) in avoid:
            log.warning("refinement attempt %d repeated an evaluated architecture; retrying", attempt + 1)
            continue
        if llm_log:
            llm_log.write(
                {
                    "role": "refine_mutate",
                    "backend": "http",
                    "prompt_user": bundle.user,
                    "response": raw,
                    "parsed": format_key(arch),
                }
            )
        return arch
    arch = stub_mutation()
    log.warning("refinement fell back to the seeded mutation rule")
    if llm_log:
        llm_log.write(
            {"role": "refine_mutate", "backend": "http", "parsed": format_key(arch), "note": "fallback"}
        )
    return arch
