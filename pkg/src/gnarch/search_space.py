"""Architecture search space: macro DAG patterns x operation assignments.

An architecture is a pair (macro, ops). ``macro`` is one of nine 4-slot
connection patterns; entry i names the stage feeding layer i, where stage 0
is the model input and layer i produces stage i+1. ``ops`` assigns one of
nine operation tags to each of the four layers.
"""

from dataclasses import dataclass
from itertools import product
import random
import re

from .errors import DataError

# The nine admissible connection patterns, in canonical (lexicographic) order.
MACRO_PATTERNS = (
    (0, 0, 0, 0),
    (0, 0, 0, 1),
    (0, 0, 1, 1),
    (0, 0, 1, 2),
    (0, 0, 1, 3),
    (0, 1, 1, 1),
    (0, 1, 1, 2),
    (0, 1, 2, 2),
    (0, 1, 2, 3),
)

# Operation tags in canonical (alphabetic) order.
OPERATIONS = ("arma", "cheb", "fc", "gat", "gcn", "gin", "graph", "sage", "skip")

NUM_SLOTS = 4

# Raw product size: 9 macro patterns x 9^4 op assignments.
SPACE_SIZE = len(MACRO_PATTERNS) * len(OPERATIONS) ** NUM_SLOTS

_KEY_RE = re.compile(r"^macro:\[(\d+),(\d+),(\d+),(\d+)\]\|ops:\[([a-z,]+)\]$")


@dataclass(frozen=True)
class Architecture:
    """One point of the search space. Hashable so sets/dicts can dedupe."""

    macro: tuple[int, int, int, int]
    ops: tuple[str, str, str, str]

    def key(self) -> str:
        return format_key(self)

    def __str__(self) -> str:
        return self.key()


def validate(arch: Architecture) -> list[str]:
    """Return a list of violation messages; empty means the architecture is valid."""
    problems = []
    macro = tuple(arch.macro)
    ops = tuple(arch.ops)
    if len(macro) != NUM_SLOTS:
        problems.append(f"macro has {len(macro)} entries, expected {NUM_SLOTS}")
    elif macro not in MACRO_PATTERNS:
        problems.append(f"macro {list(macro)} not among {len(MACRO_PATTERNS)} patterns")
    if len(ops) != NUM_SLOTS:
        problems.append(f"ops has {len(ops)} entries, expected {NUM_SLOTS}")
    else:
        for tag in ops:
            if tag not in OPERATIONS:
                problems.append(f"unknown operation {tag}")
    return problems


def check_valid(arch: Architecture) -> Architecture:
    """Raise DataError when the architecture is invalid, else return it."""
    problems = validate(arch)
    if problems:
        raise DataError(f"invalid architecture: {'; '.join(problems)}")
    return arch


def format_key(arch: Architecture) -> str:
    """Canonical string form, e.g. ``macro:[0,0,1,3]|ops:[gcn,gat,sage,gin]``."""
    macro = ",".join(str(i) for i in arch.macro)
    ops = ",".join(arch.ops)
    return f"macro:[{macro}]|ops:[{ops}]"


def parse_key(key: str) -> Architecture:
    """Inverse of :func:`format_key`. Raises DataError on malformed keys."""
    m = _KEY_RE.match(key)
    if m is None:
        raise DataError(f"malformed architecture key: {key!r}")
    macro = tuple(int(g) for g in m.groups()[:4])
    ops = tuple(m.group(5).split(","))
    arch = Architecture(macro, ops)
    problems = validate(arch)
    if problems:
        raise DataError(f"malformed architecture key {key!r}: {'; '.join(problems)}")
    return arch


def enumerate_space():
    """Yield every (macro, ops) combination in lexicographic order.

    Yields all 9 * 9**4 = 59049 raw pairs. Structurally equivalent pairs are
    not merged here; the public tabular benchmark keeps 26,206 entries after
    merging cells that denote the same computation graph.
    """
    for macro in MACRO_PATTERNS:
        for ops in product(OPERATIONS, repeat=NUM_SLOTS):
            yield Architecture(macro, ops)


def hamming(a: Architecture, b: Architecture) -> int:
    """Coordinate distance over 5 genes: the macro pattern plus 4 op slots."""
    d = int(tuple(a.macro) != tuple(b.macro))
    d += sum(1 for i in range(NUM_SLOTS) if a.ops[i] != b.ops[i])
    return d


def _reachable(parent_a: Architecture, parent_b: Architecture):
    """All children a single crossover of these parents can emit (parents included)."""
    macros = {parent_a.macro, parent_b.macro}
    slots = [{parent_a.ops[i], parent_b.ops[i]} for i in range(NUM_SLOTS)]
    out = []
    for macro in sorted(macros):
        for ops in product(*(sorted(s) for s in slots)):
            out.append(Architecture(macro, ops))
    return out


def crossover(parent_a: Architecture, parent_b: Architecture, n: int, rng_seed: int) -> list[Architecture]:
    """Produce up to ``n`` distinct children of two parents.

    The macro pattern is taken whole from one parent (seeded coin flip); each
    op slot is taken independently from either parent. Children identical to
    either parent are discarded, so two parents differing in a single slot
    have no admissible children and the result is empty.
    """
    check_valid(parent_a)
    check_valid(parent_b)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    parents = {parent_a, parent_b}
    max_children = len(_reachable(parent_a, parent_b)) - len(parents)
    target = min(n, max_children)
    rng = random.Random(rng_seed)
    children: list[Architecture] = []
    seen = set(parents)
    attempts = 0
    while len(children) < target and attempts < 1000:
        attempts += 1
        macro = parent_a.macro if rng.random() < 0.5 else parent_b.macro
        ops = tuple(
            parent_a.ops[i] if rng.random() < 0.5 else parent_b.ops[i]
            for i in range(NUM_SLOTS)
        )
        child = Architecture(macro, ops)
        if child in seen:
            continue
        seen.add(child)
        children.append(child)
    if len(children) < target:
        # tiny reachable sets can starve rejection sampling; finish deterministically
        for child in sorted(_reachable(parent_a, parent_b), key=format_key):
            if len(children) >= target:
                break
            if child not in seen:
                seen.add(child)
                children.append(child)
    return children


def mutate_one(arch: Architecture, rng_seed: int) -> Architecture:
    """Change exactly one gene: the macro pattern or a single op slot."""
    check_valid(arch)
    rng = random.Random(rng_seed)
    coord = rng.randrange(NUM_SLOTS + 1)
    if coord == 0:
        choices = [m for m in MACRO_PATTERNS if m != tuple(arch.macro)]
        return Architecture(rng.choice(choices), arch.ops)
    slot = coord - 1
    choices = [t for t in OPERATIONS if t != arch.ops[slot]]
    ops = list(arch.ops)
    ops[slot] = rng.choice(choices)
    return Architecture(arch.macro, tuple(ops))
