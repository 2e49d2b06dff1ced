"""Architecture vocabulary shared with the design engine.

A request names an architecture as ``macro`` (four stage indices) plus
``ops`` (four layer tags). ``macro[i]`` is the stage feeding layer i, stage 0
is the encoded input, and layer i produces stage i+1. Nine connection
patterns are admissible; anything else is rejected per request.
"""


class RequestError(ValueError):
    """A request field fails validation. Reported to the client, never fatal."""


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

OPERATIONS = ("arma", "cheb", "fc", "gat", "gcn", "gin", "graph", "sage", "skip")

NUM_SLOTS = 4


def check_architecture(macro, ops):
    """Validate raw request fields; return (macro tuple, ops tuple)."""
    if not isinstance(macro, (list, tuple)) or len(macro) != NUM_SLOTS:
        raise RequestError(f"macro must have {NUM_SLOTS} entries, got {macro!r}")
    try:
        macro = tuple(int(v) for v in macro)
    except (TypeError, ValueError):
        raise RequestError(f"macro entries must be integers, got {macro!r}")
    if macro not in MACRO_PATTERNS:
        raise RequestError(f"macro {list(macro)} not among {len(MACRO_PATTERNS)} patterns")
    if not isinstance(ops, (list, tuple)) or len(ops) != NUM_SLOTS:
        raise RequestError(f"ops must have {NUM_SLOTS} entries, got {ops!r}")
    ops = tuple(str(tag) for tag in ops)
    for tag in ops:
        if tag not in OPERATIONS:
            raise RequestError(f"unknown operation {tag!r}")
    return macro, ops
