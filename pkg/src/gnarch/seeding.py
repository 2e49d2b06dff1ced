"""Deterministic seed derivation.

Python's hash() is salted per process, so seeds for sub-streams are folded
through blake2b instead. Same parts in, same 63-bit seed out, every run.
"""

import hashlib


def fold_seed(*parts) -> int:
    """Fold ints/strings into a stable non-negative seed."""
    text = "|".join(f"{type(p).__name__}:{p}" for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
