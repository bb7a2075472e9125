"""Deterministic random substreams.

Every stochastic component owns a private ``random.Random`` derived from the
global seed plus a string label, so simulations replay exactly regardless of
the order in which other components consume randomness.
"""

from __future__ import annotations

import hashlib
import random

__all__ = ["substream"]


def substream(seed: int, *labels: object) -> random.Random:
    """Return an independent RNG derived from ``seed`` and a label path.

    Uses SHA-256 so derivation is stable across platforms and Python
    versions (``hash()`` is salted per process and must not be used).
    """
    key = repr((int(seed),) + tuple(str(x) for x in labels)).encode()
    digest = hashlib.sha256(key).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))
