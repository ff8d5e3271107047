"""Deterministic random streams.

All randomness in the project flows through named Philox substreams derived
from a single 64-bit seed.  Philox is counter-based, so a stream's output is
a pure function of (seed, stream name, draw index); replaying a match or a
whole tournament from its seed reproduces every draw bit-for-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _name_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *names: str | int) -> np.random.Generator:
    """Return a Generator for the substream identified by ``names``.

    Distinct name tuples yield statistically independent streams; the same
    (seed, names) pair always yields an identical stream.
    """
    entropy = [int(seed) & _MASK64]
    for name in names:
        if isinstance(name, str):
            entropy.append(_name_key(name))
        else:
            entropy.append(int(name) & _MASK64)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
