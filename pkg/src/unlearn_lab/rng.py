"""Named, counter-based random streams.

Every random block in the package is drawn from its own Philox stream,
keyed by ``(seed, label)``.  Streams are independent of each other and of
the order in which they are consumed, so adding or reordering blocks in a
generator never perturbs the values of the remaining blocks.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, label: str) -> np.random.Generator:
    """Return the deterministic generator for ``(seed, label)``.

    The Philox key is the 64-bit seed paired with a CRC-32 of the label,
    which is stable across platforms and Python versions.
    """
    if not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    key = [int(seed) & _MASK64, zlib.crc32(label.encode("utf-8"))]
    return np.random.Generator(np.random.Philox(key=key))
