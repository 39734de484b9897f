"""Deterministic randomness: one 64-bit seed, labeled independent substreams.

Streams are backed by the counter-based Philox generator, so any
(seed, labels) pair maps to the same stream on every platform and under any
execution order.  Labels are hashed with SHA-256, never with Python's
per-process ``hash``.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy_words(seed: int, labels: tuple) -> list[int]:
    words = [int(seed) & _MASK64]
    for label in labels:
        digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
        words.extend(int.from_bytes(digest[k : k + 8], "little") for k in range(0, 32, 8))
    return words


def stream(seed: int, *labels) -> np.random.Generator:
    """Philox generator keyed by (seed, labels)."""
    seq = np.random.SeedSequence(_entropy_words(seed, labels))
    return np.random.Generator(np.random.Philox(seq))


def derive(seed: int, *labels) -> int:
    """64-bit child seed for APIs that take a plain seed."""
    h = hashlib.sha256()
    h.update((int(seed) & _MASK64).to_bytes(8, "little"))
    for label in labels:
        h.update(repr(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")
