"""Deterministic stream splitting for parallel Monte Carlo.

A master seed plus a tuple of labels (strings or integers) identifies a
stream.  Labels are hashed into the Philox key, so streams for different
purposes ("pool", "obs", transition index, chunk index, ...) are
statistically independent and reproducible across runs, platforms and
worker counts.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream"]


def _label_words(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"stream labels must be non-negative, got {label}")
        return int(label)
    if isinstance(label, str):
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream label must be int or str, got {type(label).__name__}")


def substream(seed: int, *labels) -> np.random.Generator:
    """Return a Generator for the (seed, *labels) stream.

    Philox is counter based, so streams never overlap and the mapping
    from (seed, labels) to output bits is fixed for all time.
    """
    entropy = (int(seed),) + tuple(_label_words(lab) for lab in labels)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
