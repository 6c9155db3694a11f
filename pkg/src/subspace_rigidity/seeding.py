"""Child seeds derived by hashing, so that streams for different purposes never coincide."""

from __future__ import annotations

import hashlib

import numpy as np


def sub_seed(seed: int, *labels) -> int:
    """Deterministic 64-bit child seed from a master seed and labels."""
    text = ":".join(str(x) for x in (seed, *labels)).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little")


def child_rng(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(sub_seed(seed, *labels))
