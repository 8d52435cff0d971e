"""Stable 64-bit seed derivation for reproducible, schedule-independent runs.

Every stochastic component derives its generator from a named tuple of
parts (master seed, trial index, scheme id, ...) hashed with SHA-256 and
truncated to 64 bits. Identical parts give identical streams on any
platform, and sibling tasks get independent streams regardless of
execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
