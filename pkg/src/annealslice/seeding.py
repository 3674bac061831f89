"""Deterministic derivation of child seeds from structured keys."""
from __future__ import annotations

import secrets

import numpy as np


def derive_seed(*keys: int) -> int:
    """Stable 63-bit seed for a tuple of non-negative integer keys."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def derive_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def entropy_seed() -> int:
    return secrets.randbits(63)
