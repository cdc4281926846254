"""Reproducible random streams.

Every stream is a Philox counter-based generator whose key is derived from
the master seed and a tuple of integer coordinates, so any draw can be
regenerated without replaying the ones scheduled before it.
"""
from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np


def stream(master: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master: int, coords: Any) -> int:
    """Stable 63-bit sub-seed for a grid cell, independent of iteration order."""
    blob = json.dumps([int(master), coords], sort_keys=True, default=str).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") & ((1 << 63) - 1)
