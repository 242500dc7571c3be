"""Named, independent random substreams derived from one root seed.

Every stochastic stage pulls its generator from here so that adding or
reordering stages never perturbs any other stage's draws.
"""
from __future__ import annotations

import zlib

import numpy as np


def substream(root_seed: int, name: str) -> np.random.Generator:
    """Generator for the named substream of ``root_seed``."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), key]))


def child_seeds(root_seed: int, name: str, n: int) -> list[int]:
    """Stable per-task integer seeds (e.g. one per bootstrap worker chunk)."""
    key = zlib.crc32(name.encode("utf-8"))
    return [int(s) for s in np.random.SeedSequence([int(root_seed), key]).generate_state(n)]
