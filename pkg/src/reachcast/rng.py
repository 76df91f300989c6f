"""Deterministic RNG substreams.

Every stochastic stage (subject generation, forecast simulation, pool
sampling, bootstrap) derives its generator from the single run seed plus a
path of labels, so results do not depend on iteration order, thread count,
or Python's per-process hash randomization.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _word(part: int | str) -> int:
    if isinstance(part, bool):  # bool is an int subclass; keep streams distinct
        part = f"bool:{part}"
    if isinstance(part, int):
        return part & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(part.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *path: int | str) -> np.random.Generator:
    """Generator for the substream named by ``path`` under ``seed``.

    Same (seed, path) always yields the same stream; distinct paths yield
    statistically independent streams (SeedSequence entropy mixing).
    """
    entropy = [_word(seed)] + [_word(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))
