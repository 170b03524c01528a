"""Reproducible random substreams.

Every sampler in the package is a pure function of (seed, tags): the master
seed plus a tag path is folded into a numpy SeedSequence, so results are
reproducible across runs and across parallelism levels.  String tags are
crc32-hashed (builtin hash() is salted per process and would not be stable).
"""

from __future__ import annotations

import zlib

import numpy as np


def _words(seed, tags):
    words = [int(seed)]
    for t in tags:
        words.append(zlib.crc32(t.encode()) if isinstance(t, str) else int(t))
    return words


def substream(seed, *tags) -> np.random.Generator:
    """Generator for the substream identified by (seed, *tags)."""
    return np.random.default_rng(np.random.SeedSequence(_words(seed, tags)))


def derive_seed(seed, *tags) -> int:
    """Stable integer sub-seed for handing down to a child task."""
    return int(np.random.SeedSequence(_words(seed, tags)).generate_state(1)[0])
