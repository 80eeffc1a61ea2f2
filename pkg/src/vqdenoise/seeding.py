"""Hierarchical seeds: master seed -> domain tag -> run index.

Each derived seed depends only on its own key, so adding runs or domains never
changes the seeds of existing ones.
"""
from __future__ import annotations

import zlib

import numpy as np


def derive_seed(master: int, tag: str, *indices: int) -> int:
    key = (zlib.crc32(tag.encode("utf-8")),) + tuple(int(i) for i in indices)
    ss = np.random.SeedSequence(int(master), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
