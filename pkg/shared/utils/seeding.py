"""
Deterministic random generators derived from a run seed.

Python's built-in str hash is salted per process, so tokens are folded in
with crc32 instead.
"""
import zlib
from typing import Union

import numpy as np

Token = Union[int, float, str]


def token_entropy(token: Token) -> int:
    return zlib.crc32(repr(token).encode("utf-8"))


def derive_seed_sequence(seed: int, *tokens: Token) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *(token_entropy(t) for t in tokens)])


def derive_rng(seed: int, *tokens: Token) -> np.random.Generator:
    """Generator that depends only on the seed and the tokens."""
    return np.random.default_rng(derive_seed_sequence(seed, *tokens))
