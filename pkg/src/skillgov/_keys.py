"""Counter-based keyed random streams.

Every random quantity in the package is a pure function of a structural key
(base seed plus labels such as episode index or ECM identity). Streams are
built from Philox, keyed through ``SeedSequence``, so evaluation order and
parallelism never change a draw.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np


def _word(part) -> int:
    tagged = f"{type(part).__name__}:{part}".encode()
    return int.from_bytes(hashlib.blake2b(tagged, digest_size=8).digest(), "little")


def keyed_rng(*key) -> np.random.Generator:
    """Return a fresh generator whose stream depends only on ``key``."""
    seq = np.random.SeedSequence([_word(p) for p in key])
    return np.random.Generator(np.random.Philox(seq))


@lru_cache(maxsize=4096)
def keyed_uniform(*key) -> float:
    return float(keyed_rng(*key).random())


def keyed_uniforms(prefix: tuple, n: int) -> np.ndarray:
    """Uniforms ``u_i = keyed_uniform(*prefix, i)`` for ``i in range(n)``."""
    return np.fromiter((keyed_uniform(*prefix, i) for i in range(n)), dtype=float, count=n)
