"""Deterministic named RNG streams derived from a single 64-bit seed."""

import hashlib

import numpy as np


def derived_rng(seed: int, stream: str) -> np.random.Generator:
    """Return a Generator for a named stream of the given master seed.

    Streams with different names are statistically independent; the same
    (seed, stream) pair always yields the same sequence, independent of how
    many other streams were drawn from. Used so that e.g. the sampler and
    the decomposition initializer cannot perturb each other's randomness.
    """
    digest = hashlib.sha256(stream.encode("utf-8")).digest()
    tag = int.from_bytes(digest[:8], "little")
    return np.random.default_rng([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(tag)])
