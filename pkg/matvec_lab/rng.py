"""Seeded random streams keyed by (seed, trial, purpose)."""

import hashlib

import numpy as np


def purpose_key(purpose: str) -> int:
    """Stable 64-bit integer derived from a purpose label."""
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, trial: int, purpose: str) -> np.random.Generator:
    """
    Return an independent generator for one (seed, trial, purpose) triple.

    Philox is counter-based, so streams do not depend on the order in which
    worker threads request them.

    Parameters:
        seed: Experiment seed (mandatory, no ambient randomness).
        trial: Trial index, >= 0.
        purpose: Label such as "instance" or "start-vector".

    Returns:
        numpy Generator over a Philox bit generator.
    """
    if seed is None:
        raise ValueError("A seed is required for every random stream.")
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial), purpose_key(purpose)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def hashed_generator(*parts) -> np.random.Generator:
    """Deterministic generator from arbitrary hashable-as-text parts."""
    text = "|".join(str(part) for part in parts)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(purpose_key(text))))
