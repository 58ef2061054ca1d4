"""Deterministic RNG derivation.

Every stochastic choice in the harness draws from an RNG derived here, so
that runs are reproducible from the experiment seed alone and independent
subsystems (query sampling, budget subsampling, perturbations, scripted
policies) do not share a stream.
"""

from __future__ import annotations

import random


def derive_rng(*parts: object) -> random.Random:
    """Return a Random seeded from the given parts.

    String seeding goes through SHA-512 inside CPython, so the stream is
    stable across processes and platforms.
    """
    key = ":".join(str(p) for p in parts)
    return random.Random(key)
