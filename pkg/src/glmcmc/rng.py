"""Seeded, splittable random streams.

Streams are ``numpy.random.Generator(PCG64)`` instances built from a
``SeedSequence`` whose spawn key is ``(chain, purpose)``.  The mapping
seed -> stream is therefore fixed for a given numpy version and independent
of the order in which streams are requested.
"""

from __future__ import annotations

import numpy as np

# purpose codes; append only, never renumber
DATA = 0
DESIGN = 1
RESPONSE = 2
INIT = 3
MOMENTUM = 4
MIDPOINT = 5
COORDINATE = 6
CONDITIONAL = 7
DIAGNOSTIC = 8
REFERENCE = 9

_PURPOSES = {
    "data": DATA,
    "design": DESIGN,
    "response": RESPONSE,
    "init": INIT,
    "momentum": MOMENTUM,
    "midpoint": MIDPOINT,
    "coordinate": COORDINATE,
    "conditional": CONDITIONAL,
    "diagnostic": DIAGNOSTIC,
    "reference": REFERENCE,
}


def stream(seed: int, purpose, chain: int = 0) -> np.random.Generator:
    """Generator dedicated to ``(seed, chain, purpose)``."""
    code = _PURPOSES[purpose] if isinstance(purpose, str) else int(purpose)
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(chain), code))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
