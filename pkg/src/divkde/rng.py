"""Seeded random streams on a counter-based generator.

All randomness in the package flows through Philox (a counter-based
bit generator), keyed by ``(seed, stream)``.  Substreams for replications
and Monte-Carlo blocks are obtained by varying ``stream``, never by
consuming a shared generator, so results depend only on the seed and the
substream index -- not on evaluation order or thread count.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# purpose tags keep substreams of one master seed disjoint across consumers
PURPOSE_SAMPLE = 1
PURPOSE_MC = 2
PURPOSE_SWEEP = 3
PURPOSE_COVERAGE = 4


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the generator for substream ``stream`` of master ``seed``."""
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def cell_stream(purpose: int, *indices: int) -> int:
    """Fold a purpose tag and small nonnegative indices into one substream id.

    Uses a fixed positional radix so distinct (purpose, replication,
    n-index, ...) tuples never collide at experiment scale.
    """
    out = int(purpose)
    for ix in indices:
        if ix < 0 or ix >= 1 << 20:
            raise ValueError(f"substream index out of range: {ix}")
        out = (out << 20) | int(ix)
    return out
