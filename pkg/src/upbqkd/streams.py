"""Counter-based random streams.

Every protocol round owns a fixed block of ``ROUND_DRAWS`` uniforms taken
from a Philox stream keyed by the master seed: round ``i`` reads counter
blocks ``[i*ROUND_DRAWS/4, (i+1)*ROUND_DRAWS/4)``. A round's draws depend
only on ``(master_seed, round_index)``, so rounds can run in any order, or
all at once as a vectorized block, and produce the same transcript.
"""

from __future__ import annotations

import numpy as np

ROUND_DRAWS = 8
_PER_COUNTER = 4  # Philox4x64 emits four 64-bit words per counter step

# Fixed slot of each actor inside a round's block. Unused slots are skipped,
# never shifted, so adding an adversary does not perturb Alice or Bob.
SLOT_INDEX = 0
SLOT_SEQUENCE = 1
SLOT_EVE_FIRST = 2
SLOT_EVE_SECOND = 3
SLOT_EVE_CHOICE = 4
SLOT_BOB = 5

_MAX_SEED = 2**64


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def round_uniforms(seed: int, round_index: int) -> np.ndarray:
    """The ``ROUND_DRAWS`` uniforms of one round."""
    if round_index < 0:
        raise ValueError("round_index must be nonnegative")
    bitgen = np.random.Philox(key=check_seed(seed))
    bitgen.advance(round_index * ROUND_DRAWS // _PER_COUNTER)
    return np.random.Generator(bitgen).random(ROUND_DRAWS)


def round_uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for rounds ``start .. start+count-1`` as a ``(count, ROUND_DRAWS)`` array."""
    bitgen = np.random.Philox(key=check_seed(seed))
    bitgen.advance(start * ROUND_DRAWS // _PER_COUNTER)
    return np.random.Generator(bitgen).random((count, ROUND_DRAWS))


def session_rng(seed: int) -> np.random.Generator:
    """Stream for post-round classical choices (check-subset selection).

    Shares the key with the round streams but starts in the top counter
    word, so it never overlaps them.
    """
    return np.random.Generator(np.random.Philox(key=check_seed(seed), counter=[0, 0, 0, 1]))


class SlotStream:
    """Serves pre-drawn uniforms to one actor through a ``random()`` method.

    Lets code written against ``numpy.random.Generator`` consume exactly the
    slots it was assigned.
    """

    def __init__(self, draws):
        self._draws = list(draws)
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._draws):
            raise RuntimeError("actor consumed more draws than its assigned slots")
        u = self._draws[self._pos]
        self._pos += 1
        return float(u)
