"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, *keys)`` through
:class:`numpy.random.SeedSequence`, so a draw depends only on its own key
path and never on the order in which streams are consumed.
"""

import numpy as np

# purpose codes used as the last element of a key path
DESIGN = 0
SIGNAL = 1
NOISE = 2
LAMBDA = 3
EXTRA = 4


def stream(seed, *keys):
    """Return an independent ``Generator`` for the key path ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
