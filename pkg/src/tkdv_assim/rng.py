"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by a
tuple of integers. Philox is counter-based, so a stream's output depends only
on its key, never on how many draws other streams have consumed. This is what
makes truth generation, filtering, and batch runs reproducible bit for bit
regardless of batch size or execution order.
"""

import numpy as np


def as_key(seed):
    """Normalize a seed (int or sequence of ints) to a tuple of ints."""
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def stream(*key):
    """Independent Generator for an integer key path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))
