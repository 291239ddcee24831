"""Counter-based hashing RNG.

Every random quantity used by the samplers is a pure function of a key tuple
(seed, stream, iteration, node, ...), so draws do not depend on evaluation
order and can be computed for any subset of nodes independently.
"""

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# stream tags keep independent uses of one seed apart
STREAM_BATCH = 1
STREAM_NEIGHBOR = 2
STREAM_VIRTUAL_BATCH = 3
STREAM_DRAW = 4


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(p):
    if isinstance(p, (int, np.integer)):
        return np.uint64(int(p) % (1 << 64))
    return np.asarray(p).astype(np.uint64)


def hash_keys(*parts):
    """Hash broadcastable integer arrays into uint64 keys (splitmix64 chain)."""
    h = np.uint64(0x243F6A8885A308D3)
    with np.errstate(over="ignore"):
        for p in parts:
            h = _mix(h + _GOLDEN + _as_u64(p))
    return h


def uniform(*parts):
    """Uniform floats in [0, 1) derived from hash_keys."""
    return (hash_keys(*parts) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(*parts):
    """A single 64-bit integer seed for seeding numpy Generators."""
    return int(np.asarray(hash_keys(*parts)).reshape(-1)[0])
