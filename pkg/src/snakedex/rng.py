"""Counter-based uniform random numbers.

Every draw is a pure function of ``(seed, counter)`` so sample ``i`` of a
Monte-Carlo run is the same no matter which worker produces it or in which
order. The mixing function is the SplitMix64 finalizer; the numpy and numba
versions below produce identical bits.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

__all__ = ["stream_key", "uniform", "uniform_at"]


def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def stream_key(seed):
    """Scramble a user seed into a 64-bit stream key."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    with np.errstate(over="ignore"):
        return int(_mix(np.uint64(seed) + _GOLDEN))


def uniform(key, counters):
    """Uniform floats in [0, 1) for an array of counters under ``key``."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (c + _ONE) * _GOLDEN
        z = _mix(z)
    return (z >> _S11).astype(np.float64) * _INV53


@njit(cache=True, nogil=True)
def uniform_at(key, counter):
    z = np.uint64(key) + (np.uint64(counter) + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return np.float64(z >> np.uint64(11)) * 1.1102230246251565e-16
