"""Counter-seeded pseudo-random streams for reproducible parallel simulation.

Every simulated path owns a private SplitMix64 stream whose initial state
is a mixing hash of ``(master_seed, path_index)``.  Path results therefore
depend only on the pair, never on how paths are partitioned across
workers, which makes parallel estimates bit-reproducible.

Two implementations of the same generator live here: plain-Python
(`SplitMix64`) for scalar use and tests, and numba-jitted helpers
(`stream_seed`, `next_uniform`) consumed by the simulation kernel.  A unit
test pins them to each other bit for bit.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, types

    HAVE_NUMBA = True
    _SIG_MIX = types.uint64(types.uint64)
    _SIG_SEED = types.uint64(types.uint64, types.uint64)
    _SIG_NEXT = types.Tuple((types.uint64, types.float64))(types.uint64)
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    _SIG_MIX = _SIG_SEED = _SIG_NEXT = None

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# (z >> 11) in [0, 2^53); +0.5 then *2^-53 keeps uniforms strictly inside (0,1)
_INV53 = 1.1102230246251565e-16


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_state(master_seed: int, index: int) -> int:
    """Initial SplitMix64 state for stream ``index`` under ``master_seed``."""
    return _mix((master_seed & _MASK) ^ _mix((index + _GOLD) & _MASK))


class SplitMix64:
    """Scalar SplitMix64 stream with (0,1) uniform output.

    Parameters
    ----------
    master_seed : int
        Master seed shared by a family of streams.
    index : int
        Stream index (e.g. the Monte Carlo path number).
    """

    def __init__(self, master_seed: int, index: int = 0):
        self.state = derive_state(master_seed, index)

    def next_u64(self) -> int:
        self.state = (self.state + _GOLD) & _MASK
        return _mix(self.state)

    def uniform(self) -> float:
        """Uniform draw in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _INV53

    def exponential(self, mean: float) -> float:
        return -mean * np.log1p(-self.uniform())


# --- jitted twins used inside the simulation kernel -----------------------

_U64 = np.uint64
_J_GOLD = _U64(_GOLD)
_J_MIX1 = _U64(_MIX1)
_J_MIX2 = _U64(_MIX2)


# explicit signatures: results bounce through Python as plain ints, and a
# relazily-compiled int64 variant would silently promote the mixed
# arithmetic to float64 and break the bit pattern


@njit(_SIG_MIX, cache=True)
def _jmix(z):
    z = (z ^ (z >> _U64(30))) * _J_MIX1
    z = (z ^ (z >> _U64(27))) * _J_MIX2
    return z ^ (z >> _U64(31))


@njit(_SIG_SEED, cache=True)
def stream_seed(master_seed, index):
    """Jitted twin of :func:`derive_state` (uint64 in, uint64 out)."""
    return _jmix(master_seed ^ _jmix(index + _J_GOLD))


@njit(_SIG_NEXT, cache=True)
def next_uniform(state):
    """Advance a jitted stream; returns ``(new_state, u)`` with u in (0,1)."""
    s = state + _J_GOLD
    z = _jmix(s)
    return s, (np.float64(z >> _U64(11)) + 0.5) * _INV53
