"""Deterministic seed derivation for reproducible simulations.

All randomness in this package flows through counter-based Philox streams
whose keys are derived with splitmix64.  The exact recipe is documented here
so that independent implementations can reproduce every table bit-for-bit:

* ``splitmix64(x)``: the standard finalizer — ``x += 0x9E3779B97F4A7C15``;
  ``z = x; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)``,
  all arithmetic modulo 2**64.
* Run seed for Monte Carlo run ``j`` at sample size ``n``:
  ``splitmix64(splitmix64(base_seed ^ n) ^ j)``.
* Substream key for channel ``c`` of seed ``s``:
  ``splitmix64(s ^ splitmix64(c))``; the key feeds ``numpy.random.Philox``.

Channels keep the azimuth-noise, elevation-noise, and random-array draws on
independent streams, so growing the number of sensors extends each stream
without perturbing earlier draws (Philox streams are prefix-stable).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Substream channels.
CHANNEL_AZIMUTH = 1
CHANNEL_ELEVATION = 2
CHANNEL_ARRAY = 3


def splitmix64(x: int) -> int:
    """One splitmix64 step; the only mixing primitive used for seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_run_seed(base_seed: int, n: int, run_index: int) -> int:
    """64-bit seed for one Monte Carlo run, stable across parallelism."""
    x = splitmix64((base_seed & _MASK64) ^ (n & _MASK64))
    return splitmix64(x ^ (run_index & _MASK64))


def substream(seed: int, channel: int) -> np.random.Generator:
    """Counter-based generator for one named channel of ``seed``."""
    key = splitmix64((seed & _MASK64) ^ splitmix64(channel & _MASK64))
    return np.random.Generator(np.random.Philox(key=key))
