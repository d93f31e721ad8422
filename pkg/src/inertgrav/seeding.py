"""Deterministic seed derivation for per-path random streams.

Every path owns two independent sources of randomness:

* Gaussian increments, drawn from ``numpy.random.default_rng(seed)``
  (PCG64 behind a ``SeedSequence``).
* Uniform variates for the within-step bridge correction, produced by a
  counter-based generator: the uniform used at step ``k`` is
  ``(mix64(key + (k + 1) * GOLDEN) >> 11 + 0.5) / 2**53`` where
  ``key = bridge_key(seed)``.  Because it is indexed by step number it does
  not depend on how the path is chunked.

Sub-seeds for ensemble member ``i`` of a run with master seed ``M`` are

    derive_seed(M, i) = mix64((M mod 2**64) XOR (((i + 1) * GOLDEN) mod 2**64))

with ``mix64`` the SplitMix64 finalizer below.  All arithmetic is modulo
2**64.  The mapping depends only on ``(M, i)``, never on scheduling.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_BRIDGE_SALT = 0xD1B54A32D192ED03


def mix64(z: int) -> int:
    """SplitMix64 finalizer (64-bit avalanche)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Sub-seed of ensemble member `index`; see the module docstring."""
    if index < 0:
        raise ValueError("path index must be non-negative")
    return mix64((master_seed & MASK64) ^ (((index + 1) * GOLDEN) & MASK64))


def bridge_key(seed: int) -> int:
    """Key of the counter-based uniform stream attached to `seed`."""
    return mix64((seed & MASK64) ^ _BRIDGE_SALT)


def counter_uniform(key: int, k: int) -> float:
    """Pure-Python twin of the in-kernel uniform for step `k` (for tests)."""
    z = mix64((key + (k + 1) * GOLDEN) & MASK64)
    return ((z >> 11) + 0.5) * 2.0**-53
