"""Deterministic per-episode seed derivation.

Every rollout (training or evaluation) gets its own generator seeded with
``derive_episode_seed(master_seed, episode_index)``, so results never depend
on how episodes are scheduled across workers or on checkpoint frequency.

The mix is two rounds of SplitMix64 finalisation over 64-bit unsigned
arithmetic::

    z = splitmix64(master_seed mod 2**64)
    seed = splitmix64(z XOR (episode_index * 0x9E3779B97F4A7C15 mod 2**64))

which only uses integer operations and is therefore identical on every
platform.
"""
import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_episode_seed(master_seed: int, episode_index: int) -> int:
    """Mix a master seed and an episode index into a 64-bit episode seed."""
    z = _splitmix64(int(master_seed) & _MASK)
    return _splitmix64(z ^ ((int(episode_index) * _GOLDEN) & _MASK))


def episode_rng(master_seed: int, episode_index: int) -> np.random.Generator:
    return np.random.default_rng(derive_episode_seed(master_seed, episode_index))
