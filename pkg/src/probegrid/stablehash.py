"""Pinned 64-bit hashing for cross-platform deterministic draws.

The train/test split and the random-uniform baseline both need choices that
are pure functions of identifier strings and a seed, identical across runs,
platforms, and worker counts.

The hash is FNV-1a (64-bit) followed by the MurmurHash3 fmix64 finalizer.
Plain FNV-1a has weak avalanche into the top bits on short, similar inputs
(sequential patient ids cluster badly when mapped to [0, 1) via division by
2^64), which breaks the binomial concentration a split fraction must have;
the finalizer restores it. Both pieces are published, constant-defined
algorithms with no dependency on process state.
"""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def fmix64(h: int) -> int:
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & _MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & _MASK64
    h ^= h >> 33
    return h


def seeded_hash(seed: int, *parts: str) -> int:
    """Finalized FNV-1a over the decimal seed and each part, NUL-separated."""
    blob = str(int(seed)).encode("utf-8")
    for part in parts:
        blob += b"\x00" + part.encode("utf-8")
    return fmix64(fnv1a_64(blob))


def unit_interval(seed: int, *parts: str) -> float:
    """Deterministic draw in [0, 1) keyed by (seed, parts)."""
    return seeded_hash(seed, *parts) / 2.0**64
