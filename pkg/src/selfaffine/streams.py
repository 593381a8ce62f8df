"""Keyed counter-based uniforms for tree nodes.

Every node of an m-ary tree gets a 64-bit code (root 0, child d of node
c is ``c*m + d + 1``).  A node's random vector is a pure function of
(master seed, node code, slot), produced by chained splitmix64 rounds,
so any traversal order, any worker count, and any partial materialization
see identical randomness.  Laws that admit an inverse-CDF transform
consume exactly one uniform per component, which keeps this mapping
stable; everything else falls back to a per-node PCG64 stream.
"""

from __future__ import annotations

import numpy as np

from .errors import ResourceLimitError

__all__ = [
    "word_code",
    "child_codes",
    "check_code_capacity",
    "node_uniforms",
    "node_rng",
]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SLOT = np.uint64(0xD1B54A32D192ED03)
# Codes must stay clear of uint64 wraparound with headroom for the slot mix.
_CODE_LIMIT = np.uint64(1) << np.uint64(62)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = (x + _GAMMA).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def word_code(word: tuple[int, ...], m: int) -> int:
    code = 0
    for d in word:
        code = code * m + d + 1
    return code


def child_codes(codes: np.ndarray, m: int) -> np.ndarray:
    """Codes of all m children per node, shape (len(codes), m)."""
    codes = np.asarray(codes, dtype=np.uint64)
    if codes.size and int(codes.max()) >= int(_CODE_LIMIT) // m - m:
        raise ResourceLimitError("node codes would overflow the 64-bit key space")
    d = np.arange(1, m + 1, dtype=np.uint64)
    return codes[:, None] * np.uint64(m) + d[None, :]


def check_code_capacity(m: int, depth: int) -> None:
    """Fail fast when a full depth-``depth`` m-ary tree exceeds the key space."""
    if depth * np.log2(m) >= 61:
        raise ResourceLimitError(
            f"m={m} at depth {depth} exceeds the 64-bit node key space"
        )


def node_uniforms(seed: int, codes: np.ndarray, k: int) -> np.ndarray:
    """Uniforms in [0, 1) keyed by (seed, code, slot); shape (len(codes), k)."""
    codes = np.asarray(codes, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + np.zeros(1, np.uint64))[0]
        base = _splitmix64(codes ^ key)
        out = np.empty((codes.size, k), dtype=np.float64)
        for slot in range(k):
            h = _splitmix64(base ^ (np.uint64(slot) * _SLOT + key))
            out[:, slot] = (h >> np.uint64(11)) * (1.0 / (1 << 53))
    return out


def node_rng(seed: int, word: tuple[int, ...]) -> np.random.Generator:
    """Independent per-node stream for laws without an inverse-CDF transform."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(word))))
