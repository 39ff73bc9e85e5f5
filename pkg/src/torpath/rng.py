"""Counter-based, splittable uniform random streams.

Each draw is ``blake2b(seed, path, counter)`` truncated to 53 bits, so a
stream is fully described by its seed, its split path and how many draws it
has made.  Splitting never consumes draws from the parent, which keeps
per-client and per-circuit streams independent of evaluation order.
"""

from __future__ import annotations

import hashlib
import struct

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / (1 << 53)


def _encode_key(key) -> bytes:
    if isinstance(key, bool):
        raise TypeError("stream keys must be int or str")
    if isinstance(key, int):
        return b"i" + str(key).encode()
    if isinstance(key, str):
        return b"s" + key.encode()
    raise TypeError(f"stream keys must be int or str, got {type(key).__name__}")


class RandomStream:
    """Deterministic source of uniform [0, 1) draws.

    >>> a, b = RandomStream(7), RandomStream(7)
    >>> [a.uniform() for _ in range(3)] == [b.uniform() for _ in range(3)]
    True
    """

    __slots__ = ("seed", "path", "position", "_prefix")

    def __init__(self, seed: int, path: tuple = ()):
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise TypeError("seed must be an integer")
        self.seed = seed & _MASK64
        self.path = tuple(path)
        self.position = 0
        parts = [struct.pack("<Q", self.seed)]
        for key in self.path:
            enc = _encode_key(key)
            parts.append(struct.pack("<I", len(enc)) + enc)
        self._prefix = hashlib.blake2b(b"".join(parts), digest_size=32).digest()

    def split(self, *keys) -> "RandomStream":
        """Return an independent child stream addressed by ``keys``."""
        return RandomStream(self.seed, self.path + keys)

    def uniform(self) -> float:
        h = hashlib.blake2b(
            self._prefix + struct.pack("<Q", self.position), digest_size=8
        ).digest()
        self.position += 1
        return (int.from_bytes(h, "little") >> 11) * _INV53

    def uniform_range(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()

    def index(self, n: int) -> int:
        """Uniform integer in ``range(n)`` from a single draw."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path!r}, position={self.position})"
