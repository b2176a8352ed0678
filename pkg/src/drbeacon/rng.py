"""Deterministic randomness for reproducible protocol runs.

A counter-mode SHA-256 generator plus a labelled derivation tree: one master
seed fans out into independent sub-streams per participant and per round, so
identical seeds replay byte-identical transcripts on any platform.
"""

from __future__ import annotations

import hashlib

from .numtheory import ser_bytes, ser_int

_DERIVE_TAG = b"drbeacon-seed"


def derive_key(seed: int, *labels) -> bytes:
    """32-byte sub-key for (seed, labels); labels are ints, str or bytes."""
    h = hashlib.sha256()
    h.update(ser_bytes(_DERIVE_TAG))
    h.update(ser_int(seed))
    for label in labels:
        if isinstance(label, int):
            h.update(b"i" + ser_int(label))
        elif isinstance(label, str):
            h.update(b"s" + ser_bytes(label.encode()))
        elif isinstance(label, bytes):
            h.update(b"b" + ser_bytes(label))
        else:
            raise TypeError(f"unsupported label type {type(label)!r}")
    return h.digest()


class HashDrbg:
    """SHA-256 counter-mode byte stream with integer helpers.

    Not a vetted DRBG construction; it exists to make protocol runs and
    tests reproducible, with the system entropy path injected separately
    where real randomness is wanted.
    """

    def __init__(self, key: bytes):
        self._key = key
        self._counter = 0
        self._buffer = b""

    @classmethod
    def from_seed(cls, seed: int, *labels) -> "HashDrbg":
        return cls(derive_key(seed, *labels))

    def randbytes(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(
                ser_bytes(self._key) + ser_int(self._counter)).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def getrandbits(self, k: int) -> int:
        if k <= 0:
            raise ValueError("bit count must be positive")
        nbytes = (k + 7) // 8
        value = int.from_bytes(self.randbytes(nbytes), "big")
        return value >> (8 * nbytes - k)

    def randrange(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        k = bound.bit_length()
        while True:
            value = self.getrandbits(k)
            if value < bound:
                return value
