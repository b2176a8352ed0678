"""Domain-separated hash roles shared by the delay function and the beacon.

One 256-bit hash backs every role; each role prepends its own fixed tag and
length-prefixes every field, so no two roles can ever feed the underlying
hash the same input. Primes for the proof-of-exponentiation challenge are
derived by increment search from a hashed seed.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from .numtheory import (
    GroupElement,
    RswModulus,
    GenerationError,
    is_probable_prime,
    ser_bytes,
    ser_int,
)

TAG_PRIME = b"Hprime"
TAG_RANDOM = b"Hrandom"
TAG_RAND_TO_INPUT = b"HrandToinput"
TAG_INPUT_TO_RAND = b"HinputTorand"
TAG_COMMIT = b"Hcommit"
# The commit digest is mapped into a participant's group by the same
# rejection procedure as HrandToinput, under its own tag.
TAG_COMMIT_TO_INPUT = b"HcommitToinput"

ALL_TAGS = (TAG_PRIME, TAG_RANDOM, TAG_RAND_TO_INPUT, TAG_INPUT_TO_RAND,
            TAG_COMMIT, TAG_COMMIT_TO_INPUT)

BEACON_BYTES = 32
MAX_PRIME_SEARCH = 2**20
WATERMARK_MAX_BYTES = 64


def validate_watermark(mu: bytes) -> bytes:
    if not isinstance(mu, bytes) or not 1 <= len(mu) <= WATERMARK_MAX_BYTES:
        raise ValueError("watermark must be 1..64 bytes")
    return mu


@dataclass(frozen=True)
class HashSuite:
    """Identifies the hash configuration of a protocol instance.

    `bits` is the digest/challenge security parameter (fixed at 256 for the
    digest roles); `prime_bits` caps the challenge primes at 128 bits so the
    quotient exponent stays nontrivial at desk-scale step counts.
    """

    name: str = "sha256"
    bits: int = 256
    prime_bits: int = 128

    def __post_init__(self) -> None:
        if self.name != "sha256":
            raise ValueError(f"unsupported hash suite {self.name!r}")
        if self.bits != 256:
            raise ValueError("digest security parameter is fixed at 256 bits")
        if not 8 <= self.prime_bits <= self.bits:
            raise ValueError("prime_bits out of range")

    def to_dict(self) -> dict:
        return {"name": self.name, "bits": self.bits, "prime_bits": self.prime_bits}

    @classmethod
    def from_dict(cls, data: dict) -> "HashSuite":
        return cls(name=data["name"], bits=data["bits"], prime_bits=data["prime_bits"])

    # -- primitives ---------------------------------------------------------

    def _digest(self, tag: bytes, *parts: bytes) -> bytes:
        h = hashlib.sha256()
        h.update(ser_bytes(tag))
        for part in parts:
            h.update(part)
        return h.digest()

    def _expand(self, seed: bytes, nbits: int) -> int:
        """Counter-mode expansion of a seed to exactly nbits bits."""
        nbytes = (nbits + 7) // 8
        stream = b""
        counter = 0
        while len(stream) < nbytes:
            stream += hashlib.sha256(ser_bytes(seed) + ser_int(counter)).digest()
            counter += 1
        return int.from_bytes(stream[:nbytes], "big") >> (8 * nbytes - nbits)

    # -- the five roles -----------------------------------------------------

    def h_prime(self, x: GroupElement, y: GroupElement, mu: bytes) -> int:
        """Deterministic prime of prime_bits bits bound to (x, y, watermark).

        Seed-hash, force top and bottom bits, then increment by 2 until
        Miller-Rabin accepts.
        """
        if not x.same_group(y):
            raise ValueError("x and y must share a modulus")
        validate_watermark(mu)
        seed = self._digest(TAG_PRIME, ser_int(x.value), ser_int(y.value), ser_bytes(mu))
        candidate = self._expand(seed, self.prime_bits)
        candidate |= (1 << (self.prime_bits - 1)) | 1
        for _ in range(MAX_PRIME_SEARCH):
            if is_probable_prime(candidate):
                return candidate
            candidate += 2
        raise GenerationError("prime search exhausted")  # pragma: no cover

    def h_random(self, x: GroupElement, half_steps: int, y: GroupElement,
                 u: GroupElement, mu: bytes) -> int:
        """Uniform challenge in [1, 2^bits] for the halving protocol."""
        validate_watermark(mu)
        seed = self._digest(TAG_RANDOM, ser_int(x.value), ser_int(half_steps),
                            ser_int(y.value), ser_int(u.value), ser_bytes(mu))
        return self._expand(seed, self.bits) + 1

    def h_rand_to_input(self, prev_beacon: bytes, modulus: RswModulus) -> GroupElement:
        """Map a 32-byte beacon value into the group of the given modulus."""
        if len(prev_beacon) != BEACON_BYTES:
            raise ValueError("beacon values are exactly 32 bytes")
        return self.map_to_group(prev_beacon, modulus, TAG_RAND_TO_INPUT)

    def h_input_to_rand(self, y_combined: int) -> bytes:
        """32-byte beacon value from an aggregated evaluation output."""
        if y_combined < 1:
            raise ValueError("aggregated output must be >= 1")
        return self._digest(TAG_INPUT_TO_RAND, ser_int(y_combined))

    def h_commit(self, nonce: bytes, x_round: GroupElement) -> bytes:
        """Commitment digest binding a secret nonce to the round input."""
        if len(nonce) == 0:
            raise ValueError("nonce must be non-empty")
        return self._digest(TAG_COMMIT, ser_bytes(nonce), ser_int(x_round.value))

    # -- shared mapping -----------------------------------------------------

    def map_to_group(self, seed: bytes, modulus: RswModulus, tag: bytes) -> GroupElement:
        """Hash-expand into [0, N) with a retry counter; reject residues that
        are zero or share a factor with N."""
        nbits = modulus.n.bit_length() + 64
        for attempt in range(128):
            block = self._digest(tag, ser_bytes(seed), ser_int(modulus.n), ser_int(attempt))
            value = self._expand(block, nbits) % modulus.n
            if value != 0 and math.gcd(value, modulus.n) == 1:
                return GroupElement(value, modulus)
        raise GenerationError("group mapping exhausted retries")  # pragma: no cover

    def commit_to_input(self, digest: bytes, modulus: RswModulus) -> GroupElement:
        return self.map_to_group(digest, modulus, TAG_COMMIT_TO_INPUT)


DEFAULT_SUITE = HashSuite()
