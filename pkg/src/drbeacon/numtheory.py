"""Arbitrary-precision number theory for the RSA-group delay beacon.

Safe-prime modulus generation, canonical group elements, and the two
evaluation kernels everything else is built on: T sequential modular
squarings, and the fast trapdoor shortcut through the group order.
All randomness is drawn from explicitly injected sources; nothing in
this module touches global RNG state.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from gmpy2 import mpz, powmod

MAX_STEPS = 2**64  # step counts must fit an unsigned 64-bit value
CANCEL_CHECK_INTERVAL = 4096  # squarings between cooperative cancel checks


class GenerationError(RuntimeError):
    """Raised when a randomized search exhausts its attempt budget."""


class TrapdoorMismatch(ValueError):
    """Raised when a trapdoor does not factor the modulus it is used with."""


class EvalCancelled(RuntimeError):
    """Raised when a long-running evaluation observes its cancel token."""


class OpCounter:
    """Tallies of modular operations, used by the sequentiality checks.

    ``squarings`` counts the sequential squarings of the slow evaluation
    path; ``group_muls`` counts multiplications modulo N performed by the
    instrumented trapdoor exponentiation (squarings included); ``exp_muls``
    counts the exponent bookkeeping multiplications modulo the group order.
    """

    __slots__ = ("squarings", "group_muls", "exp_muls")

    def __init__(self) -> None:
        self.squarings = 0
        self.group_muls = 0
        self.exp_muls = 0

    def __repr__(self) -> str:
        return (f"OpCounter(squarings={self.squarings}, "
                f"group_muls={self.group_muls}, exp_muls={self.exp_muls})")


# ---------------------------------------------------------------------------
# Big-integer serialization: big-endian minimal-length, 4-byte length prefix.
# Every hash and transcript in the protocol builds on these, so the byte
# layout is normative and must never change.
# ---------------------------------------------------------------------------

def int_to_bytes(value: int) -> bytes:
    """Minimal-length big-endian bytes of a nonnegative integer (0 -> b'')."""
    if value < 0:
        raise ValueError("negative integers are not serializable")
    return value.to_bytes((value.bit_length() + 7) // 8, "big")


def ser_bytes(data: bytes) -> bytes:
    """Length-prefix a byte string with a 4-byte big-endian length."""
    if len(data) >= 2**32:
        raise ValueError("byte string too long to serialize")
    return len(data).to_bytes(4, "big") + data


def ser_int(value: int) -> bytes:
    """Length-prefixed serialization of a nonnegative integer."""
    return ser_bytes(int_to_bytes(value))


# ---------------------------------------------------------------------------
# Primality
# ---------------------------------------------------------------------------

def _small_primes(limit: int = 1000) -> tuple[int, ...]:
    sieve = bytearray([1]) * (limit + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, int(limit**0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(sieve[i * i::i]))
    return tuple(i for i, flag in enumerate(sieve) if flag)


SMALL_PRIMES = _small_primes()


def _witness(n: int, index: int) -> int:
    # Deterministic Miller-Rabin bases hashed from (n, index): reproducible
    # across runs and platforms, unpredictable enough for adversarial n.
    digest = hashlib.sha256(b"mr-witness" + ser_int(n) + ser_int(index)).digest()
    return 2 + int.from_bytes(digest, "big") % (n - 3)


def is_probable_prime(n: int, rounds: int = 64) -> bool:
    """Miller-Rabin test with trial division; error bound 4^-rounds."""
    if n < 2:
        return False
    for p in SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    nz = mpz(n)
    for i in range(rounds):
        x = powmod(_witness(n, i), d, nz)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = powmod(x, 2, nz)
            if x == n - 1:
                break
        else:
            return False
    return True


def is_safe_prime(p: int, rounds: int = 64) -> bool:
    """True when p and (p-1)/2 are both (probable) primes."""
    return p > 4 and p % 2 == 1 and is_probable_prime(p, rounds) \
        and is_probable_prime((p - 1) // 2, rounds)


def generate_safe_prime(bits: int, rng, max_attempts: int = 1_000_000) -> int:
    """Sample a safe prime of exactly `bits` bits from the given rng.

    Rejection sampling: draw a random odd (bits-1)-bit candidate p', keep it
    when p' and 2p'+1 both pass Miller-Rabin. Cheap single-round screens run
    before the full 64-round confirmation.
    """
    if bits < 3:
        raise ValueError("safe primes need at least 3 bits")
    for _ in range(max_attempts):
        half = rng.getrandbits(bits - 1) | (1 << (bits - 2)) | 1
        p = 2 * half + 1
        if not is_probable_prime(half, rounds=1):
            continue
        if not is_probable_prime(p, rounds=1):
            continue
        if is_probable_prime(half, rounds=64) and is_probable_prime(p, rounds=64):
            return p
    raise GenerationError(f"no {bits}-bit safe prime found in {max_attempts} attempts")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SafePrimePair:
    """Two distinct safe primes p = 2p'+1 and q = 2q'+1."""

    p: int
    q: int
    p_prime: int
    q_prime: int

    def __post_init__(self) -> None:
        if self.p == self.q:
            raise ValueError("safe prime factors must be distinct")
        if self.p != 2 * self.p_prime + 1 or self.q != 2 * self.q_prime + 1:
            raise ValueError("safe prime linkage p = 2p'+1 violated")

    @classmethod
    def from_primes(cls, p: int, q: int) -> "SafePrimePair":
        pair = cls(p, q, (p - 1) // 2, (q - 1) // 2)
        for value in (pair.p, pair.q, pair.p_prime, pair.q_prime):
            if not is_probable_prime(value):
                raise ValueError(f"{value} is not prime")
        return pair


@dataclass(frozen=True)
class RswModulus:
    """Public modulus N = p*q of two secret safe primes; `bits` is the
    factor bit-length the modulus was generated for."""

    n: int
    bits: int

    def __post_init__(self) -> None:
        if self.n <= 8 or self.n % 2 == 0:
            raise ValueError("modulus must be odd and greater than 8")
        if self.bits < 2:
            raise ValueError("factor bit-length out of range")


@dataclass(frozen=True)
class Trapdoor:
    """Secret factors of a modulus and the group order (p-1)(q-1)."""

    p: int
    q: int
    phi: int

    def __post_init__(self) -> None:
        if self.phi != (self.p - 1) * (self.q - 1):
            raise ValueError("phi must equal (p-1)(q-1)")

    def matches(self, modulus: RswModulus) -> bool:
        return self.p * self.q == modulus.n


@dataclass(frozen=True)
class GroupElement:
    """Canonical residue in the multiplicative group mod N."""

    value: int
    modulus: RswModulus

    def __post_init__(self) -> None:
        if not 1 <= self.value < self.modulus.n:
            raise ValueError("group element out of canonical range [1, N-1]")
        if math.gcd(self.value, self.modulus.n) != 1:
            raise ValueError("residue is not coprime to the modulus")

    def same_group(self, other: "GroupElement") -> bool:
        return self.modulus.n == other.modulus.n


def is_group_member(value: int, modulus: RswModulus) -> bool:
    """Validity check for untrusted residues (used by verifiers)."""
    return 1 <= value < modulus.n and math.gcd(value, modulus.n) == 1


# ---------------------------------------------------------------------------
# RSW primitives
# ---------------------------------------------------------------------------

def rsw_setup(bits: int, rng=None, forced_primes: tuple[int, int] | None = None,
              max_attempts: int = 1_000_000) -> tuple[RswModulus, Trapdoor]:
    """Generate a modulus and its trapdoor from two fresh safe primes.

    `forced_primes` is the test-fixture path: it accepts an explicit (p, q)
    pair (still validated for safe-primality and p != q) so that tiny
    hand-checkable moduli such as N=77 are reproducible; bit-length
    equality is not enforced there.
    """
    if forced_primes is not None:
        pair = SafePrimePair.from_primes(*forced_primes)
    else:
        if bits < 16:
            raise ValueError("generated moduli need bits >= 16; use forced_primes below that")
        if rng is None:
            raise ValueError("a seeded rng is required for modulus generation")
        p = generate_safe_prime(bits, rng, max_attempts)
        q = p
        while q == p:
            q = generate_safe_prime(bits, rng, max_attempts)
        pair = SafePrimePair.from_primes(p, q)
    modulus = RswModulus(n=pair.p * pair.q, bits=bits)
    trapdoor = Trapdoor(p=pair.p, q=pair.q, phi=(pair.p - 1) * (pair.q - 1))
    return modulus, trapdoor


def rsw_sample(modulus: RswModulus, rng, max_retries: int = 128) -> GroupElement:
    """Uniform element of the group, coprimality enforced by rejection."""
    nbits = modulus.n.bit_length()
    for _ in range(max_retries):
        candidate = rng.getrandbits(nbits)
        if candidate == 0 or candidate >= modulus.n:
            continue
        if math.gcd(candidate, modulus.n) == 1:
            return GroupElement(candidate, modulus)
    raise GenerationError("sampling failed to find a coprime residue")


def _check_steps(steps: int) -> None:
    if not 1 <= steps < MAX_STEPS:
        raise ValueError("step count must satisfy 1 <= T < 2^64")


def rsw_eval(modulus: RswModulus, steps: int, x: GroupElement,
             counter: OpCounter | None = None, cancel=None) -> GroupElement:
    """x^(2^T) mod N by exactly T sequential squarings; never uses a trapdoor.

    `cancel` may be a threading.Event-like object; it is polled every
    CANCEL_CHECK_INTERVAL squarings and raises EvalCancelled when set.
    """
    _check_steps(steps)
    n = mpz(modulus.n)
    v = mpz(x.value)
    for i in range(steps):
        if cancel is not None and i % CANCEL_CHECK_INTERVAL == 0 and cancel.is_set():
            raise EvalCancelled(f"evaluation cancelled after {i} squarings")
        v = powmod(v, 2, n)
        if counter is not None:
            counter.squarings += 1
    return GroupElement(int(v), modulus)


def rsw_td_eval(modulus: RswModulus, trapdoor: Trapdoor, steps: int,
                x: GroupElement, counter: OpCounter | None = None) -> GroupElement:
    """x^(2^T) mod N through the group order: v = 2^T mod phi, then x^v.

    Runtime is polynomial in the modulus size and log T, independent of T.
    """
    _check_steps(steps)
    if not trapdoor.matches(modulus):
        raise TrapdoorMismatch("trapdoor does not factor this modulus")
    v = exponent_pow(2, steps, trapdoor.phi, counter)
    y = group_pow(x.value, v, modulus.n, counter)
    return GroupElement(y, modulus)


def group_pow(base: int, exponent: int, n: int, counter: OpCounter | None = None) -> int:
    """Modular exponentiation in the group; counts mod-N multiplications
    (squarings included) when a counter is supplied."""
    if counter is None:
        return int(powmod(base, exponent, n))
    if exponent == 0:
        return 1 % n
    nz = mpz(n)
    acc = mpz(base % n)
    for bit in bin(exponent)[3:]:  # left-to-right from the second-highest bit
        acc = acc * acc % nz
        counter.group_muls += 1
        if bit == "1":
            acc = acc * base % nz
            counter.group_muls += 1
    return int(acc)


def exponent_pow(base: int, exponent: int, order: int, counter: OpCounter | None = None) -> int:
    """Exponent bookkeeping modulo the group order, counted separately."""
    if counter is None:
        return int(powmod(base, exponent, order))
    if exponent == 0:
        return 1 % order
    oz = mpz(order)
    acc = mpz(base % order)
    for bit in bin(exponent)[3:]:
        acc = acc * acc % oz
        counter.exp_muls += 1
        if bit == "1":
            acc = acc * base % oz
            counter.exp_muls += 1
    return int(acc)
