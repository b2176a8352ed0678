"""Watermarked recursive-halving proof: log2(T) midpoints let a verifier
fold the claim y = x^(2^T) down to a single squaring check.

T must be a power of two. Midpoints are ordered from the largest interval
to the smallest, and the verifier re-derives each fold challenge from the
pre-fold (x, y, u) triple exactly as the prover saw it.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpz, powmod

from .hashing import HashSuite, validate_watermark
from .numtheory import (
    EvalCancelled,
    GroupElement,
    OpCounter,
    RswModulus,
    Trapdoor,
    TrapdoorMismatch,
    is_group_member,
    rsw_eval,
)

SCHEME = "pietrzak"


def is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True)
class PietrzakProof:
    midpoints: tuple[int, ...]
    mu: bytes

    scheme = SCHEME

    def to_dict(self) -> dict:
        return {"scheme": SCHEME,
                "midpoints": [format(u, "x") for u in self.midpoints],
                "mu": self.mu.hex()}

    @classmethod
    def from_dict(cls, data: dict) -> "PietrzakProof":
        if data.get("scheme") != SCHEME:
            raise ValueError("not a pietrzak proof")
        return cls(midpoints=tuple(int(u, 16) for u in data["midpoints"]),
                   mu=bytes.fromhex(data["mu"]))


def _fold(suite: HashSuite, x: GroupElement, y: GroupElement, u: GroupElement,
          half: int, mu: bytes, phi: int | None) -> tuple[GroupElement, GroupElement]:
    # Challenge binds the pre-fold triple; the fold itself happens after.
    r = suite.h_random(x, half, y, u, mu)
    n = mpz(x.modulus.n)
    exponent = r if phi is None else r % phi
    new_x = powmod(x.value, exponent, n) * u.value % n
    new_y = powmod(u.value, exponent, n) * y.value % n
    return (GroupElement(int(new_x), x.modulus), GroupElement(int(new_y), x.modulus))


def _prove_level(suite: HashSuite, x: GroupElement, mu: bytes, y: GroupElement,
                 steps: int, acc: list[int], trapdoor: Trapdoor | None,
                 counter: OpCounter | None, cancel) -> None:
    if steps == 1:
        return
    half = steps // 2
    if trapdoor is None:
        u = rsw_eval(x.modulus, half, x, counter, cancel)
    else:
        v = powmod(2, half, trapdoor.phi)
        u = GroupElement(int(powmod(x.value, v, x.modulus.n)), x.modulus)
    acc.append(u.value)
    phi = trapdoor.phi if trapdoor is not None else None
    new_x, new_y = _fold(suite, x, y, u, half, mu, phi)
    _prove_level(suite, new_x, mu, new_y, half, acc, trapdoor, counter, cancel)


def prove(suite: HashSuite, x: GroupElement, mu: bytes, y: GroupElement,
          steps: int, counter: OpCounter | None = None, cancel=None) -> PietrzakProof:
    """Midpoint list via sequential squarings at every level (no trapdoor)."""
    validate_watermark(mu)
    if not is_power_of_two(steps):
        raise ValueError("halving proofs need a power-of-two step count")
    acc: list[int] = []
    _prove_level(suite, x, mu, y, steps, acc, None, counter, cancel)
    return PietrzakProof(midpoints=tuple(acc), mu=mu)


def td_prove(suite: HashSuite, trapdoor: Trapdoor, x: GroupElement, mu: bytes,
             y: GroupElement, steps: int, counter: OpCounter | None = None) -> PietrzakProof:
    """Same midpoint list as prove(), with every exponent reduced mod phi."""
    validate_watermark(mu)
    if not is_power_of_two(steps):
        raise ValueError("halving proofs need a power-of-two step count")
    if not trapdoor.matches(x.modulus):
        raise TrapdoorMismatch("trapdoor does not factor this modulus")
    acc: list[int] = []
    _prove_level(suite, x, mu, y, steps, acc, trapdoor, counter, None)
    return PietrzakProof(midpoints=tuple(acc), mu=mu)


def verify(suite: HashSuite, x: GroupElement, mu: bytes, y: GroupElement,
           proof: PietrzakProof, steps: int) -> bool:
    """Fold through the midpoints in order; accept iff the base case
    y = x^2 holds once T reaches 1."""
    validate_watermark(mu)
    if not is_power_of_two(steps):
        return False
    if len(proof.midpoints) != steps.bit_length() - 1:
        return False
    modulus: RswModulus = x.modulus
    for value in proof.midpoints:
        if not is_group_member(value, modulus):
            return False
        u = GroupElement(value, modulus)
        half = steps // 2
        x, y = _fold(suite, x, y, u, half, mu, None)
        steps = half
    return y.value == x.value * x.value % modulus.n
