"""Watermarked proof of exponentiation: a single group element certifies
y = x^(2^T), bound to the evaluator's watermark through the challenge prime.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpz, powmod

from .hashing import HashSuite, validate_watermark
from .numtheory import (
    CANCEL_CHECK_INTERVAL,
    EvalCancelled,
    GroupElement,
    OpCounter,
    Trapdoor,
    TrapdoorMismatch,
    group_pow,
    is_group_member,
)

SCHEME = "wesolowski"


@dataclass(frozen=True)
class WesolowskiProof:
    pi: int
    mu: bytes

    scheme = SCHEME

    def to_dict(self) -> dict:
        return {"scheme": SCHEME, "pi": format(self.pi, "x"), "mu": self.mu.hex()}

    @classmethod
    def from_dict(cls, data: dict) -> "WesolowskiProof":
        if data.get("scheme") != SCHEME:
            raise ValueError("not a wesolowski proof")
        return cls(pi=int(data["pi"], 16), mu=bytes.fromhex(data["mu"]))


def prove(suite: HashSuite, x: GroupElement, mu: bytes, y: GroupElement,
          steps: int, counter: OpCounter | None = None, cancel=None,
          _challenge_override: int | None = None) -> WesolowskiProof:
    """Compute pi = x^floor(2^T / l) without the trapdoor.

    2^T is never materialized: the quotient digits fall out of a streaming
    long division, costing T sequential squarings of the accumulator.
    `_challenge_override` substitutes a known challenge prime for
    hand-checkable tests and must stay None in real use.
    """
    validate_watermark(mu)
    l = _challenge_override or suite.h_prime(x, y, mu)
    n = mpz(x.modulus.n)
    base = mpz(x.value)
    pi = mpz(1)
    remainder = 1
    for i in range(steps):
        if cancel is not None and i % CANCEL_CHECK_INTERVAL == 0 and cancel.is_set():
            raise EvalCancelled(f"proving cancelled after {i} squarings")
        pi = pi * pi % n
        if counter is not None:
            counter.squarings += 1
        remainder <<= 1
        if remainder >= l:
            remainder -= l
            pi = pi * base % n
    return WesolowskiProof(pi=int(pi), mu=mu)


def td_prove(suite: HashSuite, trapdoor: Trapdoor, x: GroupElement, mu: bytes,
             y: GroupElement, steps: int, counter: OpCounter | None = None,
             _challenge_override: int | None = None) -> WesolowskiProof:
    """Trapdoor path: exponentiate by floor(2^T / l) reduced mod phi(N).

    Produces the identical proof element in time polynomial in the modulus
    size and log T.
    """
    validate_watermark(mu)
    if not trapdoor.matches(x.modulus):
        raise TrapdoorMismatch("trapdoor does not factor this modulus")
    l = _challenge_override or suite.h_prime(x, y, mu)
    # floor(2^T / l) = (2^T - r) / l with r = 2^T mod l; reducing 2^T - r
    # modulo l*phi keeps the quotient exact and already reduced mod phi.
    r = int(powmod(2, steps, l))
    lphi = l * trapdoor.phi
    exponent = int((powmod(2, steps, lphi) - r) % lphi) // l
    pi = group_pow(x.value, exponent, x.modulus.n, counter)
    return WesolowskiProof(pi=pi, mu=mu)


def verify(suite: HashSuite, x: GroupElement, mu: bytes, y: GroupElement,
           proof: WesolowskiProof, steps: int,
           _challenge_override: int | None = None) -> bool:
    """Accept iff pi^l * x^(2^T mod l) = y; cost is two small
    exponentiations, never T squarings."""
    validate_watermark(mu)
    if not is_group_member(proof.pi, x.modulus):
        return False
    l = _challenge_override or suite.h_prime(x, y, mu)
    r = powmod(2, steps, l)
    n = mpz(x.modulus.n)
    lhs = powmod(proof.pi, l, n) * powmod(x.value, r, n) % n
    return lhs == y.value
