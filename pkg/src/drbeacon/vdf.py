"""Delay-function lifecycle: parameter setup, input sampling, slow and
trapdoor evaluation, and dispatch into the two proof schemes.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import pietrzak, wesolowski
from .hashing import DEFAULT_SUITE, HashSuite
from .numtheory import (
    MAX_STEPS,
    GroupElement,
    OpCounter,
    RswModulus,
    Trapdoor,
    TrapdoorMismatch,
    rsw_eval,
    rsw_sample,
    rsw_setup,
    rsw_td_eval,
)

SCHEMES = (wesolowski.SCHEME, pietrzak.SCHEME)

Proof = wesolowski.WesolowskiProof | pietrzak.PietrzakProof


@dataclass(frozen=True)
class PublicParams:
    """Everything a verifier needs: modulus, step count, hash suite, scheme."""

    modulus: RswModulus
    T: int
    scheme: str
    suite: HashSuite = DEFAULT_SUITE

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown proof scheme {self.scheme!r}")
        if not 2 <= self.T < MAX_STEPS:
            raise ValueError("step count must satisfy 2 <= T < 2^64")
        if self.scheme == pietrzak.SCHEME and not pietrzak.is_power_of_two(self.T):
            raise ValueError("pietrzak step counts must be powers of two")

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "lambda": self.modulus.bits,
                "N": format(self.modulus.n, "x"), "T": self.T,
                "hash_suite": self.suite.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "PublicParams":
        modulus = RswModulus(n=int(data["N"], 16), bits=data["lambda"])
        return cls(modulus=modulus, T=data["T"], scheme=data["scheme"],
                   suite=HashSuite.from_dict(data["hash_suite"]))


@dataclass(frozen=True)
class EvalOutput:
    y: GroupElement
    advice: bytes = b""  # kept for interface fidelity; both schemes recompute


def setup(bits: int, T: int, scheme: str, rng=None,
          forced_primes: tuple[int, int] | None = None,
          suite: HashSuite = DEFAULT_SUITE) -> tuple[PublicParams, Trapdoor]:
    """Fresh modulus plus parameters; the trapdoor stays with the caller."""
    modulus, trapdoor = rsw_setup(bits, rng, forced_primes)
    return PublicParams(modulus=modulus, T=T, scheme=scheme, suite=suite), trapdoor


def sample(pp: PublicParams, rng) -> GroupElement:
    return rsw_sample(pp.modulus, rng)


def evaluate(pp: PublicParams, x: GroupElement,
             counter: OpCounter | None = None, cancel=None) -> EvalOutput:
    """Slow path: T sequential squarings."""
    _check_membership(pp, x)
    return EvalOutput(y=rsw_eval(pp.modulus, pp.T, x, counter, cancel))


def td_evaluate(pp: PublicParams, trapdoor: Trapdoor, x: GroupElement,
                counter: OpCounter | None = None) -> EvalOutput:
    """Fast path through the group order; equals evaluate() exactly."""
    _check_membership(pp, x)
    return EvalOutput(y=rsw_td_eval(pp.modulus, trapdoor, pp.T, x, counter))


def prove(pp: PublicParams, x: GroupElement, mu: bytes, y: GroupElement,
          advice: bytes = b"", T: int | None = None,
          counter: OpCounter | None = None, cancel=None) -> Proof:
    T = pp.T if T is None else T
    if pp.scheme == wesolowski.SCHEME:
        return wesolowski.prove(pp.suite, x, mu, y, T, counter, cancel)
    return pietrzak.prove(pp.suite, x, mu, y, T, counter, cancel)


def td_prove(pp: PublicParams, trapdoor: Trapdoor, x: GroupElement, mu: bytes,
             y: GroupElement, advice: bytes = b"", T: int | None = None,
             counter: OpCounter | None = None) -> Proof:
    if not trapdoor.matches(pp.modulus):
        raise TrapdoorMismatch("trapdoor does not factor this modulus")
    T = pp.T if T is None else T
    if pp.scheme == wesolowski.SCHEME:
        return wesolowski.td_prove(pp.suite, trapdoor, x, mu, y, T, counter)
    return pietrzak.td_prove(pp.suite, trapdoor, x, mu, y, T, counter)


def verify(pp: PublicParams, x: GroupElement, mu: bytes, y: GroupElement,
           proof: Proof, T: int | None = None) -> bool:
    """Accept or reject a claimed (y, proof) for input x under watermark mu."""
    T = pp.T if T is None else T
    if pp.scheme == wesolowski.SCHEME:
        if not isinstance(proof, wesolowski.WesolowskiProof):
            return False
        return wesolowski.verify(pp.suite, x, mu, y, proof, T)
    if not isinstance(proof, pietrzak.PietrzakProof):
        return False
    return pietrzak.verify(pp.suite, x, mu, y, proof, T)


def proof_from_dict(data: dict) -> Proof:
    scheme = data.get("scheme")
    if scheme == wesolowski.SCHEME:
        return wesolowski.WesolowskiProof.from_dict(data)
    if scheme == pietrzak.SCHEME:
        return pietrzak.PietrzakProof.from_dict(data)
    raise ValueError(f"unknown proof scheme {scheme!r}")


def _check_membership(pp: PublicParams, x: GroupElement) -> None:
    if x.modulus.n != pp.modulus.n:
        raise ValueError("input element belongs to a different group")
