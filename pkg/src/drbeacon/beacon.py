"""Round state machine for the n-party commit-reveal-recover beacon.

Each round: every participant derives a fresh input in its own group from
the previous beacon value and a secret nonce, publishes it, then opens it
fast with its trapdoor and a watermarked proof. Missing or invalid openings
are force-opened by anyone through the slow evaluation path, so the round
always ends in the same beacon value the honest openings would have given.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from . import vdf
from .hashing import BEACON_BYTES, HashSuite, validate_watermark
from .numtheory import (
    GroupElement,
    OpCounter,
    Trapdoor,
    is_group_member,
    ser_bytes,
    ser_int,
)
from .rng import HashDrbg
from .vdf import Proof, PublicParams

PHASES = ("commit", "reveal", "finalize", "recover", "done")
PATH_OPTIMISTIC = "optimistic"
PATH_PESSIMISTIC = "pessimistic"

_ATTEST_TAG = b"attest"


@dataclass(frozen=True)
class Attestation:
    """Stand-in for the setup validity proof: binds a factor bit-length
    claim to the modulus. A real proof system can replace it behind the
    same three-field surface."""

    bits_claim: int
    n_bits: int
    digest: bytes

    def to_dict(self) -> dict:
        return {"bits_claim": self.bits_claim, "n_bits": self.n_bits,
                "digest": self.digest.hex()}

    @classmethod
    def from_dict(cls, data: dict) -> "Attestation":
        return cls(bits_claim=data["bits_claim"], n_bits=data["n_bits"],
                   digest=bytes.fromhex(data["digest"]))


def make_attestation(bits: int, n: int) -> Attestation:
    digest = hashlib.sha256(ser_bytes(_ATTEST_TAG) + ser_int(bits) + ser_int(n)).digest()
    return Attestation(bits_claim=bits, n_bits=n.bit_length(), digest=digest)


@dataclass(frozen=True)
class ParticipantIdentity:
    index: int
    mu: bytes
    pp: PublicParams
    attestation: Attestation

    def to_dict(self) -> dict:
        return {"index": self.index, "mu": self.mu.hex(), "pp": self.pp.to_dict(),
                "attestation": self.attestation.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "ParticipantIdentity":
        return cls(index=data["index"], mu=bytes.fromhex(data["mu"]),
                   pp=PublicParams.from_dict(data["pp"]),
                   attestation=Attestation.from_dict(data["attestation"]))


def default_watermark(index: int) -> bytes:
    return f"participant-{index}".encode()


def setup_participants(bits: int, T: int, scheme: str, n: int, seed: int,
                       suite: HashSuite | None = None,
                       fixture_primes: list[tuple[int, int]] | None = None,
                       ) -> list[tuple[ParticipantIdentity, Trapdoor]]:
    """Independent modulus per participant; trapdoors go only to their owners."""
    if n < 2:
        raise ValueError("the protocol needs at least 2 participants")
    if fixture_primes is not None and len(fixture_primes) != n:
        raise ValueError("fixture mode needs one prime pair per participant")
    suite = suite or HashSuite()
    members = []
    for i in range(n):
        forced = fixture_primes[i] if fixture_primes is not None else None
        rng = HashDrbg.from_seed(seed, "modulus", i)
        pp, trapdoor = vdf.setup(bits, T, scheme, rng, forced, suite)
        identity = ParticipantIdentity(
            index=i, mu=default_watermark(i), pp=pp,
            attestation=make_attestation(bits, pp.modulus.n))
        members.append((identity, trapdoor))
    return members


def verify_setup(identities: list[ParticipantIdentity]) -> dict[int, str | None]:
    """Per-participant setup check: modulus shape, attestation binding, and
    cross-participant consistency of T, scheme, suite and watermarks.

    Returns index -> None on accept, or a rejection reason.
    """
    results: dict[int, str | None] = {}
    reference = identities[0].pp if identities else None
    seen_mu: dict[bytes, int] = {}
    for identity in identities:
        results[identity.index] = _check_identity(identity, reference, seen_mu)
    return results


def _check_identity(identity: ParticipantIdentity, reference: PublicParams,
                    seen_mu: dict[bytes, int]) -> str | None:
    n = identity.pp.modulus.n
    att = identity.attestation
    if n <= 8 or n % 2 == 0:
        return "modulus must be odd and greater than 8"
    try:
        validate_watermark(identity.mu)
    except ValueError as exc:
        return str(exc)
    if identity.mu in seen_mu and seen_mu[identity.mu] != identity.index:
        return "watermark reused by another participant"
    seen_mu[identity.mu] = identity.index
    if att.bits_claim != identity.pp.modulus.bits:
        return "attested bit-length differs from the public parameters"
    if att.n_bits != n.bit_length() or n.bit_length() < 2 * att.bits_claim - 1:
        return "modulus size inconsistent with the attested factor size"
    if att.digest != make_attestation(att.bits_claim, n).digest:
        return "attestation digest does not match the modulus"
    if identity.pp.T != reference.T:
        return "step count differs from the instance parameters"
    if identity.pp.scheme != reference.scheme:
        return "proof scheme differs from the instance parameters"
    if identity.pp.suite != reference.suite:
        return "hash suite differs from the instance parameters"
    return None


# ---------------------------------------------------------------------------
# Round state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundInput:
    x_round: GroupElement  # derived from the previous beacon, recomputable
    x_input: GroupElement  # commit digest mapped into the owner's group


@dataclass(frozen=True)
class Reveal:
    y: GroupElement
    proof: Proof


@dataclass(frozen=True)
class RecoveredEval:
    y: GroupElement
    proof: Proof
    recovered_by: int


@dataclass
class RoundState:
    r: int
    prev_beacon: bytes
    phase: str = "commit"
    inputs: dict[int, RoundInput] = field(default_factory=dict)
    reveals: dict[int, Reveal] = field(default_factory=dict)
    faulty: set[int] = field(default_factory=set)
    recovered: dict[int, RecoveredEval] = field(default_factory=dict)
    beacon: bytes | None = None
    path: str | None = None

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValueError("round indices start at 1")
        if len(self.prev_beacon) != BEACON_BYTES:
            raise ValueError("previous beacon must be 32 bytes")

    def contributors(self) -> list[int]:
        return sorted(i for i in self.reveals if i not in self.faulty)


def derive_round_input(identity: ParticipantIdentity, prev_beacon: bytes,
                       nonce: bytes) -> RoundInput:
    """Commit-phase derivation: beacon -> per-group base value, then the
    nonce commitment digest mapped into the participant's group. The nonce
    is never revealed; it injects entropy, it is not an opening key."""
    suite = identity.pp.suite
    x_round = suite.h_rand_to_input(prev_beacon, identity.pp.modulus)
    digest = suite.h_commit(nonce, x_round)
    x_input = suite.commit_to_input(digest, identity.pp.modulus)
    return RoundInput(x_round=x_round, x_input=x_input)


def round_nonce(seed: int, r: int, index: int) -> bytes:
    """Per-round secret nonce from the instance seed derivation tree."""
    return HashDrbg.from_seed(seed, "nonce", r, index).randbytes(32)


def make_reveal(identity: ParticipantIdentity, trapdoor: Trapdoor,
                x_input: GroupElement,
                eval_counter: OpCounter | None = None) -> Reveal:
    """Fast trapdoor opening with a proof watermarked by the owner.

    `eval_counter` instruments only the trapdoor evaluation, so its
    group-multiplication tally bounds the opening cost independently of
    the proving cost.
    """
    out = vdf.td_evaluate(identity.pp, trapdoor, x_input, eval_counter)
    proof = vdf.td_prove(identity.pp, trapdoor, x_input, identity.mu, out.y)
    return Reveal(y=out.y, proof=proof)


def finalize(state: RoundState, identities: list[ParticipantIdentity]) -> RoundState:
    """Verify all published openings; emit the beacon when none failed,
    otherwise hand the round to the recovery path."""
    if state.phase != "reveal":
        raise ValueError(f"finalize requires the reveal phase, not {state.phase}")
    roster = {identity.index: identity for identity in identities}
    verified: set[int] = set()
    for i, reveal in state.reveals.items():
        identity = roster[i]
        if i not in state.inputs:
            continue
        if reveal.proof.mu != identity.mu:
            continue
        if vdf.verify(identity.pp, state.inputs[i].x_input, identity.mu,
                      reveal.y, reveal.proof):
            verified.add(i)
    state.faulty = {idx.index for idx in identities} - verified
    if state.faulty:
        state.phase = "recover"
    else:
        _emit_beacon(state, identities, PATH_OPTIMISTIC)
    return state


def recover(state: RoundState, identities: list[ParticipantIdentity],
            recoverer: ParticipantIdentity) -> dict[int, int]:
    """Force-open every faulty participant that published an input, by the
    slow evaluation path, proving under the recoverer's watermark.

    Returns per-participant sequential squaring counts. Faulty participants
    that never published an input contribute nothing to the round.
    """
    if state.phase != "recover":
        raise ValueError(f"recover requires the recover phase, not {state.phase}")
    roster = {identity.index: identity for identity in identities}
    squarings: dict[int, int] = {}
    for j in sorted(state.faulty):
        if j not in state.inputs:
            continue
        identity = roster[j]
        counter = OpCounter()
        out = vdf.evaluate(identity.pp, state.inputs[j].x_input, counter)
        proof = vdf.prove(identity.pp, state.inputs[j].x_input, recoverer.mu, out.y)
        state.recovered[j] = RecoveredEval(y=out.y, proof=proof,
                                           recovered_by=recoverer.index)
        squarings[j] = counter.squarings
    _emit_beacon(state, identities, PATH_PESSIMISTIC)
    return squarings


def choose_recoverer(state: RoundState,
                     identities: list[ParticipantIdentity]) -> ParticipantIdentity:
    """Lowest-indexed non-faulty participant; when every participant is
    faulty, the lowest index forces the round open."""
    for identity in identities:
        if identity.index not in state.faulty:
            return identity
    return identities[0]


def combined_output(state: RoundState) -> int:
    """Integer product of all contributed outputs, ordered by participant
    index; the empty product is 1."""
    product = 1
    for i in state.contributors():
        product *= state.reveals[i].y.value
    for j in sorted(state.recovered):
        product *= state.recovered[j].y.value
    return product


def _emit_beacon(state: RoundState, identities: list[ParticipantIdentity],
                 path: str) -> None:
    suite = identities[0].pp.suite
    state.beacon = suite.h_input_to_rand(combined_output(state))
    state.path = path
    state.phase = "done"


def settle(state: RoundState, identities: list[ParticipantIdentity],
           ledger: dict[int, int], reward_unit: int, penalty_unit: int) -> dict[int, int]:
    """Apply round rewards and penalties; recoverers earn one extra reward
    unit per force-opened evaluation."""
    if state.phase != "done":
        raise ValueError("settlement happens after the round is done")
    for identity in identities:
        i = identity.index
        if i in state.faulty:
            ledger[i] = ledger.get(i, 0) - penalty_unit
        else:
            ledger[i] = ledger.get(i, 0) + reward_unit
    for entry in state.recovered.values():
        ledger[entry.recovered_by] = ledger.get(entry.recovered_by, 0) + reward_unit
    return ledger


# ---------------------------------------------------------------------------
# Public record
# ---------------------------------------------------------------------------

def build_record(state: RoundState) -> dict:
    """Publicly verifiable summary of a finished round."""
    if state.phase != "done":
        raise ValueError("records are built from finished rounds")
    entries = []
    for i in state.contributors():
        reveal = state.reveals[i]
        entries.append({"i": i,
                        "x_round": format(state.inputs[i].x_round.value, "x"),
                        "x_input": format(state.inputs[i].x_input.value, "x"),
                        "y": format(reveal.y.value, "x"),
                        "proof": reveal.proof.to_dict(),
                        "recovered_by": None})
    for j in sorted(state.recovered):
        entry = state.recovered[j]
        entries.append({"i": j,
                        "x_round": format(state.inputs[j].x_round.value, "x"),
                        "x_input": format(state.inputs[j].x_input.value, "x"),
                        "y": format(entry.y.value, "x"),
                        "proof": entry.proof.to_dict(),
                        "recovered_by": entry.recovered_by})
    entries.sort(key=lambda e: e["i"])
    return {"r": state.r, "path": state.path, "R": state.beacon.hex(),
            "contributors": state.contributors(),
            "faulty": sorted(state.faulty), "entries": entries}


def verify_record(identities: list[ParticipantIdentity], record: dict,
                  prev_beacon: bytes) -> str | None:
    """Re-verify one beacon record from public information alone.

    Checks the roster partition, the beacon-to-input derivation of every
    entry, every watermarked proof, and the recomputed beacon value.
    Returns None on acceptance, or the first failure reason.
    """
    roster = {identity.index: identity for identity in identities}
    suite = identities[0].pp.suite
    contributors = set(record["contributors"])
    faulty = set(record["faulty"])
    if contributors & faulty:
        return "contributor and faulty sets overlap"
    if contributors | faulty != set(roster):
        return "roster is not partitioned into contributors and faulty"
    expected_path = PATH_OPTIMISTIC if not faulty else PATH_PESSIMISTIC
    if record["path"] != expected_path:
        return "path tag inconsistent with the faulty set"
    product = 1
    seen: set[int] = set()
    last_index = -1
    for entry in record["entries"]:
        i = entry["i"]
        if i not in roster or i in seen or i <= last_index:
            return f"entry index {i} invalid or out of order"
        seen.add(i)
        last_index = i
        identity = roster[i]
        recovered_by = entry["recovered_by"]
        if recovered_by is None:
            if i not in contributors:
                return f"participant {i} has a direct opening but is marked faulty"
            mu = identity.mu
        else:
            if i not in faulty or recovered_by not in roster:
                return f"recovery entry for participant {i} is inconsistent"
            mu = roster[recovered_by].mu
        try:
            x_round = GroupElement(int(entry["x_round"], 16), identity.pp.modulus)
            x_input = GroupElement(int(entry["x_input"], 16), identity.pp.modulus)
            y = GroupElement(int(entry["y"], 16), identity.pp.modulus)
            proof = vdf.proof_from_dict(entry["proof"])
        except (ValueError, KeyError, TypeError):
            return f"malformed entry for participant {i}"
        if x_round.value != suite.h_rand_to_input(prev_beacon, identity.pp.modulus).value:
            return f"round base value of participant {i} does not derive from the previous beacon"
        if proof.mu != mu:
            return f"proof watermark mismatch for participant {i}"
        if not vdf.verify(identity.pp, x_input, mu, y, proof):
            return f"proof of participant {i} rejected"
        product *= y.value
    if contributors - seen:
        return "a contributor is missing its opening entry"
    if record["R"] != suite.h_input_to_rand(product).hex():
        return "beacon value does not match the recorded openings"
    return None
