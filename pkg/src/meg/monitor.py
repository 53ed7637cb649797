"""Inbound gatekeeper: authentication, integrity, and shape checks.

Every operation that arrives from the network passes through `verify_envelope`
before it may touch replica state.  Checks are stateless, so verification can
run anywhere.  Identifiers are content hashes and envelopes are signed over
the same canonical bytes, so a payload cannot be altered without changing the
id, and an id cannot be claimed without the matching content.  Distinct
accepted vertices are assumed to have distinct ids (hash collision resistance).

The signature scheme is pluggable behind `SigningKey`; the default is a keyed
hash (HMAC-SHA256) stand-in where the verification key equals the signing
secret.  Any deterministic scheme over the canonical encoding works.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .core import MAX_PAYLOAD_BYTES, AddOperation, EventPayload, ReplicaId, Vertex
from .encoding import (
    compute_event_id,
    decode_envelope_bytes,
    encode_envelope_bytes,
    encode_vertex_fields,
)

REPLICA_ID_BYTES = 32


class VerificationFailure(Enum):
    """Why an envelope was rejected.  Each variant maps to exactly one check."""

    BAD_EVENT_ID = "bad_event_id"
    BAD_SIGNATURE = "bad_signature"
    UNKNOWN_SENDER = "unknown_sender"
    DUPLICATE_PARENTS = "duplicate_parents"
    EMPTY_PARENTS = "empty_parents"
    OVERSIZED_PAYLOAD = "oversized_payload"
    SELF_PARENT = "self_parent"


@dataclass(frozen=True)
class SignedEnvelope:
    """An add operation bound to its claimed creator by a signature."""

    op: AddOperation
    sender: ReplicaId
    signature: bytes


class SigningKey:
    """Keyed-hash signer.  The replica id is a fingerprint of the key."""

    def __init__(self, secret: bytes) -> None:
        self._secret = secret
        self.replica_id: ReplicaId = hashlib.sha256(b"meg:fingerprint:" + secret).digest()

    @classmethod
    def from_seed(cls, seed: str) -> "SigningKey":
        return cls(hashlib.sha256(b"meg:key:" + seed.encode("utf-8")).digest())

    @property
    def verification_key(self) -> bytes:
        # Symmetric stand-in: verifiers hold the same secret.
        return self._secret

    def sign(self, data: bytes) -> bytes:
        return hmac.new(self._secret, data, hashlib.sha256).digest()


def _signature_valid(key: bytes, data: bytes, signature: bytes) -> bool:
    return hmac.compare_digest(hmac.new(key, data, hashlib.sha256).digest(), signature)


class MembershipDirectory:
    """Known replicas and their verification keys.  Requires n > f."""

    def __init__(self, keys: Mapping[ReplicaId, bytes], f: int) -> None:
        if f < 0:
            raise ValueError("faulty bound f must be non-negative")
        if len(keys) <= f:
            raise ValueError(f"need n > f, got n={len(keys)} f={f}")
        self._keys = dict(keys)
        self.f = f

    @property
    def n(self) -> int:
        return len(self._keys)

    def __contains__(self, replica_id: ReplicaId) -> bool:
        return replica_id in self._keys

    def verification_key(self, replica_id: ReplicaId) -> bytes | None:
        return self._keys.get(replica_id)

    def replica_ids(self) -> list[ReplicaId]:
        return sorted(self._keys)


def canonical_vertex_bytes(vertex: Vertex) -> bytes:
    return encode_vertex_fields(
        vertex.payload.kind,
        vertex.payload.body,
        vertex.sender,
        vertex.seq,
        vertex.parents,
    )


def sign_envelope(op: AddOperation, key: SigningKey) -> SignedEnvelope:
    """Sign the canonical vertex bytes; the envelope sender is the key's id."""
    return SignedEnvelope(
        op=op,
        sender=key.replica_id,
        signature=key.sign(canonical_vertex_bytes(op.vertex)),
    )


def verify_envelope(
    env: SignedEnvelope,
    directory: MembershipDirectory,
    max_payload: int = MAX_PAYLOAD_BYTES,
) -> VerificationFailure | None:
    """Run all acceptance checks; None means accepted.

    The signature check runs before the id check, so content tampered after
    signing surfaces as BAD_SIGNATURE while a forged id on intact, correctly
    signed content surfaces as BAD_EVENT_ID.  The signature must also bind
    the vertex's declared creator: a mismatch between envelope sender and
    vertex sender fails as BAD_SIGNATURE.

    Re-delivery of an accepted envelope is not an error here; replay safety
    comes from the idempotent effector downstream.
    """
    v = env.op.vertex
    key = directory.verification_key(env.sender)
    if key is None:
        return VerificationFailure.UNKNOWN_SENDER
    if not v.parents:
        return VerificationFailure.EMPTY_PARENTS
    if len(set(v.parents)) != len(v.parents):
        return VerificationFailure.DUPLICATE_PARENTS
    if v.id in v.parents:
        return VerificationFailure.SELF_PARENT
    if len(v.payload.body) > max_payload:
        return VerificationFailure.OVERSIZED_PAYLOAD
    if v.sender != env.sender:
        return VerificationFailure.BAD_SIGNATURE
    data = canonical_vertex_bytes(v)
    if not _signature_valid(key, data, env.signature):
        return VerificationFailure.BAD_SIGNATURE
    if compute_event_id(v.payload.kind, v.payload.body, v.sender, v.seq, v.parents) != v.id:
        return VerificationFailure.BAD_EVENT_ID
    return None


def envelope_to_wire(env: SignedEnvelope) -> bytes:
    return encode_envelope_bytes(
        canonical_vertex_bytes(env.op.vertex), env.sender, env.signature
    )


def envelope_from_wire(data: bytes) -> SignedEnvelope:
    """Reverse of `envelope_to_wire`.  Parent order is normalized to sorted."""
    kind, body, sender, seq, parents, env_sender, signature = decode_envelope_bytes(data)
    vid = compute_event_id(kind, body, sender, seq, parents)
    vertex = Vertex(
        payload=EventPayload(kind=kind, body=body),
        id=vid,
        parents=parents,
        sender=sender,
        seq=seq,
    )
    return SignedEnvelope(op=AddOperation(vertex), sender=env_sender, signature=signature)
