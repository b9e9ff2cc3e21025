"""Protocol messages and their canonical encoding.

Every message is a frozen dataclass. ``encode`` gives a deterministic byte
string used both for signatures and for digests; ``Envelope.wire`` prepends
a version byte and appends the sender's signature.
"""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Any

from ..savss import CommitmentVec, DealerFaultEvidence, RecoveryShare, ShareVec
from ..vss import VssShare
from .signing import KeyRing, Signer

WIRE_VERSION = 1


def _blob(b: bytes) -> bytes:
    return len(b).to_bytes(4, "big") + b


def encode(obj: Any) -> bytes:
    if obj is None:
        return b"N"
    if obj is True or obj is False:
        return b"T" if obj else b"F"
    if isinstance(obj, int):
        return b"I" + _blob(obj.to_bytes((obj.bit_length() + 8) // 8 or 1, "big", signed=True))
    if isinstance(obj, bytes):
        return b"B" + _blob(obj)
    if isinstance(obj, str):
        return b"S" + _blob(obj.encode())
    if isinstance(obj, (tuple, list)):
        return b"L" + len(obj).to_bytes(4, "big") + b"".join(encode(x) for x in obj)
    if isinstance(obj, Message):
        return obj.encoded
    if hasattr(obj, "to_bytes"):
        return b"X" + _blob(obj.to_bytes())
    if dataclasses.is_dataclass(obj):
        return b"D" + encode(type(obj).__name__) + encode(tuple(getattr(obj, f.name) for f in dataclasses.fields(obj)))
    raise TypeError(f"cannot encode {type(obj).__name__}")


class Message:
    TAG = 0

    @cached_property
    def encoded(self) -> bytes:
        fields = tuple(getattr(self, f.name) for f in dataclasses.fields(self))
        return bytes([self.TAG]) + encode(fields)

    @cached_property
    def digest(self) -> bytes:
        return hashlib.sha256(self.encoded).digest()


@dataclass(frozen=True)
class Envelope:
    sender: str
    body: Any
    sig: bytes

    def to_bytes(self) -> bytes:
        return self.wire()

    def wire(self) -> bytes:
        return bytes([WIRE_VERSION]) + encode(self.sender) + self.body.encoded + self.sig

    @property
    def size(self) -> int:
        return len(self.wire())


def seal(signer: Signer, body: Message) -> Envelope:
    return Envelope(signer.identity, body, signer.sign(encode(signer.identity) + body.encoded))


def check(keys: KeyRing, env: Envelope) -> bool:
    return isinstance(env, Envelope) and isinstance(env.body, Message) and keys.verify(
        env.sender, encode(env.sender) + env.body.encoded, env.sig
    )


def replica_name(i: int) -> str:
    return f"r{i}"


NULL_DIGEST = hashlib.sha256(b"avss/null-request").digest()


def request_digest(env: Envelope | None) -> bytes:
    """Digest of a signed client request; null requests share one digest."""
    if env is None:
        return NULL_DIGEST
    return hashlib.sha256(env.wire()).digest()


def sharing_digest(client: str, cvec: CommitmentVec) -> bytes:
    return hashlib.sha256(encode(client) + cvec.to_bytes()).digest()


# ------------------------------------------------------------------ client traffic


@dataclass(frozen=True)
class Request(Message):
    """Public part of a client operation.

    ``op`` is put, get or acl. A put carries the CommitmentVec (whose nonce is
    the sharing nonce r) or, with sharing disabled, the plain value.
    """

    TAG = 0x10
    op: str
    key: str
    client: str
    rseq: int
    cvec: CommitmentVec | None = None
    value: int | None = None
    readers: tuple[str, ...] = ()


@dataclass(frozen=True)
class PutShare(Message):
    TAG = 0x11
    client: str
    rseq: int
    key: str
    cvec: CommitmentVec
    share: ShareVec


@dataclass(frozen=True)
class Reply(Message):
    """Result of an executed request.

    kind: ack, denied, none, value (share + commitments), plain, exposed.
    """

    TAG = 0x12
    view: int
    client: str
    rseq: int
    replica: int
    kind: str
    dealer: str = ""
    cvec: CommitmentVec | None = None
    share: ShareVec | None = None
    value: int | None = None


# ------------------------------------------------------------------ ordering


@dataclass(frozen=True)
class PrePrepare(Message):
    TAG = 0x20
    view: int
    seq: int
    request: Envelope | None


@dataclass(frozen=True)
class Prepare(Message):
    TAG = 0x21
    view: int
    seq: int
    rdigest: bytes
    replica: int


@dataclass(frozen=True)
class Commit(Message):
    """Carries the request body so a replica that missed the pre-prepare can
    still execute once 2f+1 commits agree."""

    TAG = 0x22
    view: int
    seq: int
    rdigest: bytes
    replica: int
    request: Envelope | None


@dataclass(frozen=True)
class Checkpoint(Message):
    TAG = 0x23
    seq: int
    sdigest: bytes
    replica: int


@dataclass(frozen=True)
class PreparedCert:
    """2f+1 signed prepares for one (view, seq, request)."""

    view: int
    seq: int
    request: Envelope | None
    prepares: tuple[Envelope, ...]


@dataclass(frozen=True)
class ViewChange(Message):
    TAG = 0x30
    view: int
    replica: int
    stable_seq: int
    stable_digest: bytes
    stable_proof: tuple[Envelope, ...]
    prepared: tuple[PreparedCert, ...]


@dataclass(frozen=True)
class NewView(Message):
    TAG = 0x31
    view: int
    replica: int
    proofs: tuple[Envelope, ...]
    log: tuple[tuple[int, Envelope | None], ...]


# ------------------------------------------------------------------ recovery and transfer


@dataclass(frozen=True)
class RecoveryRequest(Message):
    TAG = 0x40
    replica: int
    dealer: str
    sharing: bytes


@dataclass(frozen=True)
class RecoveryResponse(Message):
    TAG = 0x41
    replica: int
    target: int
    dealer: str
    sharing: bytes
    share: RecoveryShare


@dataclass(frozen=True)
class FaultNotice(Message):
    TAG = 0x42
    replica: int
    dealer: str
    sharing: bytes
    evidence: DealerFaultEvidence


@dataclass(frozen=True)
class Expose(Message):
    TAG = 0x43
    replica: int
    dealer: str
    sharing: bytes
    share: VssShare


@dataclass(frozen=True)
class CommittedEntry:
    seq: int
    request: Envelope | None
    commits: tuple[Envelope, ...]


@dataclass(frozen=True)
class StateRequest(Message):
    TAG = 0x50
    replica: int
    from_seq: int


@dataclass(frozen=True)
class StateResponse(Message):
    TAG = 0x51
    replica: int
    ckpt_seq: int
    ckpt_digest: bytes
    proof: tuple[Envelope, ...]
    delta: tuple[tuple[str, Any], ...]
    committed: tuple[CommittedEntry, ...]
