"""Public store entries and the checkpoint digest over them."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from ..savss import CommitmentVec
from .messages import encode

ACL_PREFIX = "__acl__/"
CLIENT_PREFIX = "__client__/"
RESERVED_PREFIX = "__"


@dataclass(frozen=True)
class PublicEntry:
    """Public half of a stored value: commitments and nonce, never shares.

    With sharing disabled ``value`` holds the plain value instead.
    """

    owner: str
    writer: str
    rseq: int
    mod_seq: int
    cvec: CommitmentVec | None = None
    value: int | None = None


@dataclass(frozen=True)
class AclEntry:
    readers: tuple[str, ...]
    mod_seq: int


@dataclass(frozen=True)
class ClientEntry:
    """Highest executed request sequence of a client, for deduplication."""

    last_rseq: int
    mod_seq: int


def acl_key(key: str) -> str:
    return ACL_PREFIX + key


def client_key(client: str) -> str:
    return CLIENT_PREFIX + client


def store_digest(public: dict[str, PublicEntry | AclEntry]) -> bytes:
    h = hashlib.sha256(b"avss/store")
    for key in sorted(public):
        h.update(encode((key, public[key])))
    return h.digest()


GENESIS_DIGEST = store_digest({})
