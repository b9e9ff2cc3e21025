"""Ed25519 signing behind a small interface, with seeded keys for simulation."""
from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

SIGNATURE_BYTES = 64


class Signer:
    def __init__(self, identity: str, key: Ed25519PrivateKey):
        self.identity = identity
        self._key = key

    @classmethod
    def seeded(cls, identity: str, seed: int) -> Signer:
        raw = hashlib.sha256(f"avss-sim-key/{seed}/{identity}".encode()).digest()
        return cls(identity, Ed25519PrivateKey.from_private_bytes(raw))

    @property
    def public_key(self) -> Ed25519PublicKey:
        return self._key.public_key()

    def sign(self, data: bytes) -> bytes:
        return self._key.sign(data)


class KeyRing:
    """Public keys of every party, by identity string."""

    def __init__(self, keys: dict[str, Ed25519PublicKey] | None = None):
        self._keys = dict(keys or {})

    def add(self, identity: str, key: Ed25519PublicKey) -> None:
        self._keys[identity] = key

    def __contains__(self, identity: str) -> bool:
        return identity in self._keys

    def verify(self, identity: str, data: bytes, sig: bytes) -> bool:
        key = self._keys.get(identity)
        if key is None or len(sig) != SIGNATURE_BYTES:
            return False
        try:
            key.verify(sig, data)
        except InvalidSignature:
            return False
        return True
