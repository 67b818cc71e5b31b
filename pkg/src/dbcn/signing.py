"""Pluggable signature schemes for secure catalogs.

Only scheme 0x01 (Ed25519: 32-byte keys, 64-byte deterministic signatures)
is registered by default. Additional schemes register a :class:`Scheme`
instance in :data:`SCHEMES`.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import UnsupportedSchemeError
from .naming import Digest


class Scheme:
    scheme_id: int
    name: str
    public_key_size: int
    signature_size: int

    def public_from_private(self, private: bytes) -> bytes:
        raise NotImplementedError

    def sign(self, private: bytes, message: bytes) -> bytes:
        raise NotImplementedError

    def verify(self, public: bytes, signature: bytes, message: bytes) -> bool:
        raise NotImplementedError


class Ed25519Scheme(Scheme):
    scheme_id = 0x01
    name = "ed25519"
    public_key_size = 32
    signature_size = 64

    def public_from_private(self, private: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(private).public_key().public_bytes_raw()

    def sign(self, private: bytes, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(private).sign(message)

    def verify(self, public: bytes, signature: bytes, message: bytes) -> bool:
        try:
            Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


SCHEMES: dict[int, Scheme] = {Ed25519Scheme.scheme_id: Ed25519Scheme()}
DEFAULT_SCHEME = Ed25519Scheme.scheme_id


def get_scheme(scheme_id: int) -> Scheme:
    try:
        return SCHEMES[scheme_id]
    except KeyError:
        raise UnsupportedSchemeError(f"unknown signature scheme 0x{scheme_id:02x}") from None


@dataclass(frozen=True)
class PublicKey:
    scheme_id: int
    key: bytes

    @property
    def digest(self) -> Digest:
        return Digest.of(self.key)

    def to_json(self) -> dict:
        return {"scheme": get_scheme(self.scheme_id).name, "public": self.key.hex()}


@dataclass(frozen=True)
class KeyPair:
    scheme_id: int
    private: bytes
    public: bytes

    @classmethod
    def generate(cls, seed: bytes | None = None, scheme_id: int = DEFAULT_SCHEME) -> "KeyPair":
        """Fresh key, or a deterministic one derived from ``seed``."""
        scheme = get_scheme(scheme_id)
        private = hashlib.sha256(seed).digest() if seed is not None else os.urandom(32)
        return cls(scheme_id, private, scheme.public_from_private(private))

    @property
    def public_key(self) -> PublicKey:
        return PublicKey(self.scheme_id, self.public)

    def sign(self, message: bytes) -> bytes:
        return get_scheme(self.scheme_id).sign(self.private, message)

    def save(self, path: str | Path) -> None:
        data = {
            "scheme": get_scheme(self.scheme_id).name,
            "private": self.private.hex(),
            "public": self.public.hex(),
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "KeyPair":
        data = json.loads(Path(path).read_text())
        scheme = _scheme_by_name(data["scheme"])
        private = bytes.fromhex(data["private"])
        public = scheme.public_from_private(private)
        if "public" in data and bytes.fromhex(data["public"]) != public:
            raise ValueError(f"{path}: public key does not match private key")
        return cls(scheme.scheme_id, private, public)


def _scheme_by_name(name: str) -> Scheme:
    for scheme in SCHEMES.values():
        if scheme.name == name:
            return scheme
    raise UnsupportedSchemeError(f"unknown signature scheme {name!r}")


def load_trusted_keys(path: str | Path) -> list[PublicKey]:
    """Read public keys from a keypair file or a JSON list of public entries."""
    data = json.loads(Path(path).read_text())
    entries = data if isinstance(data, list) else data.get("keys", [data])
    keys = []
    for entry in entries:
        scheme = _scheme_by_name(entry["scheme"])
        keys.append(PublicKey(scheme.scheme_id, bytes.fromhex(entry["public"])))
    return keys
