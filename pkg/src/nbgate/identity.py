"""Key material, certificates, and signatures for ledger participants.

Every participant (admin, application, controller, peer) holds a P-256 key
pair and a certificate issued by the deployment's certificate authority.
Signatures are deterministic ECDSA (RFC 6979 nonces) over SHA-256, so any
two signers with the same key and message produce identical signatures and
endorsement comparisons stay bytewise stable.

Certificates use a fixed-order, length-prefixed binary encoding rather than
ASN.1: this registry is a closed system and the encoding must be canonical,
not interoperable.
"""

from __future__ import annotations

import base64
import json
import struct
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)

_CURVE = ec.SECP256R1()

# Group order of P-256; signature components must fall in [1, n-1].
CURVE_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

_COORD_BYTES = 32


class IdentityError(Exception):
    """Malformed certificate, wallet, or key material."""


@dataclass(frozen=True)
class Signature:
    """An ECDSA signature as its raw (r, s) pair."""

    r: int
    s: int

    def to_bytes(self) -> bytes:
        return self.r.to_bytes(_COORD_BYTES, "big") + self.s.to_bytes(_COORD_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != 2 * _COORD_BYTES:
            raise IdentityError("signature must be %d bytes" % (2 * _COORD_BYTES))
        return cls(
            r=int.from_bytes(data[:_COORD_BYTES], "big"),
            s=int.from_bytes(data[_COORD_BYTES:], "big"),
        )

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_hex(cls, text: str) -> "Signature":
        try:
            return cls.from_bytes(bytes.fromhex(text))
        except ValueError as exc:
            raise IdentityError("signature is not valid hex") from exc


@dataclass(frozen=True)
class KeyPair:
    """A P-256 private scalar and its public point."""

    private_key: int
    public_key: tuple[int, int]


@dataclass(frozen=True)
class Certificate:
    """Binds a participant id to a public key, signed by the CA."""

    subject_id: str
    public_key: tuple[int, int]
    issuer: str
    issued_at: str  # UTC ISO 8601
    ca_signature: Signature

    def tbs_bytes(self) -> bytes:
        """The to-be-signed portion: every field except the CA signature."""
        return _encode_tbs(self.subject_id, self.public_key, self.issuer, self.issued_at)

    def encode(self) -> bytes:
        return self.tbs_bytes() + self.ca_signature.to_bytes()


@dataclass(frozen=True)
class Identity:
    """A participant's wallet contents: certificate plus private key."""

    certificate: Certificate
    private_key: int
    msp_id: str

    @property
    def id(self) -> str:
        return self.certificate.subject_id

    def sign(self, message: bytes) -> Signature:
        return sign(self.private_key, message)


# ---------------------------------------------------------------------------
# Key generation and raw signatures
# ---------------------------------------------------------------------------


def generate_keypair() -> KeyPair:
    key = ec.generate_private_key(_CURVE)
    numbers = key.private_numbers()
    pub = numbers.public_numbers
    return KeyPair(private_key=numbers.private_value, public_key=(pub.x, pub.y))


def sign(private_key: int, message: bytes) -> Signature:
    """Deterministic ECDSA over SHA-256: same key and message, same signature."""
    key = ec.derive_private_key(private_key, _CURVE)
    der = key.sign(message, ec.ECDSA(hashes.SHA256(), deterministic_signing=True))
    r, s = decode_dss_signature(der)
    return Signature(r=r, s=s)


def verify(public_key: tuple[int, int], message: bytes, signature: Signature) -> bool:
    """True iff the signature is well formed and valid for the message."""
    if not (0 < signature.r < CURVE_ORDER and 0 < signature.s < CURVE_ORDER):
        return False
    try:
        point = ec.EllipticCurvePublicNumbers(public_key[0], public_key[1], _CURVE)
        key = point.public_key()
        key.verify(
            encode_dss_signature(signature.r, signature.s),
            message,
            ec.ECDSA(hashes.SHA256()),
        )
        return True
    except (InvalidSignature, ValueError):
        return False


# ---------------------------------------------------------------------------
# Certificate encoding
# ---------------------------------------------------------------------------


def _encode_field(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def _encode_point(point: tuple[int, int]) -> bytes:
    # SEC1 uncompressed form; fixed width keeps the encoding canonical.
    return b"\x04" + point[0].to_bytes(_COORD_BYTES, "big") + point[1].to_bytes(_COORD_BYTES, "big")


def _decode_point(data: bytes) -> tuple[int, int]:
    if len(data) != 1 + 2 * _COORD_BYTES or data[0] != 0x04:
        raise IdentityError("malformed public key point")
    return (
        int.from_bytes(data[1 : 1 + _COORD_BYTES], "big"),
        int.from_bytes(data[1 + _COORD_BYTES :], "big"),
    )


def _encode_tbs(subject_id: str, public_key: tuple[int, int], issuer: str, issued_at: str) -> bytes:
    return b"".join(
        _encode_field(part)
        for part in (
            subject_id.encode(),
            _encode_point(public_key),
            issuer.encode(),
            issued_at.encode(),
        )
    )


def _read_field(data: bytes, offset: int) -> tuple[bytes, int]:
    if offset + 4 > len(data):
        raise IdentityError("truncated certificate")
    (length,) = struct.unpack_from(">I", data, offset)
    offset += 4
    if offset + length > len(data):
        raise IdentityError("truncated certificate")
    return data[offset : offset + length], offset + length


def decode_certificate(data: bytes) -> Certificate:
    offset = 0
    subject, offset = _read_field(data, offset)
    point, offset = _read_field(data, offset)
    issuer, offset = _read_field(data, offset)
    issued_at, offset = _read_field(data, offset)
    if len(data) - offset != 2 * _COORD_BYTES:
        raise IdentityError("malformed certificate signature")
    try:
        return Certificate(
            subject_id=subject.decode(),
            public_key=_decode_point(point),
            issuer=issuer.decode(),
            issued_at=issued_at.decode(),
            ca_signature=Signature.from_bytes(data[offset:]),
        )
    except UnicodeDecodeError as exc:
        raise IdentityError("malformed certificate text field") from exc


# ---------------------------------------------------------------------------
# Certificate authority
# ---------------------------------------------------------------------------

_issue_lock = threading.Lock()
_last_issued_at = ""


def _unique_utc_now() -> str:
    """Monotonically unique issuance timestamp, so re-issued certs differ."""
    global _last_issued_at
    with _issue_lock:
        stamp = datetime.now(timezone.utc).isoformat()
        if stamp <= _last_issued_at:
            base = datetime.fromisoformat(_last_issued_at)
            stamp = base.replace(microsecond=base.microsecond + 1).isoformat()
        _last_issued_at = stamp
    return stamp


class CertificateAuthority:
    """Issues participant certificates for one deployment."""

    def __init__(self, ca_id: str = "ca") -> None:
        self.ca_id = ca_id
        self._keys = generate_keypair()
        self.certificate = self._issue(ca_id, self._keys.public_key)

    @property
    def public_key(self) -> tuple[int, int]:
        return self._keys.public_key

    def _issue(self, subject_id: str, public_key: tuple[int, int]) -> Certificate:
        issued_at = _unique_utc_now()
        tbs = _encode_tbs(subject_id, public_key, self.ca_id, issued_at)
        return Certificate(
            subject_id=subject_id,
            public_key=public_key,
            issuer=self.ca_id,
            issued_at=issued_at,
            ca_signature=sign(self._keys.private_key, tbs),
        )

    def issue_identity(self, subject_id: str, msp_id: str = "org1") -> Identity:
        """Generate a fresh key pair and certify it for the subject."""
        keys = generate_keypair()
        return Identity(
            certificate=self._issue(subject_id, keys.public_key),
            private_key=keys.private_key,
            msp_id=msp_id,
        )


def verify_certificate(ca_public_key: tuple[int, int], certificate: Certificate) -> bool:
    return verify(ca_public_key, certificate.tbs_bytes(), certificate.ca_signature)


def certificate_is_authentic(ca_public_key: tuple[int, int], encoded: bytes) -> bool:
    """Decode and verify an encoded certificate; False on any defect."""
    try:
        certificate = decode_certificate(encoded)
    except IdentityError:
        return False
    return verify_certificate(ca_public_key, certificate)


# ---------------------------------------------------------------------------
# Wallet files
# ---------------------------------------------------------------------------


def wallet_dict(identity: Identity) -> dict:
    """The identity card as a JSON-safe mapping."""
    return {
        "certificate": base64.b64encode(identity.certificate.encode()).decode(),
        "private_key_hex": format(identity.private_key, "x"),
        "msp_id": identity.msp_id,
    }


def identity_from_wallet(payload: dict) -> Identity:
    try:
        certificate = decode_certificate(base64.b64decode(payload["certificate"]))
        private_key = int(payload["private_key_hex"], 16)
        msp_id = payload["msp_id"]
    except (KeyError, TypeError, ValueError) as exc:
        raise IdentityError("malformed wallet: %s" % exc) from exc
    return Identity(certificate=certificate, private_key=private_key, msp_id=msp_id)


def save_wallet(identity: Identity, path: str | Path) -> None:
    """Write the identity card as a JSON wallet file."""
    Path(path).write_text(json.dumps(wallet_dict(identity), indent=2) + "\n")


def load_wallet(path: str | Path) -> Identity:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IdentityError("malformed wallet file: %s" % exc) from exc
    return identity_from_wallet(payload)
