"""Minimal HS256 JSON Web Tokens for gateway sessions.

Sessions need nothing beyond HMAC-SHA-256 under a server-local secret;
the asymmetric identity already lives in the wallet certificates.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import time

DEFAULT_TTL_SECONDS = 3600  # one hour

_HEADER = {"alg": "HS256", "typ": "JWT"}


class JwtError(Exception):
    """The token is malformed, forged, or expired."""


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode()


def _unb64url(part: str) -> bytes:
    padded = part + "=" * (-len(part) % 4)
    return base64.urlsafe_b64decode(padded)


def _json_bytes(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _sign(signing_input: bytes, secret: bytes) -> bytes:
    return hmac.new(secret, signing_input, hashlib.sha256).digest()


def encode_jwt(claims: dict, secret: bytes) -> str:
    head = _b64url(_json_bytes(_HEADER))
    body = _b64url(_json_bytes(claims))
    signing_input = ("%s.%s" % (head, body)).encode()
    return "%s.%s.%s" % (head, body, _b64url(_sign(signing_input, secret)))


def decode_jwt(token: str, secret: bytes, now: float | None = None) -> dict:
    """Verify signature and expiry; returns the claims."""
    parts = token.split(".")
    if len(parts) != 3:
        raise JwtError("token must have three segments")
    head, body, signature = parts
    signing_input = ("%s.%s" % (head, body)).encode()
    try:
        expected = _sign(signing_input, secret)
        if not hmac.compare_digest(expected, _unb64url(signature)):
            raise JwtError("signature mismatch")
        header = json.loads(_unb64url(head))
        claims = json.loads(_unb64url(body))
    except (ValueError, TypeError) as exc:
        raise JwtError("undecodable token: %s" % exc) from exc
    if header.get("alg") != "HS256":
        raise JwtError("unsupported algorithm")
    if not isinstance(claims, dict) or "exp" not in claims or "sub" not in claims:
        raise JwtError("missing claims")
    current = time.time() if now is None else now
    if current >= claims["exp"]:
        raise JwtError("token expired")
    return claims


def issue_session_token(
    participant_id: str,
    participant_type: str,
    secret: bytes,
    ttl: int = DEFAULT_TTL_SECONDS,
    now: float | None = None,
) -> str:
    issued_at = int(time.time() if now is None else now)
    claims = {
        "sub": participant_id,
        "type": participant_type,
        "iat": issued_at,
        "exp": issued_at + ttl,
    }
    return encode_jwt(claims, secret)
