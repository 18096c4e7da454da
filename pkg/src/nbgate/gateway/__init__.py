"""HTTP-facing gateway: sessions, quotas, and the verification endpoints."""

from .auth import JwtError, decode_jwt, encode_jwt, issue_session_token
from .ratelimit import FixedWindowLimiter
from .service import GatewayError, GatewayService

__all__ = [
    "FixedWindowLimiter",
    "GatewayError",
    "GatewayService",
    "JwtError",
    "decode_jwt",
    "encode_jwt",
    "issue_session_token",
]
