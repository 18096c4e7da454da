"""The gateway facade: sessions, enrollment, quotas, and verification.

This object owns the deployment: one ledger, one certificate authority,
the trust policy, the route table, and the verification service. The
HTTP adapter and the CLI are thin layers over it; the mock controller
talks to it in process through the same methods the HTTP API exposes.

Participants hold their identity cards. Creating an application or a
controller enrolls a login credential and returns the card once; the
participant logs in (JWT), uploads the card back, and only then can
sign transactions. The gateway keeps uploaded cards in memory for the
lifetime of the process, mirroring a wallet service.
"""

from __future__ import annotations

import os
import secrets as secrets_mod
import time
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from ..aaa import Action, VerificationRequest, VerificationService, Verdict, VerifierError
from ..assets import StateReader, install_handlers
from ..identity import (
    CertificateAuthority,
    Identity,
    IdentityError,
    identity_from_wallet,
    verify_certificate,
    wallet_dict,
)
from ..ledger import Ledger, LedgerError, ParticipantType, build_proposal
from ..policy import PolicyError, RouteRegistry, TrustPolicy
from . import auth
from .ratelimit import DEFAULT_LIMIT, DEFAULT_WINDOW_SECONDS, FixedWindowLimiter


class GatewayError(Exception):
    """An HTTP-mappable failure."""

    def __init__(self, status_code: int, detail: str) -> None:
        super().__init__(detail)
        self.status_code = status_code
        self.detail = detail


@dataclass(frozen=True)
class Session:
    """A validated bearer context."""

    participant_id: str
    participant_type: ParticipantType
    has_wallet: bool


def _load_route_config() -> dict:
    import json

    with resources.files("nbgate.config").joinpath("routes.json").open() as fh:
        return json.load(fh)


class GatewayService:
    def __init__(
        self,
        *,
        num_peers: int = 3,
        secret: bytes | None = None,
        admin_password: str = "admin",
        jwt_ttl: int = auth.DEFAULT_TTL_SECONDS,
        quota_limit: int = DEFAULT_LIMIT,
        quota_window: float = DEFAULT_WINDOW_SECONDS,
        quota_clock: Callable[[], float] = time.monotonic,
        verify_delay: float = 0.0,
    ) -> None:
        self.ca = CertificateAuthority("gateway-ca")
        self.ledger = Ledger(num_peers=num_peers)
        install_handlers(self.ledger)
        self.reader = StateReader(self.ledger)
        self.trust_policy = TrustPolicy()
        self.routes = RouteRegistry()
        self.routes.load(_load_route_config()["routes"])
        self.limiter = FixedWindowLimiter(quota_limit, quota_window, quota_clock)
        self.verify_delay = verify_delay
        self._secret = secret if secret is not None else os.urandom(32)
        self._jwt_ttl = jwt_ttl
        self._passwords: dict[str, str] = {}
        self._enrolled: dict[str, Identity] = {}
        self._wallets: dict[str, Identity] = {}

        admin = self._enroll("admin", ParticipantType.ADMIN, admin_password)
        verifier = self._enroll("verifier", ParticipantType.CONTROLLER, None)
        # The server trusts its own credentials without an upload round.
        self._wallets["admin"] = admin
        self.verification = VerificationService(
            self.ledger,
            self.trust_policy,
            verifier,
            jwt_validator=self._jwt_matches,
        )

    # -- enrollment and sessions ---------------------------------------------

    def _enroll(
        self, participant_id: str, participant_type: ParticipantType, password: str | None
    ) -> Identity:
        identity = self._enrolled.get(participant_id)
        if identity is None:
            identity = self.ca.issue_identity(participant_id)
            self.ledger.register_participant(participant_id, participant_type, identity.certificate)
            self._enrolled[participant_id] = identity
        elif self.ledger.directory.type_of(participant_id) != participant_type:
            raise GatewayError(
                409, "participant %r exists with a different type" % participant_id
            )
        if password is not None:
            self._passwords[participant_id] = password
        return identity

    def _jwt_matches(self, token: str, participant_id: str) -> bool:
        try:
            return auth.decode_jwt(token, self._secret)["sub"] == participant_id
        except auth.JwtError:
            return False

    def login(self, participant_id: str, password: str) -> dict:
        known = self._passwords.get(participant_id)
        if known is None or not secrets_mod.compare_digest(known, password):
            raise GatewayError(401, "bad credentials")
        participant_type = self.ledger.directory.type_of(participant_id)
        token = auth.issue_session_token(
            participant_id, participant_type.value, self._secret, ttl=self._jwt_ttl
        )
        return {"access-token": token, "token-type": "bearer", "expires-in": self._jwt_ttl}

    def session(self, bearer: str | None) -> Session:
        """Resolve the Authorization header; 401 on any defect."""
        if not bearer:
            raise GatewayError(401, "Authorization required")
        try:
            claims = auth.decode_jwt(bearer, self._secret)
        except auth.JwtError:
            raise GatewayError(401, "Authorization required") from None
        participant_id = claims["sub"]
        participant_type = self.ledger.directory.type_of(participant_id)
        if participant_type is None:
            raise GatewayError(401, "Authorization required")
        return Session(
            participant_id=participant_id,
            participant_type=participant_type,
            has_wallet=participant_id in self._wallets,
        )

    def upload_wallet(self, session: Session, wallet: dict) -> dict:
        """Bind an uploaded identity card to its participant."""
        try:
            identity = identity_from_wallet(wallet)
        except IdentityError as exc:
            raise GatewayError(400, str(exc)) from exc
        if not verify_certificate(self.ca.public_key, identity.certificate):
            raise GatewayError(403, "identity card was not issued by this deployment")
        if identity.id != session.participant_id:
            raise GatewayError(403, "identity card belongs to a different participant")
        self._wallets[session.participant_id] = identity
        return {"participant-id": session.participant_id, "bound": True}

    def ping(self, session: Session, bearer: str) -> dict:
        """Session probe: who am I, if fully authenticated."""
        verdict = self.verification.authenticate(
            session.participant_id, bearer, session.has_wallet
        )
        if not verdict.accepted:
            raise GatewayError(401, verdict.message)
        application = self.reader.application(session.participant_id)
        return {
            "action": verdict.action.value,
            "message": verdict.message,
            "application": application,
        }

    # -- signed submission helpers --------------------------------------------

    def _signer(self, session: Session) -> Identity:
        identity = self._wallets.get(session.participant_id)
        if identity is None:
            raise GatewayError(403, "identity card required")
        return identity

    def _commit(self, identity: Identity, tx_type: str, payload: dict) -> dict | None:
        result = self.ledger.process(build_proposal(identity, tx_type, payload))
        if not result.committed:
            status = 403 if result.message.startswith("DENY") else 409
            raise GatewayError(status, result.message)
        return result.response

    def _require(self, session: Session, *types: ParticipantType) -> None:
        if session.participant_type not in types:
            raise GatewayError(403, "forbidden for %s" % session.participant_type.value)

    # -- application-facing operations ----------------------------------------

    def request_token(self, session: Session, controller_id: str) -> dict:
        self._require(session, ParticipantType.APPLICATION)
        signer = self._signer(session)
        return self._commit(
            signer,
            "requestAppToken",
            {"app-id": session.participant_id, "controller-id": controller_id},
        )

    # -- controller-facing verification ----------------------------------------

    def verify_for_controller(self, session: Session, body: dict) -> Verdict:
        self._require(session, ParticipantType.CONTROLLER)
        try:
            request = VerificationRequest(
                url=str(body["url"]),
                data=str(body.get("data", "")),
                token_id=str(body.get("tokenId", "")),
                http_method=str(body["httpMethod"]).upper(),
                permission_id=str(body.get("permissionId", "")),
                submitting_controller=session.participant_id,
            )
        except KeyError as exc:
            raise GatewayError(400, "missing field %s" % exc) from exc
        if self.verify_delay > 0:
            time.sleep(self.verify_delay)
        token = self.reader.token(request.token_id) if request.token_id else None
        if token is not None and not self.limiter.allow(token["application_id"]):
            verdict = self.verification.quota_verdict(token["application_id"])
            self.verification.account(request, verdict)
            return verdict
        status_verdict = self.verification.token_status_verdict(request.token_id)
        if status_verdict is not None:
            self.verification.account(request, status_verdict)
            return status_verdict
        verdict = self.verification.authorize(request)
        self.verification.account(request, verdict)
        return verdict

    # -- admin operations -------------------------------------------------------

    def create_application(self, session: Session, body: dict) -> dict:
        self._require(session, ParticipantType.ADMIN)
        signer = self._signer(session)
        password = body.pop("password", None) or secrets_mod.token_urlsafe(12)
        application = self._commit(signer, "addApplication", body)
        identity = self._enroll(application["id"], ParticipantType.APPLICATION, password)
        return {
            "application": application,
            "wallet": wallet_dict(identity),
            "password": password,
        }

    def create_controller(self, session: Session, body: dict) -> dict:
        self._require(session, ParticipantType.ADMIN)
        signer = self._signer(session)
        password = body.pop("password", None) or secrets_mod.token_urlsafe(12)
        controller = self._commit(signer, "addController", body)
        identity = self._enroll(controller["id"], ParticipantType.CONTROLLER, password)
        return {
            "controller": controller,
            "wallet": wallet_dict(identity),
            "password": password,
        }

    def admin_commit(self, session: Session, tx_type: str, payload: dict) -> dict | None:
        """Generic admin transaction: update/remove assets, roles, permissions."""
        self._require(session, ParticipantType.ADMIN)
        return self._commit(self._signer(session), tx_type, payload)

    def set_trust(self, session: Session, app_id: str, value) -> dict:
        self._require(session, ParticipantType.ADMIN)
        signer = self._signer(session)
        try:
            new_value = self.verification.recover_trust(signer, app_id, value)
        except VerifierError as exc:
            raise GatewayError(409, str(exc)) from exc
        return {"app-id": app_id, "trust-index": new_value}

    def issue_token(self, session: Session, token_id: str) -> dict:
        self._require(session, ParticipantType.ADMIN)
        return self._commit(self._signer(session), "issueToken", {"token-id": token_id})

    def expire_token(self, session: Session, token_id: str) -> dict:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return self._commit(self._signer(session), "expireToken", {"token-id": token_id})

    def register_route(self, session: Session, body: dict) -> dict:
        self._require(session, ParticipantType.ADMIN)
        try:
            self.routes.register(body["method"], body["pattern"], body["permission"])
        except KeyError as exc:
            raise GatewayError(400, "missing field %s" % exc) from exc
        except PolicyError as exc:
            raise GatewayError(409, str(exc)) from exc
        return dict(body)

    def set_threshold(self, session: Session, resource_object: str, value: int) -> dict:
        self._require(session, ParticipantType.ADMIN)
        try:
            self.trust_policy.set_threshold(resource_object, value)
        except PolicyError as exc:
            raise GatewayError(400, str(exc)) from exc
        return {"resource-object": resource_object, "threshold": value}

    # -- read-only queries --------------------------------------------------------

    def application_detail(self, session: Session, app_id: str) -> dict:
        self._require(session, ParticipantType.ADMIN)
        application = self.reader.application(app_id)
        if application is None:
            raise GatewayError(404, "no such application")
        states = self.verification.permission_states(app_id)
        application["permission-states"] = states
        application["suspended"] = any(not s["active"] for s in states)
        return application

    def list_applications(self, session: Session) -> list[dict]:
        self._require(session, ParticipantType.ADMIN)
        apps = self.reader.applications()
        for app in apps:
            states = self.verification.permission_states(app["id"])
            app["permission-states"] = states
            app["suspended"] = any(not s["active"] for s in states)
        return apps

    def list_tokens(self, session: Session, status: str | None = None) -> list[dict]:
        self._require(session, ParticipantType.ADMIN)
        return self.reader.tokens(status)

    def list_controllers(self, session: Session) -> list[dict]:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return self.reader.controllers()

    def list_permissions(self, session: Session) -> list[dict]:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return self.reader.permissions()

    def list_roles(self, session: Session) -> list[dict]:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return self.reader.roles()

    def list_logs(self, session: Session, offset: int = 0, limit: int | None = None) -> dict:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return {
            "total": self.reader.log_count(),
            "entries": self.reader.logs(offset=offset, limit=limit),
        }

    def list_blocks(self, session: Session, start: int = 0, limit: int | None = None) -> dict:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        blocks = self.ledger.blocks[start : None if limit is None else start + limit]
        listed = []
        for block in blocks:
            entry = block.to_dict()
            # Own hash alongside prev_hash lets a client check the links.
            entry["hash"] = block.block_hash().hex()
            listed.append(entry)
        return {
            "height": self.ledger.height,
            "verified": self.ledger.verify_chain(),
            "blocks": listed,
        }

    def list_routes(self, session: Session) -> list[dict]:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return [
            {"method": r.method, "pattern": r.pattern, "permission": r.permission_id}
            for r in self.routes.routes()
        ]

    def thresholds(self, session: Session) -> dict:
        self._require(session, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
        return self.trust_policy.snapshot()
