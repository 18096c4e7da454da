"""The verification core: authentication, authorization, and accounting.

Authentication checks an application's session artifacts in order: a valid
gateway JWT, an uploaded identity card, and an ISSUED app-controller token.
Authorization judges a controller-submitted verification request against
five criteria, all of which must hold:

  1. the submitting controller is registered,
  2. it is the controller the token was bound to,
  3. the token is ISSUED and its application still exists,
  4. the requested permission belongs to the application's role,
  5. the application's trust index reaches the threshold of the
     permission's resource object.

Any failure yields DENY, and when the request's token identifies an
existing application the failure costs it one trust point. Token-status
failures are normally caught by the authentication stage before
authorization runs, so in the layered flow an expired token is denied
without a penalty.

Every verdict, accepted or denied, is accounted as one committed log-entry
transaction signed by the service's own controller-class credential.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Callable

from .assets import StateReader, TokenStatus
from .identity import Identity
from .ledger import Ledger, build_proposal
from .policy import TrustPolicy

# One penalty may race an admin trust update and lose MVCC validation; it
# is then recomputed against the fresh value.
_PENALTY_RETRIES = 3


class VerifierError(Exception):
    """A bookkeeping transaction failed to commit."""


class Action(str, enum.Enum):
    ACCEPT = "ACCEPT"
    DENY = "DENY"


@dataclass(frozen=True)
class VerificationRequest:
    """A controller's question: may this call proceed?"""

    url: str
    data: str
    token_id: str
    http_method: str
    permission_id: str
    submitting_controller: str


@dataclass(frozen=True)
class Verdict:
    action: Action
    message: str
    trust_after: int | None = None
    application_id: str = ""

    @property
    def accepted(self) -> bool:
        return self.action is Action.ACCEPT


# Response messages, verbatim where the interface tables fix them.
MSG_AUTH_REQUIRED = "Authorization required"
MSG_APP_INFO = "Return app information"
MSG_TOKEN_REQUIRED = "Token required"
MSG_TOKEN_NOT_ISSUED = "Token not issued"
MSG_TOKEN_EXPIRED = "Token expired"
MSG_UNKNOWN_CONTROLLER = "Unknown controller"
MSG_CONTROLLER_MISMATCH = "Controller mismatch"
MSG_UNKNOWN_APPLICATION = "Unknown application"
MSG_UNAUTHORIZED = "Unauthorized"
MSG_UNTRUSTED = "Untrusted application"
MSG_ACCEPTED = "Accepted"
MSG_QUOTA = "Quota exceeded"


class VerificationService:
    """AAA decisions backed by the ledger's world state.

    The service holds its own controller-class credential for committing
    penalties and log entries. JWT validation is injected by the gateway;
    library users that only authorize may omit it.
    """

    def __init__(
        self,
        ledger: Ledger,
        trust_policy: TrustPolicy,
        verifier_identity: Identity,
        jwt_validator: Callable[[str, str], bool] | None = None,
    ) -> None:
        self._ledger = ledger
        self._reader = StateReader(ledger)
        self._policy = trust_policy
        self._verifier = verifier_identity
        self._jwt_validator = jwt_validator
        # Serializes bookkeeping commits so per-controller log timestamps
        # are monotone in commit order.
        self._commit_lock = threading.Lock()

    # -- authentication ------------------------------------------------------

    def authenticate(self, participant_id: str, jwt: str, has_wallet: bool) -> Verdict:
        """Session check: a valid access token AND an uploaded identity card.

        Tokens are no business of this stage; they guard the application
        to controller path and are judged by token_status_verdict.
        """
        if self._jwt_validator is None:
            raise RuntimeError("no JWT validator configured")
        if not jwt or not self._jwt_validator(jwt, participant_id):
            return Verdict(Action.DENY, MSG_AUTH_REQUIRED)
        if not has_wallet:
            return Verdict(Action.DENY, MSG_AUTH_REQUIRED)
        return Verdict(Action.ACCEPT, MSG_APP_INFO, application_id=participant_id)

    def token_status_verdict(self, token_id: str) -> Verdict | None:
        """The authentication-stage judgement of a bare token: None when the
        token is ISSUED, otherwise the DENY verdict (no penalty)."""
        if not token_id:
            return Verdict(Action.DENY, MSG_TOKEN_REQUIRED)
        token = self._reader.token(token_id)
        if token is None:
            return Verdict(Action.DENY, MSG_TOKEN_REQUIRED)
        app_id = token["application_id"]
        app = self._reader.application(app_id)
        trust = app["trust_index"] if app else None
        if token["status"] == TokenStatus.NEW.value:
            return Verdict(Action.DENY, MSG_TOKEN_NOT_ISSUED, trust, app_id)
        if token["status"] == TokenStatus.EXPIRED.value:
            return Verdict(Action.DENY, MSG_TOKEN_EXPIRED, trust, app_id)
        return None

    # -- authorization -------------------------------------------------------

    def authorize(self, request: VerificationRequest) -> Verdict:
        token = self._reader.token(request.token_id) if request.token_id else None
        app = self._reader.application(token["application_id"]) if token else None
        app_id = token["application_id"] if token else ""

        def deny(message: str, *, punish: bool = True) -> Verdict:
            trust_after = None
            if app is not None:
                trust_after = self.penalize(app["id"]) if punish else app["trust_index"]
            return Verdict(Action.DENY, message, trust_after, app_id if app else "")

        # 1. The submitting controller must be registered.
        if self._reader.controller(request.submitting_controller) is None:
            return deny(MSG_UNKNOWN_CONTROLLER)
        # 3a. A token must exist; without one, no application is
        # identifiable and no penalty applies.
        if token is None:
            return deny(MSG_TOKEN_REQUIRED, punish=False)
        # 2. Only the bound controller may spend the token.
        if token["controller_id"] != request.submitting_controller:
            return deny(MSG_CONTROLLER_MISMATCH)
        # 3b. The token must be live and its application present.
        if token["status"] != TokenStatus.ISSUED.value:
            message = (
                MSG_TOKEN_NOT_ISSUED
                if token["status"] == TokenStatus.NEW.value
                else MSG_TOKEN_EXPIRED
            )
            return deny(message)
        if app is None:
            return deny(MSG_UNKNOWN_APPLICATION, punish=False)
        # 4. The permission must come with the application's role.
        role = self._reader.role(app["role_id"])
        if (
            not request.permission_id
            or role is None
            or request.permission_id not in role["permissions"]
        ):
            return deny(MSG_UNAUTHORIZED)
        permission = self._reader.permission(request.permission_id)
        if permission is None:
            return deny(MSG_UNAUTHORIZED)
        # 5. The trust index must clear the resource object's bar.
        threshold = self._policy.threshold(permission["resource_object"])
        if app["trust_index"] < threshold:
            return deny(MSG_UNTRUSTED)
        return Verdict(Action.ACCEPT, MSG_ACCEPTED, app["trust_index"], app_id)

    def verify(self, request: VerificationRequest) -> Verdict:
        """Authorize and account in one step: the gateway's path."""
        verdict = self.authorize(request)
        self.account(request, verdict)
        return verdict

    # -- trust management ----------------------------------------------------

    def penalize(self, app_id: str) -> int:
        """One violation, one trust point, floored at zero."""
        with self._commit_lock:
            for _ in range(_PENALTY_RETRIES):
                app = self._reader.application(app_id)
                if app is None:
                    raise VerifierError("cannot penalize unknown application %r" % app_id)
                new_value = max(0, app["trust_index"] - 1)
                result = self._ledger.process(
                    build_proposal(
                        self._verifier,
                        "updateAppTrustIndex",
                        {"app-id": app_id, "trust-index": new_value},
                    )
                )
                if result.committed:
                    return new_value
                if "invalidated" not in result.message:
                    raise VerifierError("penalty rejected: %s" % result.message)
            raise VerifierError("penalty failed after %d attempts" % _PENALTY_RETRIES)

    def recover_trust(self, admin: Identity, app_id: str, value: int) -> int:
        """Administrative trust reset; inactive permissions reactivate as
        soon as their thresholds are met again."""
        result = self._ledger.process(
            build_proposal(
                admin, "updateAppTrustIndex", {"app-id": app_id, "trust-index": value}
            )
        )
        if not result.committed:
            raise VerifierError("trust recovery rejected: %s" % result.message)
        return result.response["trust_index"]

    def permission_states(self, app_id: str) -> list[dict]:
        """Per-permission activation view of an application's role under the
        current trust index."""
        app = self._reader.application(app_id)
        if app is None:
            return []
        role = self._reader.role(app["role_id"])
        states = []
        for permission_id in role["permissions"] if role else []:
            permission = self._reader.permission(permission_id)
            if permission is None:
                continue
            threshold = self._policy.threshold(permission["resource_object"])
            states.append(
                {
                    "permission_id": permission_id,
                    "resource_object": permission["resource_object"],
                    "threshold": threshold,
                    "active": app["trust_index"] >= threshold,
                }
            )
        return states

    # -- accounting ----------------------------------------------------------

    def account(self, request: VerificationRequest, verdict: Verdict) -> dict:
        """Commit the Verdict as one log-entry transaction."""
        payload = {
            "url": request.url,
            "data": request.data,
            "token-id": request.token_id,
            "http-method": request.http_method,
            "permission-id": request.permission_id,
            "app-id": verdict.application_id,
            "controller-id": request.submitting_controller,
            "action": verdict.action.value,
            "message": verdict.message,
        }
        with self._commit_lock:
            result = self._ledger.process(
                build_proposal(self._verifier, "addLogEntry", payload)
            )
        if not result.committed:
            raise VerifierError("accounting failed: %s" % result.message)
        return result.response

    def quota_verdict(self, app_id: str) -> Verdict:
        """The DENY used when an application exhausts its request quota."""
        app = self._reader.application(app_id)
        trust = app["trust_index"] if app else None
        return Verdict(Action.DENY, MSG_QUOTA, trust, app_id)
