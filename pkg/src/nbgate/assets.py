"""World-state assets and the transaction handlers that govern them.

Five asset families live in the ledger's world state: application profiles
(with a role and a trust index), controllers, permissions, roles, and
access tokens, plus an append-style log of verification outcomes. Every
mutation goes through one of sixteen transaction types. Each handler first
gates on the submitter's participant class, then consults the access
control list, then validates the payload, so a denied call never reaches
the world state.

Access rules are first-match-wins over an ordered list with an implicit
final deny. The defaults encode: admins may do anything; an application
may read its own profile, request tokens, and read its own tokens; a
controller may read itself, submit verification requests and their log
entries, expire its own tokens, and lower (never raise) an application's
trust index.
"""

from __future__ import annotations

import base64
import enum
import hashlib
from dataclasses import dataclass
from typing import Callable

from .ledger import HandlerError, Ledger, ParticipantType, TxContext, canonical_json
from .policy import RESOURCE_OBJECTS, TRUST_MAX, TRUST_MIN

APP_PREFIX = "app/"
CONTROLLER_PREFIX = "controller/"
PERMISSION_PREFIX = "permission/"
ROLE_PREFIX = "role/"
TOKEN_PREFIX = "token/"
TOKEN_INDEX_PREFIX = "tokidx/"
LOG_PREFIX = "log/"
LOG_SEQ_KEY = "logseq"


class TokenStatus(str, enum.Enum):
    NEW = "NEW"
    ISSUED = "ISSUED"
    EXPIRED = "EXPIRED"


# ---------------------------------------------------------------------------
# Access control list
# ---------------------------------------------------------------------------


class Operation(str, enum.Enum):
    CREATE = "CREATE"
    READ = "READ"
    UPDATE = "UPDATE"
    DELETE = "DELETE"


Condition = Callable[[str, dict], bool]


@dataclass(frozen=True)
class AclRule:
    """One ordered entry: participant class, operation, resource type, an
    optional relation between the caller and the resource, and the outcome."""

    participant: ParticipantType | None  # None matches any class
    operation: Operation | None  # None matches any operation
    resource: str | None  # None matches any resource type
    condition: Condition | None
    allow: bool
    description: str


def _resource_is_self(participant_id: str, resource: dict) -> bool:
    return resource.get("id") == participant_id


def _token_of_caller(participant_id: str, resource: dict) -> bool:
    return resource.get("application_id") == participant_id


def _token_for_caller(participant_id: str, resource: dict) -> bool:
    return resource.get("controller_id") == participant_id


def default_acl_rules() -> list[AclRule]:
    return [
        AclRule(ParticipantType.ADMIN, None, None, None, True, "admin may do anything"),
        AclRule(
            ParticipantType.APPLICATION,
            Operation.READ,
            "Application",
            _resource_is_self,
            True,
            "application may read its own profile",
        ),
        AclRule(
            ParticipantType.APPLICATION,
            Operation.CREATE,
            "Token",
            None,
            True,
            "application may request tokens",
        ),
        AclRule(
            ParticipantType.APPLICATION,
            Operation.READ,
            "Token",
            _token_of_caller,
            True,
            "application may read its own tokens",
        ),
        AclRule(
            ParticipantType.CONTROLLER,
            Operation.READ,
            "Controller",
            _resource_is_self,
            True,
            "controller may read its own record",
        ),
        AclRule(
            ParticipantType.CONTROLLER,
            Operation.CREATE,
            "VerifyRequest",
            None,
            True,
            "controller may submit verification requests",
        ),
        AclRule(
            ParticipantType.CONTROLLER,
            Operation.UPDATE,
            "ApplicationTrust",
            None,
            True,
            "controller may adjust trust (handlers cap it to decreases)",
        ),
        AclRule(
            ParticipantType.CONTROLLER,
            Operation.UPDATE,
            "Token",
            _token_for_caller,
            True,
            "controller may expire tokens bound to it",
        ),
        AclRule(
            ParticipantType.CONTROLLER,
            Operation.CREATE,
            "LogEntry",
            None,
            True,
            "controller may record verification outcomes",
        ),
    ]


DEFAULT_ACL_RULES = default_acl_rules()


def check_acl(
    participant_id: str,
    participant_type: ParticipantType | None,
    operation: Operation,
    resource_type: str,
    resource: dict | None = None,
    rules: list[AclRule] | None = None,
) -> bool:
    """First matching rule decides; no match means deny."""
    for rule in DEFAULT_ACL_RULES if rules is None else rules:
        if rule.participant is not None and rule.participant != participant_type:
            continue
        if rule.operation is not None and rule.operation != operation:
            continue
        if rule.resource is not None and rule.resource != resource_type:
            continue
        if rule.condition is not None and not rule.condition(participant_id, resource or {}):
            continue
        return rule.allow
    return False


# ---------------------------------------------------------------------------
# Handler helpers
# ---------------------------------------------------------------------------


def _require_type(ctx: TxContext, *allowed: ParticipantType) -> None:
    if ctx.submitter_type not in allowed:
        raise HandlerError(
            "DENY: %s is not permitted to submit this transaction"
            % (ctx.submitter_type.value if ctx.submitter_type else "unknown participant")
        )


def _require_acl(
    ctx: TxContext, operation: Operation, resource_type: str, resource: dict | None = None
) -> None:
    if not check_acl(ctx.submitter, ctx.submitter_type, operation, resource_type, resource):
        raise HandlerError("DENY: access rule violation for %s %s" % (operation.value, resource_type))


def _field(params: dict, name: str) -> object:
    if name not in params:
        raise HandlerError("missing field %r" % name)
    return params[name]


def _str_field(params: dict, name: str) -> str:
    value = _field(params, name)
    if not isinstance(value, str) or not value:
        raise HandlerError("field %r must be a non-empty string" % name)
    return value


def _trust_field(params: dict, name: str = "trust-index") -> int:
    value = _field(params, name)
    if not isinstance(value, int) or isinstance(value, bool):
        raise HandlerError("field %r must be an integer" % name)
    if not TRUST_MIN <= value <= TRUST_MAX:
        raise HandlerError("trust index must be in [%d, %d]" % (TRUST_MIN, TRUST_MAX))
    return value


def _list_field(params: dict, name: str) -> list[str]:
    value = _field(params, name)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise HandlerError("field %r must be a list of ids" % name)
    return value


def _get_or_fail(ctx: TxContext, key: str, description: str) -> dict:
    value = ctx.get(key)
    if value is None:
        raise HandlerError("%s not found" % description)
    return value


def _require_fresh_id(ctx: TxContext, asset_id: str) -> None:
    # Applications and controllers share one participant namespace.
    if ctx.get(APP_PREFIX + asset_id) is not None or ctx.get(CONTROLLER_PREFIX + asset_id) is not None:
        raise HandlerError("id %r is already in use" % asset_id)


def _check_permissions_exist(ctx: TxContext, permission_ids: list[str]) -> None:
    for permission_id in permission_ids:
        if ctx.get(PERMISSION_PREFIX + permission_id) is None:
            raise HandlerError("permission %r not found" % permission_id)


# ---------------------------------------------------------------------------
# Application handlers
# ---------------------------------------------------------------------------


def add_application(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    app = {
        "id": _str_field(ctx.params, "id"),
        "name": _str_field(ctx.params, "name"),
        "role_id": _str_field(ctx.params, "role-id"),
        "trust_index": _trust_field(ctx.params),
    }
    _require_acl(ctx, Operation.CREATE, "Application", app)
    _require_fresh_id(ctx, app["id"])
    _get_or_fail(ctx, ROLE_PREFIX + app["role_id"], "role %r" % app["role_id"])
    ctx.put(APP_PREFIX + app["id"], app)
    return app


def update_application(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    app_id = _str_field(ctx.params, "id")
    app = _get_or_fail(ctx, APP_PREFIX + app_id, "application %r" % app_id)
    _require_acl(ctx, Operation.UPDATE, "Application", app)
    app["name"] = _str_field(ctx.params, "name")
    ctx.put(APP_PREFIX + app_id, app)
    return app


def update_app_role(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    app_id = _str_field(ctx.params, "app-id")
    role_id = _str_field(ctx.params, "role-id")
    app = _get_or_fail(ctx, APP_PREFIX + app_id, "application %r" % app_id)
    _require_acl(ctx, Operation.UPDATE, "Application", app)
    _get_or_fail(ctx, ROLE_PREFIX + role_id, "role %r" % role_id)
    app["role_id"] = role_id
    ctx.put(APP_PREFIX + app_id, app)
    return app


def update_app_trust_index(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
    app_id = _str_field(ctx.params, "app-id")
    value = _trust_field(ctx.params)
    app = _get_or_fail(ctx, APP_PREFIX + app_id, "application %r" % app_id)
    _require_acl(ctx, Operation.UPDATE, "ApplicationTrust", app)
    if ctx.submitter_type is ParticipantType.CONTROLLER and value > app["trust_index"]:
        raise HandlerError("DENY: controllers may only decrease the trust index")
    app["trust_index"] = value
    ctx.put(APP_PREFIX + app_id, app)
    return app


def remove_application(ctx: TxContext) -> None:
    _require_type(ctx, ParticipantType.ADMIN)
    app_id = _str_field(ctx.params, "app-id")
    app = _get_or_fail(ctx, APP_PREFIX + app_id, "application %r" % app_id)
    _require_acl(ctx, Operation.DELETE, "Application", app)
    ctx.delete(APP_PREFIX + app_id)
    return None


# ---------------------------------------------------------------------------
# Controller handlers
# ---------------------------------------------------------------------------


def add_controller(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    controller = {
        "id": _str_field(ctx.params, "id"),
        "name": _str_field(ctx.params, "name"),
        "permissions": _list_field(ctx.params, "permissions"),
    }
    _require_acl(ctx, Operation.CREATE, "Controller", controller)
    _require_fresh_id(ctx, controller["id"])
    _check_permissions_exist(ctx, controller["permissions"])
    ctx.put(CONTROLLER_PREFIX + controller["id"], controller)
    return controller


def update_controller(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    controller_id = _str_field(ctx.params, "id")
    controller = _get_or_fail(
        ctx, CONTROLLER_PREFIX + controller_id, "controller %r" % controller_id
    )
    _require_acl(ctx, Operation.UPDATE, "Controller", controller)
    controller["name"] = _str_field(ctx.params, "name")
    controller["permissions"] = _list_field(ctx.params, "permissions")
    _check_permissions_exist(ctx, controller["permissions"])
    ctx.put(CONTROLLER_PREFIX + controller_id, controller)
    return controller


def remove_controller(ctx: TxContext) -> None:
    _require_type(ctx, ParticipantType.ADMIN)
    controller_id = _str_field(ctx.params, "controller-id")
    controller = _get_or_fail(
        ctx, CONTROLLER_PREFIX + controller_id, "controller %r" % controller_id
    )
    _require_acl(ctx, Operation.DELETE, "Controller", controller)
    ctx.delete(CONTROLLER_PREFIX + controller_id)
    return None


# ---------------------------------------------------------------------------
# Permission and role handlers
# ---------------------------------------------------------------------------


def create_permission(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    permission = {
        "id": _str_field(ctx.params, "id"),
        "name": _str_field(ctx.params, "name"),
        "resource_object": _str_field(ctx.params, "resource-object"),
    }
    _require_acl(ctx, Operation.CREATE, "Permission", permission)
    if permission["resource_object"] not in RESOURCE_OBJECTS:
        raise HandlerError("unknown resource object %r" % permission["resource_object"])
    if ctx.get(PERMISSION_PREFIX + permission["id"]) is not None:
        raise HandlerError("permission %r already exists" % permission["id"])
    ctx.put(PERMISSION_PREFIX + permission["id"], permission)
    return permission


def remove_permission(ctx: TxContext) -> None:
    _require_type(ctx, ParticipantType.ADMIN)
    permission_id = _str_field(ctx.params, "permission-id")
    permission = _get_or_fail(
        ctx, PERMISSION_PREFIX + permission_id, "permission %r" % permission_id
    )
    _require_acl(ctx, Operation.DELETE, "Permission", permission)
    # Refuse while any role still references the permission.
    for role_id in _list_role_ids(ctx):
        role = ctx.get(ROLE_PREFIX + role_id)
        if role and permission_id in role["permissions"]:
            raise HandlerError(
                "permission %r is still referenced by role %r" % (permission_id, role_id)
            )
    ctx.delete(PERMISSION_PREFIX + permission_id)
    return None


def create_role(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    role = {
        "id": _str_field(ctx.params, "id"),
        "name": _str_field(ctx.params, "name"),
        "permissions": _list_field(ctx.params, "permissions"),
        "priority": ctx.params.get("priority", 0),
    }
    _require_acl(ctx, Operation.CREATE, "Role", role)
    if not isinstance(role["priority"], int) or isinstance(role["priority"], bool):
        raise HandlerError("field 'priority' must be an integer")
    if ctx.get(ROLE_PREFIX + role["id"]) is not None:
        raise HandlerError("role %r already exists" % role["id"])
    _check_permissions_exist(ctx, role["permissions"])
    ctx.put(ROLE_PREFIX + role["id"], role)
    _track_role_id(ctx, role["id"])
    return role


def update_role(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    role_id = _str_field(ctx.params, "id")
    role = _get_or_fail(ctx, ROLE_PREFIX + role_id, "role %r" % role_id)
    _require_acl(ctx, Operation.UPDATE, "Role", role)
    role["name"] = _str_field(ctx.params, "name")
    role["permissions"] = _list_field(ctx.params, "permissions")
    if "priority" in ctx.params:
        if not isinstance(ctx.params["priority"], int) or isinstance(ctx.params["priority"], bool):
            raise HandlerError("field 'priority' must be an integer")
        role["priority"] = ctx.params["priority"]
    _check_permissions_exist(ctx, role["permissions"])
    ctx.put(ROLE_PREFIX + role_id, role)
    return role


# Roles are enumerated during referential-integrity checks; handlers cannot
# scan the state store, so a catalog key tracks role ids.
ROLE_CATALOG_KEY = "role_catalog"


def _track_role_id(ctx: TxContext, role_id: str) -> None:
    catalog = ctx.get(ROLE_CATALOG_KEY) or []
    if role_id not in catalog:
        catalog.append(role_id)
        ctx.put(ROLE_CATALOG_KEY, catalog)


def _list_role_ids(ctx: TxContext) -> list[str]:
    return ctx.get(ROLE_CATALOG_KEY) or []


# ---------------------------------------------------------------------------
# Token handlers
# ---------------------------------------------------------------------------


def _token_id_for(proposal_id: str, app_id: str, controller_id: str) -> str:
    digest = hashlib.sha256(canonical_json([proposal_id, app_id, controller_id])).digest()
    return base64.urlsafe_b64encode(digest).decode().rstrip("=")


def request_app_token(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.APPLICATION)
    app_id = _str_field(ctx.params, "app-id")
    controller_id = _str_field(ctx.params, "controller-id")
    if app_id != ctx.submitter:
        raise HandlerError("DENY: applications may request tokens only for themselves")
    _require_acl(ctx, Operation.CREATE, "Token")
    _get_or_fail(ctx, APP_PREFIX + app_id, "application %r" % app_id)
    _get_or_fail(ctx, CONTROLLER_PREFIX + controller_id, "controller %r" % controller_id)

    index_key = TOKEN_INDEX_PREFIX + app_id + "/" + controller_id
    index = ctx.get(index_key)
    if index is not None:
        current = ctx.get(TOKEN_PREFIX + index["token_id"])
        if current is not None and current["status"] != TokenStatus.EXPIRED.value:
            # One live token per pair: re-requesting returns the same token.
            return current

    token = {
        "id": _token_id_for(ctx.proposal_id, app_id, controller_id),
        "application_id": app_id,
        "controller_id": controller_id,
        "status": TokenStatus.NEW.value,
        "created_at": ctx.timestamp,
    }
    ctx.put(TOKEN_PREFIX + token["id"], token)
    ctx.put(index_key, {"token_id": token["id"]})
    return token


def issue_token(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN)
    token_id = _str_field(ctx.params, "token-id")
    token = _get_or_fail(ctx, TOKEN_PREFIX + token_id, "token %r" % token_id)
    _require_acl(ctx, Operation.UPDATE, "Token", token)
    if token["status"] != TokenStatus.NEW.value:
        raise HandlerError("only NEW tokens can be issued (token is %s)" % token["status"])
    token["status"] = TokenStatus.ISSUED.value
    ctx.put(TOKEN_PREFIX + token_id, token)
    return token


def expire_token(ctx: TxContext) -> dict:
    _require_type(ctx, ParticipantType.ADMIN, ParticipantType.CONTROLLER)
    token_id = _str_field(ctx.params, "token-id")
    token = _get_or_fail(ctx, TOKEN_PREFIX + token_id, "token %r" % token_id)
    _require_acl(ctx, Operation.UPDATE, "Token", token)
    if token["status"] == TokenStatus.EXPIRED.value:
        raise HandlerError("token %r is already expired" % token_id)
    token["status"] = TokenStatus.EXPIRED.value
    ctx.put(TOKEN_PREFIX + token_id, token)
    # The pair index keeps pointing at the expired token so authentication
    # can still distinguish "expired" from "never requested"; the next
    # token request for the pair overwrites it.
    return token


# ---------------------------------------------------------------------------
# Log handler
# ---------------------------------------------------------------------------

LOG_ACTIONS = ("ACCEPT", "DENY")


def add_log_entry(ctx: TxContext) -> dict:
    # The verification service signs these with its own controller-class
    # credential; the controller-id field records the requesting controller.
    _require_type(ctx, ParticipantType.CONTROLLER)
    _require_acl(ctx, Operation.CREATE, "LogEntry")
    action = _str_field(ctx.params, "action")
    if action not in LOG_ACTIONS:
        raise HandlerError("action must be one of %s" % (LOG_ACTIONS,))
    controller_id = _str_field(ctx.params, "controller-id")
    sequence = (ctx.get(LOG_SEQ_KEY) or 0) + 1
    entry = {
        "id": "log-%d" % sequence,
        "created_time": ctx.timestamp,
        "url": _field(ctx.params, "url"),
        "data": ctx.params.get("data", ""),
        "token_id": ctx.params.get("token-id", ""),
        "http_method": _field(ctx.params, "http-method"),
        "permission_id": ctx.params.get("permission-id", ""),
        "application_id": ctx.params.get("app-id", ""),
        "controller_id": controller_id,
        "action": action,
        "message": _str_field(ctx.params, "message"),
    }
    ctx.put(LOG_SEQ_KEY, sequence)
    ctx.put(LOG_PREFIX + "%012d" % sequence, entry)
    return entry


# ---------------------------------------------------------------------------
# Registration and read access
# ---------------------------------------------------------------------------

HANDLERS = {
    "addApplication": add_application,
    "updateApplication": update_application,
    "updateAppRole": update_app_role,
    "updateAppTrustIndex": update_app_trust_index,
    "removeApplication": remove_application,
    "addController": add_controller,
    "updateController": update_controller,
    "removeController": remove_controller,
    "createPermission": create_permission,
    "removePermission": remove_permission,
    "createRole": create_role,
    "updateRole": update_role,
    "requestAppToken": request_app_token,
    "issueToken": issue_token,
    "expireToken": expire_token,
    "addLogEntry": add_log_entry,
}


def install_handlers(ledger: Ledger) -> None:
    for tx_type, handler in HANDLERS.items():
        ledger.register_handler(tx_type, handler)


class StateReader:
    """Read-only world-state queries shared by the verifier and gateway."""

    def __init__(self, ledger: Ledger) -> None:
        self._ledger = ledger

    def application(self, app_id: str) -> dict | None:
        return self._ledger.query_state(APP_PREFIX + app_id)

    def applications(self) -> list[dict]:
        return list(self._ledger.scan_state(APP_PREFIX).values())

    def controller(self, controller_id: str) -> dict | None:
        return self._ledger.query_state(CONTROLLER_PREFIX + controller_id)

    def controllers(self) -> list[dict]:
        return list(self._ledger.scan_state(CONTROLLER_PREFIX).values())

    def permission(self, permission_id: str) -> dict | None:
        return self._ledger.query_state(PERMISSION_PREFIX + permission_id)

    def permissions(self) -> list[dict]:
        return list(self._ledger.scan_state(PERMISSION_PREFIX).values())

    def role(self, role_id: str) -> dict | None:
        return self._ledger.query_state(ROLE_PREFIX + role_id)

    def roles(self) -> list[dict]:
        return list(self._ledger.scan_state(ROLE_PREFIX).values())

    def token(self, token_id: str) -> dict | None:
        return self._ledger.query_state(TOKEN_PREFIX + token_id)

    def tokens(self, status: str | None = None) -> list[dict]:
        found = list(self._ledger.scan_state(TOKEN_PREFIX).values())
        if status is not None:
            found = [token for token in found if token["status"] == status]
        return sorted(found, key=lambda token: (token["created_at"], token["id"]))

    def token_for(self, app_id: str, controller_id: str) -> dict | None:
        index = self._ledger.query_state(TOKEN_INDEX_PREFIX + app_id + "/" + controller_id)
        if index is None:
            return None
        return self.token(index["token_id"])

    def logs(self, offset: int = 0, limit: int | None = None) -> list[dict]:
        entries = list(self._ledger.scan_state(LOG_PREFIX).values())
        if limit is None:
            return entries[offset:]
        return entries[offset : offset + limit]

    def log_count(self) -> int:
        return self._ledger.query_state(LOG_SEQ_KEY) or 0
