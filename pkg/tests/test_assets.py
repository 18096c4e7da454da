"""Asset handler and access-rule tests: participant gating, payload
validation, token lifecycle, trust bounds, and referential integrity."""

from __future__ import annotations

import pytest

from nbgate.assets import (
    Operation,
    TokenStatus,
    check_acl,
)
from nbgate.ledger import ParticipantType

ADMIN = ParticipantType.ADMIN
APP = ParticipantType.APPLICATION
CTRL = ParticipantType.CONTROLLER


def seed_catalog(env, admin):
    env.ok(admin, "createPermission", {"id": "p-read", "name": "read stats", "resource-object": "statistics"})
    env.ok(admin, "createPermission", {"id": "p-write", "name": "write rules", "resource-object": "flowmod"})
    env.ok(admin, "createRole", {"id": "viewer", "name": "viewer", "permissions": ["p-read"]})
    env.ok(admin, "createRole", {"id": "editor", "name": "editor", "permissions": ["p-read", "p-write"], "priority": 5})


def seed_app(env, admin, app_id="app1", role="viewer", trust=100):
    env.ok(admin, "addApplication", {"id": app_id, "name": app_id, "role-id": role, "trust-index": trust})


def seed_controller(env, admin, controller_id="ctrl1", permissions=("p-read", "p-write")):
    env.ok(admin, "addController", {"id": controller_id, "name": controller_id, "permissions": list(permissions)})


# ---------------------------------------------------------------------------
# Applications
# ---------------------------------------------------------------------------


def test_admin_registers_application(env, admin):
    seed_catalog(env, admin)
    app = env.ok(admin, "addApplication", {"id": "app1", "name": "Monitor", "role-id": "viewer", "trust-index": 100})
    assert app == {"id": "app1", "name": "Monitor", "role_id": "viewer", "trust_index": 100}
    assert env.reader.application("app1") == app


def test_non_admin_cannot_register_application(env, admin, app1, ctrl1):
    seed_catalog(env, admin)
    payload = {"id": "appX", "name": "x", "role-id": "viewer", "trust-index": 50}
    assert "DENY" in env.rejected(app1, "addApplication", payload)
    assert "DENY" in env.rejected(ctrl1, "addApplication", payload)
    assert env.reader.application("appX") is None


def test_duplicate_application_id_rejected(env, admin):
    seed_catalog(env, admin)
    seed_app(env, admin)
    msg = env.rejected(admin, "addApplication", {"id": "app1", "name": "again", "role-id": "viewer", "trust-index": 10})
    assert "already in use" in msg


def test_application_id_cannot_reuse_controller_id(env, admin):
    seed_catalog(env, admin)
    seed_controller(env, admin)
    msg = env.rejected(admin, "addApplication", {"id": "ctrl1", "name": "x", "role-id": "viewer", "trust-index": 10})
    assert "already in use" in msg


@pytest.mark.parametrize("trust", [-1, 101, 3.5, "80", None, True])
def test_trust_index_bounds_enforced_on_registration(env, admin, trust):
    seed_catalog(env, admin)
    env.rejected(admin, "addApplication", {"id": "appX", "name": "x", "role-id": "viewer", "trust-index": trust})


def test_registration_requires_existing_role(env, admin):
    msg = env.rejected(admin, "addApplication", {"id": "appX", "name": "x", "role-id": "ghost", "trust-index": 10})
    assert "role" in msg and "not found" in msg


def test_update_application_and_role(env, admin):
    seed_catalog(env, admin)
    seed_app(env, admin)
    env.ok(admin, "updateApplication", {"id": "app1", "name": "Renamed"})
    assert env.reader.application("app1")["name"] == "Renamed"
    env.ok(admin, "updateAppRole", {"app-id": "app1", "role-id": "editor"})
    assert env.reader.application("app1")["role_id"] == "editor"
    assert "not found" in env.rejected(admin, "updateAppRole", {"app-id": "app1", "role-id": "ghost"})


def test_remove_application(env, admin):
    seed_catalog(env, admin)
    seed_app(env, admin)
    env.ok(admin, "removeApplication", {"app-id": "app1"})
    assert env.reader.application("app1") is None
    assert "not found" in env.rejected(admin, "removeApplication", {"app-id": "app1"})


# ---------------------------------------------------------------------------
# Trust index updates
# ---------------------------------------------------------------------------


def test_admin_may_set_trust_any_direction(env, admin):
    seed_catalog(env, admin)
    seed_app(env, admin, trust=50)
    env.ok(admin, "updateAppTrustIndex", {"app-id": "app1", "trust-index": 90})
    assert env.reader.application("app1")["trust_index"] == 90
    env.ok(admin, "updateAppTrustIndex", {"app-id": "app1", "trust-index": 10})
    assert env.reader.application("app1")["trust_index"] == 10


def test_controller_may_only_decrease_trust(env, admin, ctrl1):
    seed_catalog(env, admin)
    seed_app(env, admin, trust=80)
    env.ok(ctrl1, "updateAppTrustIndex", {"app-id": "app1", "trust-index": 79})
    assert env.reader.application("app1")["trust_index"] == 79
    msg = env.rejected(ctrl1, "updateAppTrustIndex", {"app-id": "app1", "trust-index": 80})
    assert "decrease" in msg
    assert env.reader.application("app1")["trust_index"] == 79
    # Setting the same value is a permitted no-op decrease.
    env.ok(ctrl1, "updateAppTrustIndex", {"app-id": "app1", "trust-index": 79})


def test_application_cannot_touch_trust(env, admin, app1):
    seed_catalog(env, admin)
    seed_app(env, admin)
    assert "DENY" in env.rejected(app1, "updateAppTrustIndex", {"app-id": "app1", "trust-index": 10})


@pytest.mark.parametrize("trust", [-1, 101])
def test_trust_update_bounds(env, admin, trust):
    seed_catalog(env, admin)
    seed_app(env, admin)
    env.rejected(admin, "updateAppTrustIndex", {"app-id": "app1", "trust-index": trust})


# ---------------------------------------------------------------------------
# Controllers
# ---------------------------------------------------------------------------


def test_controller_crud(env, admin):
    seed_catalog(env, admin)
    ctrl = env.ok(admin, "addController", {"id": "ctrl1", "name": "main", "permissions": ["p-read"]})
    assert ctrl["permissions"] == ["p-read"]
    env.ok(admin, "updateController", {"id": "ctrl1", "name": "main", "permissions": ["p-read", "p-write"]})
    assert env.reader.controller("ctrl1")["permissions"] == ["p-read", "p-write"]
    env.ok(admin, "removeController", {"controller-id": "ctrl1"})
    assert env.reader.controller("ctrl1") is None


def test_controller_requires_known_permissions(env, admin):
    msg = env.rejected(admin, "addController", {"id": "ctrl1", "name": "main", "permissions": ["ghost"]})
    assert "not found" in msg


def test_non_admin_cannot_manage_controllers(env, admin, app1, ctrl1):
    seed_catalog(env, admin)
    payload = {"id": "ctrlX", "name": "x", "permissions": []}
    assert "DENY" in env.rejected(app1, "addController", payload)
    assert "DENY" in env.rejected(ctrl1, "addController", payload)


# ---------------------------------------------------------------------------
# Permissions and roles
# ---------------------------------------------------------------------------


def test_permission_requires_known_resource_object(env, admin):
    msg = env.rejected(admin, "createPermission", {"id": "pX", "name": "x", "resource-object": "galaxy"})
    assert "unknown resource object" in msg


def test_duplicate_permission_rejected(env, admin):
    seed_catalog(env, admin)
    msg = env.rejected(admin, "createPermission", {"id": "p-read", "name": "x", "resource-object": "switch"})
    assert "already exists" in msg


def test_role_requires_existing_permissions(env, admin):
    msg = env.rejected(admin, "createRole", {"id": "rX", "name": "x", "permissions": ["ghost"]})
    assert "not found" in msg


def test_referenced_permission_cannot_be_removed(env, admin):
    seed_catalog(env, admin)
    msg = env.rejected(admin, "removePermission", {"permission-id": "p-write"})
    assert "referenced by role" in msg and "editor" in msg
    # Strip the reference, then removal goes through.
    env.ok(admin, "updateRole", {"id": "editor", "name": "editor", "permissions": ["p-read"]})
    env.ok(admin, "removePermission", {"permission-id": "p-write"})
    assert env.reader.permission("p-write") is None


def test_update_role_keeps_priority_unless_given(env, admin):
    seed_catalog(env, admin)
    env.ok(admin, "updateRole", {"id": "editor", "name": "editor", "permissions": ["p-read"]})
    assert env.reader.role("editor")["priority"] == 5
    env.ok(admin, "updateRole", {"id": "editor", "name": "editor", "permissions": ["p-read"], "priority": 9})
    assert env.reader.role("editor")["priority"] == 9


# ---------------------------------------------------------------------------
# Token lifecycle
# ---------------------------------------------------------------------------


def request_token(env, app_identity, controller_id="ctrl1"):
    return env.ok(app_identity, "requestAppToken", {"app-id": app_identity.id, "controller-id": controller_id})


def full_seed(env, admin):
    seed_catalog(env, admin)
    seed_app(env, admin, "app1")
    seed_app(env, admin, "app2")
    seed_controller(env, admin, "ctrl1")
    seed_controller(env, admin, "ctrl2")


def test_token_request_creates_new_token(env, admin, app1):
    full_seed(env, admin)
    token = request_token(env, app1)
    assert token["status"] == TokenStatus.NEW.value
    assert token["application_id"] == "app1"
    assert token["controller_id"] == "ctrl1"
    assert len(token["id"]) >= 32
    assert env.reader.token(token["id"]) == token
    assert env.reader.token_for("app1", "ctrl1") == token


def test_repeat_request_returns_same_pending_token(env, admin, app1):
    full_seed(env, admin)
    first = request_token(env, app1)
    second = request_token(env, app1)
    assert first["id"] == second["id"]
    assert len(env.reader.tokens()) == 1


def test_one_live_token_per_app_controller_pair(env, admin, app1):
    full_seed(env, admin)
    token = request_token(env, app1)
    env.ok(admin, "issueToken", {"token-id": token["id"]})
    # Still the same token while it is live.
    assert request_token(env, app1)["id"] == token["id"]
    env.ok(admin, "expireToken", {"token-id": token["id"]})
    fresh = request_token(env, app1)
    assert fresh["id"] != token["id"]
    live = [
        t
        for t in env.reader.tokens()
        if t["status"] != TokenStatus.EXPIRED.value
        and t["application_id"] == "app1"
        and t["controller_id"] == "ctrl1"
    ]
    assert len(live) == 1
    # Distinct controllers hold distinct tokens.
    other = request_token(env, app1, "ctrl2")
    assert other["id"] != fresh["id"]


def test_token_ids_are_proposal_deterministic(env, admin, app1, app2):
    full_seed(env, admin)
    a = request_token(env, app1)
    b = request_token(env, app2)
    assert a["id"] != b["id"]


def test_app_cannot_request_token_for_other_app(env, admin, app1):
    full_seed(env, admin)
    msg = env.rejected(app1, "requestAppToken", {"app-id": "app2", "controller-id": "ctrl1"})
    assert "themselves" in msg


def test_controller_and_admin_cannot_request_tokens(env, admin, ctrl1):
    full_seed(env, admin)
    payload = {"app-id": "app1", "controller-id": "ctrl1"}
    assert "DENY" in env.rejected(ctrl1, "requestAppToken", payload)
    assert "DENY" in env.rejected(admin, "requestAppToken", payload)


def test_token_requires_known_controller(env, admin, app1):
    full_seed(env, admin)
    msg = env.rejected(app1, "requestAppToken", {"app-id": "app1", "controller-id": "ghost"})
    assert "not found" in msg


def test_issue_transitions_and_guards(env, admin, app1, ctrl1):
    full_seed(env, admin)
    token = request_token(env, app1)
    assert "DENY" in env.rejected(app1, "issueToken", {"token-id": token["id"]})
    assert "DENY" in env.rejected(ctrl1, "issueToken", {"token-id": token["id"]})
    issued = env.ok(admin, "issueToken", {"token-id": token["id"]})
    assert issued["status"] == TokenStatus.ISSUED.value
    assert "only NEW tokens" in env.rejected(admin, "issueToken", {"token-id": token["id"]})
    assert "not found" in env.rejected(admin, "issueToken", {"token-id": "ghost"})


def test_expire_from_new_and_issued(env, admin, app1):
    full_seed(env, admin)
    token = request_token(env, app1)
    env.ok(admin, "expireToken", {"token-id": token["id"]})
    assert env.reader.token(token["id"])["status"] == TokenStatus.EXPIRED.value
    token2 = request_token(env, app1)
    env.ok(admin, "issueToken", {"token-id": token2["id"]})
    env.ok(admin, "expireToken", {"token-id": token2["id"]})
    assert env.reader.token(token2["id"])["status"] == TokenStatus.EXPIRED.value
    assert "already expired" in env.rejected(admin, "expireToken", {"token-id": token2["id"]})


def test_controller_may_expire_only_its_own_tokens(env, admin, app1, ctrl1, ctrl2):
    full_seed(env, admin)
    token = request_token(env, app1)  # bound to ctrl1
    assert "DENY" in env.rejected(ctrl2, "expireToken", {"token-id": token["id"]})
    env.ok(ctrl1, "expireToken", {"token-id": token["id"]})
    assert env.reader.token(token["id"])["status"] == TokenStatus.EXPIRED.value


def test_application_cannot_expire_tokens(env, admin, app1):
    full_seed(env, admin)
    token = request_token(env, app1)
    assert "DENY" in env.rejected(app1, "expireToken", {"token-id": token["id"]})


# ---------------------------------------------------------------------------
# Log entries
# ---------------------------------------------------------------------------

LOG_PAYLOAD = {
    "url": "/wm/core/controller/switches/json",
    "data": "",
    "token-id": "tok",
    "http-method": "GET",
    "permission-id": "p-read",
    "app-id": "app1",
    "controller-id": "ctrl1",
    "action": "ACCEPT",
    "message": "Accepted",
}


def test_controller_records_log_entry(env, admin, ctrl1):
    entry = env.ok(ctrl1, "addLogEntry", dict(LOG_PAYLOAD))
    assert entry["id"] == "log-1"
    assert set(entry) == {
        "id",
        "created_time",
        "url",
        "data",
        "token_id",
        "http_method",
        "permission_id",
        "application_id",
        "controller_id",
        "action",
        "message",
    }
    assert env.reader.logs() == [entry]
    assert env.reader.log_count() == 1


def test_log_sequence_and_order(env, ctrl1):
    for n in range(5):
        payload = dict(LOG_PAYLOAD)
        payload["message"] = "entry %d" % n
        env.ok(ctrl1, "addLogEntry", payload)
    entries = env.reader.logs()
    assert [e["id"] for e in entries] == ["log-%d" % n for n in range(1, 6)]
    assert env.reader.logs(offset=2, limit=2) == entries[2:4]


def test_only_controllers_may_log(env, admin, app1):
    assert "DENY" in env.rejected(app1, "addLogEntry", dict(LOG_PAYLOAD))
    assert "DENY" in env.rejected(admin, "addLogEntry", dict(LOG_PAYLOAD))


def test_log_entry_records_requesting_controller(env, ctrl2):
    # The submitting credential and the recorded controller may differ: the
    # verification service logs on behalf of the requesting controller.
    payload = dict(LOG_PAYLOAD)  # controller-id is ctrl1
    entry = env.ok(ctrl2, "addLogEntry", payload)
    assert entry["controller_id"] == "ctrl1"


def test_log_action_vocabulary(env, ctrl1):
    payload = dict(LOG_PAYLOAD)
    payload["action"] = "MAYBE"
    assert "action" in env.rejected(ctrl1, "addLogEntry", payload)


# ---------------------------------------------------------------------------
# Access rule engine (table vectors)
# ---------------------------------------------------------------------------

APP_PROFILE = {"id": "app1", "name": "x", "role_id": "viewer", "trust_index": 50}
TOKEN_APP1 = {"id": "t", "application_id": "app1", "controller_id": "ctrl1", "status": "NEW"}
CTRL_PROFILE = {"id": "ctrl1", "name": "x", "permissions": []}


@pytest.mark.parametrize(
    "participant_id,ptype,op,rtype,resource,expected",
    [
        ("admin", ADMIN, Operation.DELETE, "Application", APP_PROFILE, True),
        ("admin", ADMIN, Operation.CREATE, "Role", None, True),
        ("app1", APP, Operation.READ, "Application", APP_PROFILE, True),
        ("app2", APP, Operation.READ, "Application", APP_PROFILE, False),
        ("app1", APP, Operation.UPDATE, "Application", APP_PROFILE, False),
        ("app1", APP, Operation.CREATE, "Token", None, True),
        ("app1", APP, Operation.READ, "Token", TOKEN_APP1, True),
        ("app2", APP, Operation.READ, "Token", TOKEN_APP1, False),
        ("ctrl1", CTRL, Operation.READ, "Controller", CTRL_PROFILE, True),
        ("ctrl2", CTRL, Operation.READ, "Controller", CTRL_PROFILE, False),
        ("ctrl1", CTRL, Operation.CREATE, "VerifyRequest", None, True),
        ("app1", APP, Operation.CREATE, "VerifyRequest", None, False),
        ("ctrl1", CTRL, Operation.UPDATE, "Token", TOKEN_APP1, True),
        ("ctrl2", CTRL, Operation.UPDATE, "Token", TOKEN_APP1, False),
        ("ctrl1", CTRL, Operation.DELETE, "Application", APP_PROFILE, False),
        ("ctrl1", CTRL, Operation.CREATE, "LogEntry", None, True),
    ],
)
def test_access_rule_vectors(participant_id, ptype, op, rtype, resource, expected):
    assert check_acl(participant_id, ptype, op, rtype, resource) is expected
